import warnings

# numba probes TBB at import; the sandbox ships an older TBB and numba falls
# back to another threading layer, which is fine
warnings.filterwarnings("ignore", message=".*TBB.*", category=Warning)
