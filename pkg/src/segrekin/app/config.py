"""Flat `section.key = value` run configuration with strict validation.

Grammar: one assignment per line, `#` comments, blank lines ignored.
Keys are two-level (section.key); values are integers, reals, booleans
(true/false) or strings (bare or double-quoted).  Unknown keys, missing
required keys and type mismatches are errors that name the offending key
and line.
"""

from __future__ import annotations

from dataclasses import dataclass, field

EXPERIMENTS = (
    "phase-diagram",
    "interface",
    "kinetic-run",
    "hydro-run",
    "ins-run",
    "transport",
    "validate",
)


class ConfigError(ValueError):
    pass


def _parse_scalar(token: str):
    if token.startswith('"') and token.endswith('"') and len(token) >= 2:
        return token[1:-1]
    low = token.lower()
    if low in ("true", "false"):
        return low == "true"
    try:
        return int(token)
    except ValueError:
        pass
    try:
        return float(token)
    except ValueError:
        pass
    return token


# key -> (python type, default); REQUIRED means no default
REQUIRED = object()

_GRID_KEYS = {
    "grid.dim": (int, 1),
    "grid.cells": (int, 64),
    "grid.extent": (float, 1.0),
    "grid.vdim": (int, 1),
    "grid.vmax": (float, 6.0),
    "grid.vnodes": (int, 32),
}
_POTENTIAL_KEYS = {
    "potential.shape": (str, "tophat"),
    "potential.radius": (float, 0.25),
    "potential.amplitude": (float, 1.0),
}
_SOLVER_KEYS = {
    "solver.dt": (float, 1e-3),
    "solver.t_end": (float, 1.0),
    "solver.stride": (int, 10),
    "solver.scheme": (str, "spectral"),
    "solver.rk": (str, "rk2"),
    "solver.gradients": (str, "spectral"),
}
_OUTPUT_KEYS = {
    "output.figures": (bool, False),
    "output.snapshots": (bool, False),
    "output.seed": (int, 0),
}

SCHEMAS: dict[str, dict] = {
    "phase-diagram": {
        **_GRID_KEYS,
        **_POTENTIAL_KEYS,
        **_OUTPUT_KEYS,
        "physics.rho": (float, 2.0),
        "physics.t_min_frac": (float, 0.05),
        "physics.t_max_frac": (float, 1.2),
        "physics.t_points": (int, 60),
    },
    "interface": {
        **_GRID_KEYS,
        **_POTENTIAL_KEYS,
        **_OUTPUT_KEYS,
        "physics.rho": (float, 2.0),
        "physics.temperature": (float, REQUIRED),
        "solver.seed_profile": (str, "tanh_seed"),
        "solver.tol": (float, 1e-9),
    },
    "kinetic-run": {
        **_GRID_KEYS,
        **_POTENTIAL_KEYS,
        **_SOLVER_KEYS,
        **_OUTPUT_KEYS,
        "physics.rho": (float, 2.0),
        "physics.phi0": (float, 0.0),
        "physics.temperature": (float, 0.5),
        "physics.eps": (float, 1.0),
        "physics.nu_collision": (float, 5.0),
        "physics.scaling": (str, "euler"),
        "physics.perturbation": (float, 0.05),
        "physics.u0": (float, 0.0),
    },
    "hydro-run": {
        **_GRID_KEYS,
        **_POTENTIAL_KEYS,
        **_SOLVER_KEYS,
        **_OUTPUT_KEYS,
        "physics.rho": (float, 2.0),
        "physics.phi0": (float, 0.0),
        "physics.temperature": (float, 0.5),
        "physics.eps": (float, 0.0),
        "physics.nu_collision": (float, 5.0),
        "physics.perturbation": (float, 0.05),
        "physics.u0": (float, 0.0),
    },
    "ins-run": {
        **_GRID_KEYS,
        **_POTENTIAL_KEYS,
        **_SOLVER_KEYS,
        **_OUTPUT_KEYS,
        "physics.rho_bar": (float, 2.0),
        "physics.T_bar": (float, 0.4),
        "physics.D_diff": (float, 0.5),
        "physics.nu_visc": (float, 0.05),
        "physics.kappa": (float, 0.05),
        "physics.seed_mode": (int, 1),
        "physics.seed_amplitude": (float, 1e-6),
    },
    "transport": {
        **_GRID_KEYS,
        **_POTENTIAL_KEYS,
        **_OUTPUT_KEYS,
        "physics.rho": (float, 1.0),
        "physics.temperature": (float, 1.0),
        "physics.nu_collision": (float, 1.0),
        "physics.sigma": (float, 1.0),
    },
    "validate": {**_GRID_KEYS, **_POTENTIAL_KEYS, **_OUTPUT_KEYS},
}


@dataclass
class RunConfig:
    experiment: str
    values: dict = field(default_factory=dict)
    echo: dict = field(default_factory=dict)

    def __getitem__(self, key):
        return self.values[key]

    def get(self, key, default=None):
        return self.values.get(key, default)


def parse_config(text: str, experiment: str) -> RunConfig:
    """Parse and validate against the experiment's schema; defaults applied
    and echoed back."""
    if experiment not in SCHEMAS:
        raise ConfigError(
            f"unknown experiment {experiment!r}; choose from {', '.join(EXPERIMENTS)}"
        )
    schema = SCHEMAS[experiment]
    seen: dict[str, object] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'section.key = value', got {raw!r}")
        key, _, val = line.partition("=")
        key = key.strip()
        val = val.strip()
        if key.count(".") != 1:
            raise ConfigError(f"line {lineno}: key {key!r} must be section.key")
        if key in seen:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        if key not in schema:
            raise ConfigError(
                f"line {lineno}: unknown key {key!r} for experiment {experiment!r}"
            )
        want, _default = schema[key]
        parsed = _parse_scalar(val)
        if want is float and isinstance(parsed, int) and not isinstance(parsed, bool):
            parsed = float(parsed)
        if not isinstance(parsed, want) or (want is not bool and isinstance(parsed, bool)):
            raise ConfigError(
                f"line {lineno}: key {key!r} expects {want.__name__}, got {val!r}"
            )
        seen[key] = parsed

    values = {}
    for key, (want, default) in schema.items():
        if key in seen:
            values[key] = seen[key]
        elif default is REQUIRED:
            raise ConfigError(f"missing required key {key!r} for {experiment!r}")
        else:
            values[key] = default
    return RunConfig(experiment=experiment, values=values, echo=dict(sorted(values.items())))
