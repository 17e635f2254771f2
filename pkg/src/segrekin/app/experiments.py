"""Experiment drivers: build the model objects from a RunConfig, run, and
emit CSV time series, binary field snapshots, optional figures and the
run manifest."""

from __future__ import annotations

import datetime
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

import segrekin
from segrekin.app import figures as figmod
from segrekin.app.config import RunConfig
from segrekin.app.runio import sha256_of, write_csv, write_field
from segrekin.collision.maxwell import MaxwellianParams, discrete_maxwellian_batch, maxwellian
from segrekin.collision.quadrature import (
    AngularQuadrature,
    CrossSection,
    boltzmann_J,
    invariant_moments,
    symmetrized_collision,
)
from segrekin.collision.entropy import entropy_production
from segrekin.collision.transport import transport_coefficients
from segrekin.collision.linearized import bgk_linearized
from segrekin.domain import GridSpec, ScalarField, SpeciesDistributions, make_grids
from segrekin.equilibrium import (
    coexistence_order_parameter,
    critical_temperature,
    interface_hydro_state,
    interface_profile,
)
from segrekin.hydro.ins import INSState, dispersion_growth_rate, ins_step, marginal_temperature
from segrekin.hydro.vns import HydroState, compute_Q, vns_step
from segrekin.kac import PotentialSpec, forces, tabulate_kernel
from segrekin.kinetic import KineticState, hydro_moments, run as kinetic_run


@dataclass
class RunManifest:
    experiment: str
    config: dict
    version: str
    seed: int
    started: str
    finished: str = ""
    files: list = field(default_factory=list)
    status: str = "ok"

    def add(self, path: Path):
        self.files.append({"name": path.name, "sha256": sha256_of(path)})

    def write(self, out_dir: Path) -> Path:
        path = out_dir / "manifest.json"
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.__dict__, fh, indent=2, sort_keys=True)
            fh.write("\n")
        return path


def _now() -> str:
    return datetime.datetime.now(datetime.timezone.utc).isoformat()


def _build_grids(cfg: RunConfig):
    return make_grids(
        GridSpec(
            dim=cfg["grid.dim"],
            extent=cfg["grid.extent"],
            cells=cfg["grid.cells"],
            dim_v=cfg["grid.vdim"],
            v_max=cfg["grid.vmax"],
            nodes_per_axis=cfg["grid.vnodes"],
        )
    )


def _build_kernel(cfg: RunConfig, grid):
    return tabulate_kernel(
        PotentialSpec(
            cfg["potential.shape"], cfg["potential.radius"], cfg["potential.amplitude"]
        ),
        grid,
    )


def _momentum_cols(dim_v: int) -> list[str]:
    return [f"momentum_{'xyz'[a]}" for a in range(dim_v)]


# ---------------------------------------------------------------------------


def _run_phase_diagram(cfg: RunConfig, out: Path, manifest: RunManifest):
    grid, _ = _build_grids(cfg)
    kernel = _build_kernel(cfg, grid)
    rho = cfg["physics.rho"]
    t_c = critical_temperature(rho, kernel)
    fracs = np.linspace(cfg["physics.t_min_frac"], cfg["physics.t_max_frac"],
                        cfg["physics.t_points"])
    rows = []
    for f in fracs:
        T = float(f * t_c)
        phi = coexistence_order_parameter(T, rho, kernel)
        rows.append((T, phi, T / t_c))
    manifest.add(write_csv(out / "phase_diagram.csv", ["T", "phi_star", "T_over_Tc"], rows))
    if cfg["output.figures"]:
        manifest.add(
            figmod.phase_diagram_figure(
                out / "phase_diagram.png",
                [r[0] for r in rows], [r[1] for r in rows], t_c,
            )
        )


def _run_interface(cfg: RunConfig, out: Path, manifest: RunManifest):
    grid, _ = _build_grids(cfg)
    kernel = _build_kernel(cfg, grid)
    prof = interface_profile(
        cfg["physics.temperature"],
        cfg["physics.rho"],
        kernel,
        grid,
        init=cfg["solver.seed_profile"],
        tol=cfg["solver.tol"],
    )
    x = grid.axis_coords(0)
    n1, n2 = prof.n1.values, prof.n2.values
    rows = zip(x, n1, n2, n1 + n2, n1 - n2)
    manifest.add(write_csv(out / "interface.csv", ["x", "n1", "n2", "rho", "phi"], rows))
    hs = interface_hydro_state(prof)
    q = compute_Q(hs, kernel)
    manifest.add(
        write_csv(
            out / "interface_summary.csv",
            ["T", "residual", "converged", "q_max"],
            [(prof.T, prof.residual, prof.converged, float(np.max(np.abs(q.q))))],
        )
    )
    if cfg["output.snapshots"]:
        manifest.add(write_field(out / "interface_n1.bin", n1))
        manifest.add(write_field(out / "interface_n2.bin", n2))
    if cfg["output.figures"]:
        manifest.add(figmod.interface_figure(out / "interface.png", x, n1, n2))


def _kinetic_initial(cfg: RunConfig, grid, vgrid):
    x = grid.axis_coords(0)
    if grid.dim == 2:
        x = grid.coords()[0]
    rho0 = cfg["physics.rho"]
    pert = cfg["physics.perturbation"]
    phi0 = cfg["physics.phi0"]
    T0 = cfg["physics.temperature"]
    u0 = cfg["physics.u0"]
    k1 = 2.0 * np.pi / grid.extent[0]
    # complementary species bumps: total density flat unless phi0 says else
    n_r = 0.5 * rho0 * (1.0 + pert * np.cos(k1 * x)) + 0.5 * phi0
    n_b = 0.5 * rho0 * (1.0 - pert * np.cos(k1 * x)) - 0.5 * phi0
    ux = u0 * np.sin(k1 * x)
    cells = int(np.prod(grid.shape))
    u = np.zeros((vgrid.dim_v, cells))
    u[0] = ux.reshape(-1)
    t_arr = np.full(cells, T0)
    f_r = discrete_maxwellian_batch(n_r.reshape(-1), u, t_arr, vgrid).reshape(
        grid.shape + vgrid.shape
    )
    f_b = discrete_maxwellian_batch(n_b.reshape(-1), u, t_arr, vgrid).reshape(
        grid.shape + vgrid.shape
    )
    return SpeciesDistributions(grid, vgrid, f_r, f_b)


def _run_kinetic(cfg: RunConfig, out: Path, manifest: RunManifest):
    grid, vgrid = _build_grids(cfg)
    kernel = _build_kernel(cfg, grid) if cfg["potential.amplitude"] > 0 else None
    dists = _kinetic_initial(cfg, grid, vgrid)
    state = KineticState(
        dists, epsilon=cfg["physics.eps"], scaling=cfg["physics.scaling"]
    )
    records, final = kinetic_run(
        state,
        kernel,
        cfg["physics.nu_collision"],
        cfg["solver.t_end"],
        cfg["solver.dt"],
        stride=cfg["solver.stride"],
        scheme=cfg["solver.scheme"],
    )
    mom_cols = _momentum_cols(vgrid.dim_v)
    header = (
        ["step", "time", "mass_r", "mass_b"]
        + mom_cols
        + ["energy_kinetic", "energy_interaction", "energy_total", "entropy", "min_f"]
    )
    rows = [
        (step, t, d.mass_r, d.mass_b, *d.momentum,
         d.energy_kinetic, d.energy_interaction, d.energy_total, d.entropy, d.min_f)
        for step, t, d in records
    ]
    manifest.add(write_csv(out / "kinetic_timeseries.csv", header, rows))
    n_r, n_b = final.dists.densities()
    manifest.add(
        write_csv(
            out / "kinetic_final_fields.csv",
            ["x", "n_r", "n_b", "rho", "phi"],
            zip(grid.axis_coords(0), n_r.reshape(-1), n_b.reshape(-1),
                (n_r + n_b).reshape(-1), (n_r - n_b).reshape(-1)),
        )
    )
    if cfg["output.snapshots"]:
        manifest.add(write_field(out / "kinetic_f_r.bin", final.dists.f_r))
        manifest.add(write_field(out / "kinetic_f_b.bin", final.dists.f_b))
    if cfg["output.figures"]:
        manifest.add(
            figmod.timeseries_figure(
                out / "kinetic_conservation.png", header, rows,
                ["mass_r", "energy_total", "entropy"],
            )
        )


def _hydro_initial(cfg: RunConfig, grid):
    x = grid.axis_coords(0) if grid.dim == 1 else grid.coords()[0]
    rho0 = cfg["physics.rho"]
    pert = cfg["physics.perturbation"]
    k1 = 2.0 * np.pi / grid.extent[0]
    rho = rho0 * (1.0 + pert * np.cos(k1 * x))
    phi = cfg["physics.phi0"] + rho0 * pert * np.sin(k1 * x)
    u = np.zeros((grid.dim,) + grid.shape)
    u[0] = cfg["physics.u0"] * np.sin(k1 * x)
    T = np.full(grid.shape, cfg["physics.temperature"])
    return HydroState(grid, rho, u, T, phi)


def _run_hydro(cfg: RunConfig, out: Path, manifest: RunManifest):
    grid, vgrid = _build_grids(cfg)
    kernel = _build_kernel(cfg, grid)
    state = _hydro_initial(cfg, grid)
    eps = cfg["physics.eps"]
    # eps = 0 runs the inviscid (Euler-level) system; eps > 0 the full one
    coeffs = None
    if eps > 0:
        coeffs = transport_coefficients(
            "bgk_analytic",
            MaxwellianParams.resting(cfg["physics.rho"], cfg["physics.temperature"], 3),
            nu_collision=cfg["physics.nu_collision"],
        )
    dt = cfg["solver.dt"]
    n_steps = max(1, int(round(cfg["solver.t_end"] / dt)))
    stride = cfg["solver.stride"]
    dv = grid.cell_volume
    rows = []

    def emit(step, st):
        ke = 0.5 * dv * float(np.sum(st.rho * np.sum(st.u**2, axis=0)))
        ei = 1.5 * dv * float(np.sum(st.rho * st.T))
        rows.append(
            (step, step * dt, dv * float(st.rho.sum()), dv * float(st.phi.sum()),
             dv * float(np.sum(st.rho * st.u[0])), ke + ei,
             float(st.rho.min()), float(st.T.min()))
        )

    emit(0, state)
    for step in range(1, n_steps + 1):
        state = vns_step(state, kernel, coeffs, eps, dt,
                         rk=cfg["solver.rk"], gradients=cfg["solver.gradients"])
        if step % stride == 0 or step == n_steps:
            emit(step, state)
    header = ["step", "time", "rho_total", "phi_total", "momentum_x",
              "energy_internal_kinetic", "rho_min", "T_min"]
    manifest.add(write_csv(out / "hydro_timeseries.csv", header, rows))
    x = grid.axis_coords(0)
    manifest.add(
        write_csv(
            out / "hydro_final_fields.csv",
            ["x", "rho", "u_x", "T", "phi"],
            zip(x, state.rho.reshape(-1), state.u[0].reshape(-1),
                state.T.reshape(-1), state.phi.reshape(-1)),
        )
    )
    if cfg["output.snapshots"]:
        for name, vals in (("rho", state.rho), ("T", state.T), ("phi", state.phi)):
            manifest.add(write_field(out / f"hydro_{name}.bin", vals))
        manifest.add(write_field(out / "hydro_u.bin", state.u))
    if cfg["output.figures"]:
        manifest.add(
            figmod.field_figure(
                out / "hydro_fields.png", x,
                {"rho": state.rho.reshape(-1), "phi": state.phi.reshape(-1),
                 "u_x": state.u[0].reshape(-1), "T": state.T.reshape(-1)},
            )
        )


def _run_ins(cfg: RunConfig, out: Path, manifest: RunManifest):
    grid, _ = _build_grids(cfg)
    kernel = _build_kernel(cfg, grid)
    mode = cfg["physics.seed_mode"]
    amp = cfg["physics.seed_amplitude"]
    x = grid.axis_coords(0) if grid.dim == 1 else grid.coords()[0]
    k1 = 2.0 * np.pi * mode / grid.extent[0]
    phi = amp * np.cos(k1 * x)
    state = INSState(
        grid, np.zeros((grid.dim,) + grid.shape), phi,
        cfg["physics.rho_bar"], cfg["physics.T_bar"],
    )
    lam = dispersion_growth_rate(
        (mode,) + (0,) * (grid.dim - 1),
        cfg["physics.rho_bar"], cfg["physics.T_bar"], cfg["physics.D_diff"], kernel,
    )
    dt = cfg["solver.dt"]
    n_steps = max(1, int(round(cfg["solver.t_end"] / dt)))
    stride = cfg["solver.stride"]
    rows = []
    mode_idx = (mode,) + (0,) * (grid.dim - 1)

    def emit(step, st):
        fhat = np.fft.fftn(st.phi)
        cells = int(np.prod(grid.shape))
        measured = 2.0 * abs(fhat[mode_idx]) / cells
        rows.append(
            (step, step * dt, measured, amp * np.exp(lam * step * dt),
             float(np.sqrt(np.mean(st.phi**2))), st.divergence_defect())
        )

    emit(0, state)
    for step in range(1, n_steps + 1):
        state = ins_step(state, kernel, cfg["physics.nu_visc"], cfg["physics.kappa"],
                         cfg["physics.D_diff"], dt)
        if step % stride == 0 or step == n_steps:
            emit(step, state)
    header = ["step", "time", "mode_amplitude", "predicted_amplitude", "phi_rms",
              "div_defect"]
    manifest.add(write_csv(out / "ins_timeseries.csv", header, rows))
    manifest.add(
        write_csv(
            out / "ins_summary.csv",
            ["mode", "growth_rate", "marginal_temperature", "T_bar"],
            [(mode, lam, marginal_temperature(kernel, mode_idx, cfg["physics.rho_bar"]),
              cfg["physics.T_bar"])],
        )
    )
    if cfg["output.figures"]:
        manifest.add(
            figmod.timeseries_figure(out / "ins_mode.png", header, rows,
                                     ["mode_amplitude", "predicted_amplitude"])
        )


def _run_transport(cfg: RunConfig, out: Path, manifest: RunManifest):
    _, vgrid = _build_grids(cfg)
    p = MaxwellianParams.resting(
        cfg["physics.rho"], cfg["physics.temperature"], vgrid.dim_v
    )
    nu_c = cfg["physics.nu_collision"]
    analytic = transport_coefficients("bgk_analytic", p, nu_collision=nu_c)
    op_l = bgk_linearized(p, vgrid, nu_c, kind="L")
    op_g = bgk_linearized(p, vgrid, nu_c, kind="Gamma")
    numeric = transport_coefficients("numeric_operator", p, operator_L=op_l,
                                     operator_G=op_g)
    rows = [
        ("bgk_analytic", analytic.nu_visc, analytic.kappa, analytic.D_diff),
        ("numeric_operator", numeric.nu_visc, numeric.kappa, numeric.D_diff),
    ]
    manifest.add(
        write_csv(out / "transport.csv", ["method", "nu_visc", "kappa", "D_diff"], rows)
    )
    if cfg["output.figures"]:
        manifest.add(figmod.transport_figure(out / "transport.png", rows))


def _run_validate(cfg: RunConfig, out: Path, manifest: RunManifest):
    """Quick pass over the structural invariants; one row per property."""
    rng = np.random.default_rng(cfg["output.seed"])
    rows = []

    def check(name, value, tol):
        rows.append((name, value, tol, "pass" if value <= tol else "FAIL"))

    # action-reaction balance of the forces
    grid, _ = make_grids(GridSpec(dim=1, extent=1.0, cells=96))
    kernel = tabulate_kernel(PotentialSpec("gaussian", 0.05, 1.0), grid)
    n_r = ScalarField(grid, rng.random(96) + 0.1)
    n_b = ScalarField(grid, rng.random(96) + 0.1)
    _, _, f_r, f_b = forces(kernel, n_r, n_b)
    tot = abs(float(np.sum(n_r.values * f_r.values[0] + n_b.values * f_b.values[0])))
    scale = float(np.max(np.abs(n_r.values * f_r.values[0]))) + 1e-300
    check("force_action_reaction", tot / scale, 1e-10)

    # collision structure on a small velocity grid
    from segrekin.domain import VelocityGrid

    vg = VelocityGrid(3, 6.0, 10)
    m = maxwellian(MaxwellianParams(1.0, (0.2, 0.0, -0.1), 0.9), vg)
    out_j = boltzmann_J(m, m, vg)
    check("collision_maxwellian_balance", float(np.max(np.abs(out_j)) / m.max()), 1e-10)
    f = (0.1 + rng.random(vg.shape)) * m
    g = (0.1 + rng.random(vg.shape)) * m
    jf, jg = symmetrized_collision(f, g, vg)
    mom = invariant_moments(jf + jg, vg)
    l1 = float(np.sum(np.abs(jf) + np.abs(jg)) * vg.weight)
    check("collision_invariant_moments", float(np.max(np.abs(mom))) / l1, 1e-10)

    # entropy production signs
    grid1, _ = make_grids(GridSpec(dim=1, cells=4, dim_v=3, nodes_per_axis=10))
    fr = np.broadcast_to(f, grid1.shape + vg.shape).copy()
    fb = np.broadcast_to(g, grid1.shape + vg.shape).copy()
    ep = entropy_production(SpeciesDistributions(grid1, vg, fr, fb), "exact_J")
    check("entropy_production_sign",
          float(max(-ep.n_1.min(), -ep.n_2.min(), -ep.n_cross.min(), 0.0)), 1e-12)

    # demixing threshold audit between the two conventions
    kern2 = tabulate_kernel(PotentialSpec("tophat", 0.25, 1.0), grid)
    t_c = critical_temperature(2.0, kern2)
    t_marg = marginal_temperature(kern2, (0,), 2.0)
    check("threshold_audit", abs(t_c - t_marg), 1e-10)

    manifest.add(
        write_csv(out / "validate.csv", ["property", "value", "tolerance", "status"], rows)
    )
    if any(r[3] == "FAIL" for r in rows):
        raise RuntimeError("validation found failing invariants; see validate.csv")


_RUNNERS = {
    "phase-diagram": _run_phase_diagram,
    "interface": _run_interface,
    "kinetic-run": _run_kinetic,
    "hydro-run": _run_hydro,
    "ins-run": _run_ins,
    "transport": _run_transport,
    "validate": _run_validate,
}


def run_experiment(cfg: RunConfig, out_dir: Path, seed: int | None = None) -> RunManifest:
    """Dispatch to the experiment driver; returns the written manifest."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    if seed is not None:
        cfg.values["output.seed"] = int(seed)
        cfg.echo["output.seed"] = int(seed)
    manifest = RunManifest(
        experiment=cfg.experiment,
        config=cfg.echo,
        version=segrekin.__version__,
        seed=cfg["output.seed"],
        started=_now(),
    )
    try:
        _RUNNERS[cfg.experiment](cfg, out, manifest)
    except Exception:
        manifest.status = "error"
        manifest.finished = _now()
        manifest.write(out)
        raise
    manifest.finished = _now()
    manifest.write(out)
    return manifest
