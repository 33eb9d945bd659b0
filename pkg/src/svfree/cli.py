"""Run orchestration: simulate / verify / sweep subcommands and report emission.

JSON config in, CSV/JSON reports out. Exit codes: 0 success, 1 verification
failure, 2 solver non-convergence or flow-map degeneracy, 3 config error.
Identical configs produce byte-identical CSV outputs (the summary JSON also
carries a wall-time field, which naturally varies).
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import math
import os
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import eulerian, jet, picard, weighted_calculus as wc
from .errors import (
    ConfigurationError,
    SvfreeError,
    ValidationError,
)
from .fd_oracle import fd_oracle_solve
from .galerkin import (
    GalerkinBasis,
    ModalField,
    assemble_forcing,
    assemble_mass,
    assemble_stiffness,
    energy_identity_residual,
    solve_linearized,
)
from .jet import E_SUMMAND_WEIGHTS, LOW_SUMMAND_WEIGHTS
from .profile import (
    Field,
    build_grid,
    differentiate,
    quadrature,
    sample_height_profile,
    sample_velocity,
)

__all__ = [
    "RunConfig",
    "RunSummary",
    "CheckResult",
    "load_config",
    "run_simulation",
    "run_verification_suite",
    "emit_report",
    "main",
]

log = logging.getLogger(__name__)

SCHEMA_VERSION = 1
OUT_DIR_ENV = "SVFREE_OUT"

EXIT_OK = 0
EXIT_VERIFICATION = 1
EXIT_SOLVER = 2
EXIT_CONFIG = 3

_SCHEMES = ("implicit-euler", "crank-nicolson")
_SOLVERS = ("galerkin", "fd-oracle", "both")


@dataclass(frozen=True)
class RunConfig:
    profile: dict = field(default_factory=lambda: {"kind": "parabolic", "amplitude": 1.0})
    u0: dict = field(default_factory=lambda: {"kind": "zero"})
    n_nodes: int = 401
    n_modes: int = 32
    dt: float = 1e-4
    t_final: float = 0.05
    picard_tol: float = 1e-10
    max_iter: int = 50
    scheme: str = "implicit-euler"
    solver: str = "galerkin"
    initial_guess: str = "u0"
    windows: int = 1
    out_dir: str = "out"
    emit: dict = field(default_factory=lambda: {
        "energy": True, "contraction": True, "snapshots": 5, "boundary": True,
    })

    def n_steps(self) -> int:
        return round(self.t_final / self.dt)

    def picard_settings(self) -> picard.PicardSettings:
        return picard.PicardSettings(
            t_final=self.t_final,
            dt=self.dt,
            n_modes=self.n_modes,
            picard_tol=self.picard_tol,
            max_iter=self.max_iter,
            scheme=self.scheme,
            initial_guess=self.initial_guess,
            windows=self.windows,
        )


@dataclass(frozen=True)
class RunSummary:
    converged: bool
    iterations: int
    final_contraction_ratio: float
    eta_x_min: float
    eta_x_max: float
    max_energy_gap: float
    wall_time_s: float


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str


def _check_positive(key, value):
    if not (isinstance(value, (int, float)) and math.isfinite(value) and value > 0):
        raise ConfigurationError(f"config field '{key}' must be a positive number, got {value!r}")


def _validate_config(cfg: RunConfig) -> RunConfig:
    if cfg.n_nodes < 5 or cfg.n_nodes % 2 == 0:
        raise ConfigurationError(f"config field 'n_nodes' must be odd and >= 5, got {cfg.n_nodes}")
    if cfg.n_modes < 1:
        raise ConfigurationError(f"config field 'n_modes' must be >= 1, got {cfg.n_modes}")
    for key in ("dt", "t_final", "picard_tol"):
        _check_positive(key, getattr(cfg, key))
    if cfg.max_iter < 1:
        raise ConfigurationError(f"config field 'max_iter' must be >= 1, got {cfg.max_iter}")
    if cfg.windows < 1:
        raise ConfigurationError(f"config field 'windows' must be >= 1, got {cfg.windows}")
    steps = cfg.t_final / cfg.dt
    if abs(steps - round(steps)) > 1e-9 * max(1.0, steps) or round(steps) < 1:
        raise ConfigurationError(
            f"config fields 't_final'/'dt' must divide evenly, got {cfg.t_final}/{cfg.dt}"
        )
    if cfg.scheme not in _SCHEMES:
        raise ConfigurationError(f"config field 'scheme' must be one of {_SCHEMES}, got {cfg.scheme!r}")
    if cfg.solver not in _SOLVERS:
        raise ConfigurationError(f"config field 'solver' must be one of {_SOLVERS}, got {cfg.solver!r}")
    if cfg.initial_guess not in ("u0", "identity"):
        raise ConfigurationError(
            f"config field 'initial_guess' must be 'u0' or 'identity', got {cfg.initial_guess!r}"
        )
    if not isinstance(cfg.profile, dict) or "kind" not in cfg.profile:
        raise ConfigurationError("config field 'profile' must be an object with a 'kind'")
    if not isinstance(cfg.u0, dict) or "kind" not in cfg.u0:
        raise ConfigurationError("config field 'u0' must be an object with a 'kind'")
    emit = dict(cfg.emit)
    known_emit = {"energy", "contraction", "snapshots", "boundary"}
    unknown = set(emit) - known_emit
    if unknown:
        raise ConfigurationError(f"unknown emit flag(s): {sorted(unknown)}")
    for key, default in (("energy", True), ("contraction", True), ("snapshots", 5), ("boundary", True)):
        emit.setdefault(key, default)
    for key in ("energy", "contraction", "boundary"):
        if not isinstance(emit[key], bool):
            raise ConfigurationError(f"config field 'emit.{key}' must be boolean")
    if not isinstance(emit["snapshots"], int) or emit["snapshots"] < 0:
        raise ConfigurationError("config field 'emit.snapshots' must be a nonnegative integer")
    return dataclasses.replace(cfg, emit=emit)


def config_from_dict(data: dict) -> RunConfig:
    if not isinstance(data, dict):
        raise ConfigurationError("config root must be a JSON object")
    known = {f.name for f in dataclasses.fields(RunConfig)} | {"schema_version"}
    unknown = set(data) - known
    if unknown:
        raise ConfigurationError(f"unknown config field(s): {sorted(unknown)}")
    data = {k: v for k, v in data.items() if k != "schema_version"}
    try:
        cfg = RunConfig(**data)
    except TypeError as exc:
        raise ConfigurationError(f"malformed config: {exc}") from exc
    return _validate_config(cfg)


def load_config(path) -> RunConfig:
    p = Path(path)
    if not p.exists():
        raise ConfigurationError(f"config file not found: {p}")
    try:
        data = json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"config file {p} is not valid JSON: {exc}") from exc
    return config_from_dict(data)


def build_problem(cfg: RunConfig):
    grid = build_grid(cfg.n_nodes)
    pparams = {k: v for k, v in cfg.profile.items() if k != "kind"}
    profile = sample_height_profile(cfg.profile["kind"], pparams, grid)
    uparams = {k: v for k, v in cfg.u0.items() if k != "kind"}
    u0 = sample_velocity(cfg.u0["kind"], uparams, grid)
    return grid, profile, u0


# ---------------------------------------------------------------------------
# report emission


def _fmt(x) -> str:
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return f"{float(x):.17g}"


ENERGY_COLUMNS = ["t"] + list(E_SUMMAND_WEIGHTS) + list(LOW_SUMMAND_WEIGHTS) + [
    "E_total", "lowE_total", "within_apriori",
]


def emit_report(kind: str, data, path) -> Path:
    """Write one report file; CSV for time series, JSON for summaries."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    try:
        if kind == "energy":
            lines = [",".join(ENERGY_COLUMNS)]
            for rep in data:
                row = [rep.t] + [rep.summands[k] for k in E_SUMMAND_WEIGHTS]
                row += [rep.summands[k] for k in LOW_SUMMAND_WEIGHTS]
                row += [rep.E_total, rep.lowE_total, rep.within_apriori]
                lines.append(",".join(_fmt(v) for v in row))
            path.write_text("\n".join(lines) + "\n")
        elif kind == "contraction":
            lines = ["iteration,sup_diff,grad_diff,ratio"]
            for rep in data:
                lines.append(
                    ",".join(_fmt(v) for v in (rep.iteration, rep.sup_diff, rep.grad_diff, rep.ratio))
                )
            path.write_text("\n".join(lines) + "\n")
        elif kind == "snapshot":
            lines = ["y,rho,u"]
            for y, r, u in zip(data.y, data.rho, data.u):
                lines.append(",".join(_fmt(v) for v in (y, r, u)))
            path.write_text("\n".join(lines) + "\n")
        elif kind == "snapshot-header":
            payload = {
                "schema_version": SCHEMA_VERSION,
                "t": data.t,
                "boundary": list(data.boundary),
                "boundary_velocity": list(data.boundary_velocity),
            }
            path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
        elif kind == "boundary":
            lines = [
                "t,vx_left,vx_right,ux_left,ux_right,"
                "stress_left,stress_right,soundspeed_slope_left,soundspeed_slope_right"
            ]
            for rep in data:
                row = (
                    rep.t, *rep.vx_at_boundary, *rep.ux_at_boundary,
                    *rep.stress_at_boundary, *rep.soundspeed_slope,
                )
                lines.append(",".join(_fmt(v) for v in row))
            path.write_text("\n".join(lines) + "\n")
        elif kind == "trajectory":
            times, values = data
            n = values.shape[1]
            lines = ["t," + ",".join(f"v{i}" for i in range(n))]
            for t, row in zip(times, values):
                lines.append(_fmt(t) + "," + ",".join(_fmt(v) for v in row))
            path.write_text("\n".join(lines) + "\n")
        elif kind == "summary":
            payload = {"schema_version": SCHEMA_VERSION, **dataclasses.asdict(data)}
            path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
        elif kind == "diff":
            payload = {"schema_version": SCHEMA_VERSION, **data}
            path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
        elif kind == "verification":
            payload = {
                "schema_version": SCHEMA_VERSION,
                "passed": all(c.passed for c in data),
                "checks": [dataclasses.asdict(c) for c in data],
            }
            path.write_text(json.dumps(payload, indent=2) + "\n")
        elif kind == "sweep":
            lines = [
                "t_final,converged,iterations,final_ratio,eta_x_min,eta_x_max,within_apriori_all"
            ]
            for row in data:
                lines.append(",".join(_fmt(v) for v in row))
            path.write_text("\n".join(lines) + "\n")
        else:
            raise ConfigurationError(f"unknown report kind {kind!r}")
    except OSError as exc:
        raise SvfreeError(f"failed to write report {path}: {exc}") from exc
    return path


# ---------------------------------------------------------------------------
# simulate


def _snapshot_times(cfg: RunConfig) -> list[float]:
    count = cfg.emit["snapshots"]
    if count <= 0:
        return []
    steps = cfg.n_steps()
    idx = np.unique(np.round(np.linspace(0, steps, min(count, steps + 1))).astype(int))
    return [i * cfg.dt for i in idx]


def _energy_reports(sol, times) -> list:
    reports = []
    m0 = None
    for t in times:
        rep = jet.energy_high(sol, t, m0)
        if m0 is None:
            m0 = rep.M0
        reports.append(rep)
    return reports


def _emit_galerkin_outputs(cfg: RunConfig, out: Path, profile, sol) -> float:
    max_gap = float("nan")
    if cfg.emit["contraction"]:
        emit_report("contraction", sol.history, out / "contraction.csv")
    if cfg.emit["energy"]:
        reports = _energy_reports(sol, list(sol.times))
        emit_report("energy", reports, out / "energy.csv")
        max_gap = max(abs(r.E_total - r.lowE_total) for r in reports)
        if any(r.boundary_pole for r in reports):
            log.warning(
                "energy summands carry vacuum-boundary poles (incompatible "
                "initial data); endpoint values are Hadamard finite parts"
            )
        violations = [r.t for r in reports if not r.within_apriori]
        if violations:
            log.warning(
                "a-priori energy ceiling E <= 2*M0 violated at %d stored times "
                "(first at t=%g)", len(violations), violations[0],
            )
    if cfg.emit["boundary"]:
        reps = [eulerian.boundary_diagnostics(profile, sol, t) for t in sol.times]
        emit_report("boundary", reps, out / "boundary.csv")
    for k, t in enumerate(_snapshot_times(cfg)):
        snap = eulerian.eulerian_fields(profile, sol, t, n_samples=401)
        emit_report("snapshot", snap, out / f"snapshot_{k:03d}.csv")
        emit_report("snapshot-header", snap, out / f"snapshot_{k:03d}.json")
    return max_gap


def _weighted_l2_diff(profile, galerkin_sol, fd_sol, t) -> float:
    vg = galerkin_sol.velocity(t).values
    vf = fd_sol.velocity(t).values
    return math.sqrt(max(quadrature((vg - vf) ** 2, 1, profile), 0.0))


def run_simulation(cfg: RunConfig) -> RunSummary:
    """Solve per the configured solver(s) and emit the requested reports.

    Solver failures still write the partial reports (contraction history,
    summary with converged=false) before propagating.
    """
    t0 = time.perf_counter()
    out = Path(os.environ.get(OUT_DIR_ENV, cfg.out_dir))
    out.mkdir(parents=True, exist_ok=True)
    grid, profile, u0 = build_problem(cfg)

    sol = None
    fd = None
    try:
        if cfg.solver in ("galerkin", "both"):
            sol = picard.solve_nonlinear(profile, u0, cfg.picard_settings())
        if cfg.solver in ("fd-oracle", "both"):
            fd = fd_oracle_solve(profile, u0, cfg.t_final, cfg.dt)
    except SvfreeError as exc:
        history = getattr(exc, "history", None)
        if history and cfg.emit["contraction"]:
            emit_report("contraction", history, out / "contraction.csv")
        summary = RunSummary(
            converged=False,
            iterations=len(history) if history else 0,
            final_contraction_ratio=history[-1].ratio if history else float("nan"),
            eta_x_min=float("nan"),
            eta_x_max=float("nan"),
            max_energy_gap=float("nan"),
            wall_time_s=time.perf_counter() - t0,
        )
        emit_report("summary", summary, out / "summary.json")
        raise

    max_gap = float("nan")
    if sol is not None:
        max_gap = _emit_galerkin_outputs(cfg, out, profile, sol)
        emit_report(
            "trajectory",
            (sol.times, sol.coeffs @ sol.basis.table(0)),
            out / ("trajectory_galerkin.csv" if cfg.solver == "both" else "trajectory.csv"),
        )
    if fd is not None:
        emit_report(
            "trajectory",
            (fd.times, fd.v),
            out / ("trajectory_fd.csv" if cfg.solver == "both" else "trajectory.csv"),
        )
        if cfg.emit["energy"] and sol is None:
            log.info(
                "energy monitoring needs the spectral solution; skipped for "
                "the finite-difference oracle"
            )
        if cfg.emit["boundary"] and sol is None:
            reps = [eulerian.boundary_diagnostics(profile, fd, t) for t in fd.times]
            emit_report("boundary", reps, out / "boundary.csv")
        for k, t in enumerate(_snapshot_times(cfg)):
            if sol is None:
                snap = eulerian.eulerian_fields(profile, fd, t, n_samples=401)
                emit_report("snapshot", snap, out / f"snapshot_{k:03d}.csv")
                emit_report("snapshot-header", snap, out / f"snapshot_{k:03d}.json")
    if sol is not None and fd is not None:
        sampled = list(sol.times[:: max(1, len(sol.times) // 50)]) + [sol.times[-1]]
        diffs = {
            "final_weighted_l2_diff": _weighted_l2_diff(profile, sol, fd, cfg.t_final),
            "max_weighted_l2_diff": max(
                _weighted_l2_diff(profile, sol, fd, t) for t in sampled
            ),
        }
        emit_report("diff", diffs, out / "diff.json")

    if sol is not None:
        eta_min, eta_max = sol.eta_x_min, sol.eta_x_max
        iterations = sol.iterations
        final_ratio = sol.history[-1].ratio if sol.history else float("nan")
    else:
        eta_min, eta_max = fd.eta_x_min, fd.eta_x_max
        iterations = 0
        final_ratio = float("nan")
    summary = RunSummary(
        converged=True,
        iterations=iterations,
        final_contraction_ratio=final_ratio,
        eta_x_min=eta_min,
        eta_x_max=eta_max,
        max_energy_gap=max_gap,
        wall_time_s=time.perf_counter() - t0,
    )
    emit_report("summary", summary, out / "summary.json")
    return summary


# ---------------------------------------------------------------------------
# verification suite


def _identity_family(grid):
    """Test family {1, x, x^2, cos(pi x), cos(3 pi x)} with exact derivatives."""
    x = grid.nodes
    return [
        ("one", np.ones_like(x), np.zeros_like(x)),
        ("x", x.copy(), np.ones_like(x)),
        ("x^2", x**2, 2 * x),
        ("cos(pi x)", np.cos(np.pi * x), -np.pi * np.sin(np.pi * x)),
        ("cos(3 pi x)", np.cos(3 * np.pi * x), -3 * np.pi * np.sin(3 * np.pi * x)),
    ]


def run_verification_suite(
    cfg: RunConfig, profile_override=None, out_path=None
) -> list[CheckResult]:
    """Execute every runtime-checkable invariant; any failure names its check.

    Writes the machine-readable pass/fail table to out_path when given.
    """
    checks: list[CheckResult] = []

    def add(name, passed, detail):
        checks.append(CheckResult(name, bool(passed), detail))

    grid, profile, u0 = build_problem(cfg)
    if profile_override is not None:
        profile = profile_override

    # grid uniformity
    gaps = np.diff(grid.nodes)
    defect = float(np.max(np.abs(gaps - grid.spacing)))
    add("grid-uniformity", defect <= 1e-14, f"max spacing defect {defect:.2e}")

    # physical vacuum condition on the active profile
    try:
        vals = profile.values
        d = np.minimum(grid.nodes, 1.0 - grid.nodes)
        ok = (
            vals[0] == 0.0
            and vals[-1] == 0.0
            and np.all(vals[1:-1] > 0.0)
            and np.all(vals[1:-1] >= profile.c1 * d[1:-1] - 1e-12)
            and np.all(vals[1:-1] <= profile.c2 * d[1:-1] + 1e-12)
            and 1e-10 < abs(profile.derivative_values(1)[0])
            and 1e-10 < abs(profile.derivative_values(1)[-1])
        )
        add("physical-vacuum", ok, f"c1={profile.c1:.4g}, c2={profile.c2:.4g}")
    except SvfreeError as exc:
        add("physical-vacuum", False, str(exc))

    # quadrature exactness on cubics
    x = grid.nodes
    cubic = 1.0 - 2.0 * x + 3.0 * x**2 - 4.0 * x**3
    exact = 1.0 - 1.0 + 1.0 - 1.0
    err = abs(quadrature(cubic, 0, profile) - exact)
    add("quadrature-cubic-exactness", err <= 1e-13, f"cubic error {err:.2e}")

    # spectral differentiation composes exactly
    basis = GalerkinBasis(min(cfg.n_modes, 16), grid)
    coeffs = np.zeros(basis.n_modes)
    coeffs[min(1, basis.n_modes - 1)] = 1.0
    mf = ModalField(coeffs, basis)
    twice = differentiate(differentiate(mf, 1), 1).values
    second = differentiate(mf, 2).values
    err = float(np.max(np.abs(twice - second)))
    add("spectral-derivative-consistency", err <= 1e-12, f"compose defect {err:.2e}")

    # basis orthonormality
    defect = basis.orthonormality_defect()
    add("basis-orthonormality", defect <= 1e-10, f"gram defect {defect:.2e}")

    # closed-form assembly oracles (parabolic a=1, unit Jacobian)
    para = sample_height_profile("parabolic", {"amplitude": 1.0}, grid)
    b2 = GalerkinBasis(2, grid)
    mass = assemble_mass(para, b2)
    stiff = assemble_stiffness(para, b2, np.ones(grid.n_nodes))
    force = assemble_forcing(para, b2, np.ones(grid.n_nodes))
    m_err = abs(mass[0, 0] - 1.0 / 6.0)
    s_err = abs(stiff[1, 1] - (np.pi**2 / 6.0 + 0.5))
    add("assembly-mass-closed-form", m_err <= 1e-8, f"|M00 - 1/6| = {m_err:.2e}")
    add(
        "assembly-stiffness-closed-form",
        s_err <= 1e-8,
        f"|S11 - (pi^2/6 + 1/2)| = {s_err:.2e}",
    )
    add("forcing-zero-mode", force[0] == 0.0, f"F0 = {force[0]:.2e}")

    # weighted inequality families on the distance weight
    dist = sample_height_profile("distance", {}, grid)
    worst = 0.0
    for name, f, fx in _identity_family(grid):
        rep = wc.check_weighted_sobolev(f, 0, dist, field_x=fx)
        worst = max(worst, rep.empirical_constant)
    add("weighted-sobolev-family", worst <= 50.0, f"max empirical constant {worst:.3f}")

    worst = 0.0
    for name, f, fx in _identity_family(grid):
        rep = wc.check_h_half_weighted(f, dist, field_x=fx)
        worst = max(worst, rep.empirical_constant)
    add("h-half-weighted-family", worst <= 50.0, f"max empirical constant {worst:.3f}")

    worst = 0.0
    for name, f, fx in _identity_family(grid):
        rep = wc.check_interpolation_inequality(f, dist, field_x=fx)
        worst = max(worst, rep.empirical_constant)
    add("interpolation-inequality-family", worst <= 50.0, f"max empirical constant {worst:.3f}")

    worst = 0.0
    for name, f, fx in _identity_family(grid):
        rep = wc.check_sobolev_embedding(f, dist, s=0.25)
        worst = max(worst, rep.empirical_constant)
    add("sobolev-embedding-quarter", worst <= 50.0, f"max empirical constant {worst:.3f}")

    # half-interval identities at n=401 plus the refinement rate 101 -> 401
    def identity_gaps(n):
        g = build_grid(n)
        dp = sample_height_profile("distance", {}, g)
        gaps = []
        xs = g.nodes
        family = [
            (np.ones_like(xs), np.zeros_like(xs)),
            (xs.copy(), np.ones_like(xs)),
            (xs**2, 2 * xs),
            (np.cos(np.pi * xs), -np.pi * np.sin(np.pi * xs)),
            (np.cos(3 * np.pi * xs), -3 * np.pi * np.sin(3 * np.pi * xs)),
        ]
        for f, fx in family:
            for weighted in (False, True):
                gaps.append(
                    wc.check_interpolation_identity(f, dp, field_x=fx, weighted=weighted).abs_gap
                )
        return np.array(gaps)

    g401 = identity_gaps(401)
    g101 = identity_gaps(101)
    add(
        "interpolation-identity-gap",
        float(np.max(g401)) <= 1e-8,
        f"max |lhs-rhs| at n=401: {np.max(g401):.2e}",
    )
    nontrivial = g101 > 1e-14
    rate_ok = bool(np.all(g101[nontrivial] / np.maximum(g401[nontrivial], 1e-300) >= 16.0)) if np.any(nontrivial) else True
    add(
        "identity-refinement-rate",
        rate_ok,
        "residual shrink n=101 -> n=401 >= 16x on the nontrivial family",
    )

    # norm homogeneity on a seeded random smooth field
    rng = np.random.default_rng(2718)
    modes = rng.standard_normal(8)
    f = sum(c * np.cos(k * np.pi * x) for k, c in enumerate(modes))
    alpha = 3.7
    h_err = abs(
        wc.weighted_l2_norm(alpha * f, 1, profile) - abs(alpha) * wc.weighted_l2_norm(f, 1, profile)
    ) / max(wc.weighted_l2_norm(f, 1, profile), 1e-30)
    add("norm-homogeneity", h_err <= 1e-12, f"relative defect {h_err:.2e}")

    # linearized energy identity: O(dt) residual, halves with dt
    small_grid = build_grid(201)
    sp_para = sample_height_profile("parabolic", {"amplitude": 1.0}, small_grid)
    sp_u0 = sample_velocity("zero", {}, small_grid)
    ones = np.ones(small_grid.n_nodes)

    def identity_residual(dt):
        traj = solve_linearized(sp_para, sp_u0, lambda t: ones, 0.01, dt, 16)
        return energy_identity_residual(traj, sp_para, lambda t: ones)

    r1, r2 = identity_residual(2e-4), identity_residual(1e-4)
    add(
        "energy-identity-residual",
        r1 <= 5.0 * 2e-4 and r2 <= 0.75 * r1,
        f"residuals {r1:.2e} (dt=2e-4) -> {r2:.2e} (dt=1e-4)",
    )

    # small nonlinear run: contraction, flow-map bound, mass, round trip, ceiling
    run_profile = profile if profile_override is None else para
    settings = picard.PicardSettings(
        t_final=0.0125, dt=1e-4, n_modes=min(cfg.n_modes, 16), picard_tol=1e-10, max_iter=50
    )
    small_u0 = sample_velocity(cfg.u0["kind"], {k: v for k, v in cfg.u0.items() if k != "kind"}, grid)
    try:
        sol = picard.solve_nonlinear(run_profile, small_u0, settings)
        ratios = [r.ratio for r in sol.history if math.isfinite(r.ratio)]
        totals = [r.total for r in sol.history]
        add(
            "contraction-monotonicity",
            all(r < 0.9 for r in ratios) and all(b < a for a, b in zip(totals, totals[1:])),
            f"{len(totals)} iterations, max ratio {max(ratios) if ratios else float('nan'):.3f}",
        )
        add(
            "eta-bound",
            0.5 <= sol.eta_x_min and sol.eta_x_max <= 1.5,
            f"eta_x in [{sol.eta_x_min:.4f}, {sol.eta_x_max:.4f}]",
        )
        mass0 = quadrature(np.ones(grid.n_nodes), 1, run_profile)
        drift = 0.0
        mid = float(sol.times[len(sol.times) // 2])
        for t in (0.0, mid, settings.t_final):
            snap = eulerian.eulerian_fields(run_profile, sol, t, 401)
            drift = max(drift, abs(eulerian.eulerian_mass(snap) - mass0))
        add("mass-conservation", drift <= 1e-6, f"max Eulerian mass drift {drift:.2e}")

        idx = sol.index_of(settings.t_final)
        ynodes = sol.eta[idx]
        xback = eulerian._invert_flow_modal(sol, idx, ynodes)
        rt = float(np.max(np.abs(xback - grid.nodes)))
        add("roundtrip-inverse-map", rt <= 1e-10, f"max |inverse(flow(x)) - x| = {rt:.2e}")

        rep = eulerian.boundary_diagnostics(run_profile, sol, settings.t_final)
        add(
            "boundary-neumann-spectral",
            rep.vx_at_boundary == (0.0, 0.0),
            f"vx at boundary {rep.vx_at_boundary}",
        )

        m0 = None
        ok = True
        sample = sol.times[:: max(1, len(sol.times) // 25)]
        for t in sample:
            er = jet.energy_high(sol, t, m0)
            m0 = er.M0 if m0 is None else m0
            ok = ok and er.within_apriori
        add("apriori-ceiling", ok, f"E <= 2*M0 at {len(sample)} sampled steps")

        # empirical embedding constants and the implied admissible window
        c1 = 0.0
        for name, f, fx in _identity_family(grid):
            h1 = math.sqrt(quadrature(f * f + fx * fx, 0, run_profile))
            if h1 > 0:
                c1 = max(c1, float(np.max(np.abs(f))) / h1)
        vT = sol.velocity(settings.t_final).values
        h3 = math.sqrt(
            quadrature(vT**2, 0, run_profile)
            + sum(
                quadrature(differentiate(Field(vT), k, grid).values ** 2, 0, run_profile)
                for k in (1, 2, 3)
            )
        )
        eT = jet.energy_high(sol, settings.t_final)
        c2 = h3 / math.sqrt(eT.E_total) if eT.E_total > 0 else float("nan")
        m1 = 2.0 * eT.M0
        t_admissible = 1.0 / (2.0 * c1 * c2 * math.sqrt(m1)) if c1 * c2 > 0 and m1 > 0 else float("nan")
        add(
            "embedding-constants",
            True,
            f"c1~{c1:.3f}, c2~{c2:.3g}, implied admissible T ~ {t_admissible:.3g} (empirical, informational)",
        )
    except SvfreeError as exc:
        add("nonlinear-run", False, f"small nonlinear run failed: {exc}")

    if out_path is not None:
        emit_report("verification", checks, out_path)
    return checks


# ---------------------------------------------------------------------------
# sweep


def parse_sweep_range(spec: str):
    """Parse 'T=a:b:n' into n evenly spaced final times."""
    try:
        name, rng = spec.split("=", 1)
        if name.strip() != "T":
            raise ValueError("only T sweeps are supported")
        a, b, n = rng.split(":")
        a, b, n = float(a), float(b), int(n)
        if n < 1 or a <= 0 or b < a:
            raise ValueError("need 0 < a <= b and n >= 1")
    except ValueError as exc:
        raise ConfigurationError(f"bad sweep spec {spec!r}: {exc}") from exc
    return np.linspace(a, b, n)


def run_sweep(cfg: RunConfig, spec: str) -> list:
    """Rerun the nonlinear solve across a t_final range; chart convergence."""
    out = Path(os.environ.get(OUT_DIR_ENV, cfg.out_dir))
    out.mkdir(parents=True, exist_ok=True)
    rows = []
    grid, profile, u0 = build_problem(cfg)
    for t_final in parse_sweep_range(spec):
        steps = max(1, round(t_final / cfg.dt))
        t_adj = steps * cfg.dt
        settings = dataclasses.replace(cfg.picard_settings(), t_final=t_adj)
        try:
            sol = picard.solve_nonlinear(profile, u0, settings)
            within_all = True
            m0 = None
            for t in sol.times[:: max(1, len(sol.times) // 10)]:
                er = jet.energy_high(sol, t, m0)
                m0 = er.M0 if m0 is None else m0
                within_all = within_all and er.within_apriori
            if not within_all:
                log.warning("a-priori ceiling violated in sweep run at T=%g", t_adj)
            rows.append(
                (
                    t_adj,
                    True,
                    sol.iterations,
                    sol.history[-1].ratio if sol.history else float("nan"),
                    sol.eta_x_min,
                    sol.eta_x_max,
                    within_all,
                )
            )
        except SvfreeError as exc:
            log.warning("sweep point T=%g failed: %s", t_adj, exc)
            rows.append((t_adj, False, 0, float("nan"), float("nan"), float("nan"), False))
    emit_report("sweep", rows, out / "sweep.csv")
    return rows


# ---------------------------------------------------------------------------
# entry point


def _add_common_flags(p: argparse.ArgumentParser):
    p.add_argument("--config", type=str, default=None, help="JSON config file")
    p.add_argument("--n-nodes", type=int, dest="n_nodes")
    p.add_argument("--n-modes", type=int, dest="n_modes")
    p.add_argument("--dt", type=float)
    p.add_argument("--t-final", type=float, dest="t_final")
    p.add_argument("--picard-tol", type=float, dest="picard_tol")
    p.add_argument("--max-iter", type=int, dest="max_iter")
    p.add_argument("--scheme", choices=_SCHEMES)
    p.add_argument("--solver", choices=_SOLVERS)
    p.add_argument("--out", type=str, dest="out_dir")
    p.add_argument("--profile", type=str, help="profile kind (parabolic, sine, custom)")
    p.add_argument("--u0", type=str, help="initial velocity kind (zero, cosine, custom)")


def _config_from_args(args) -> RunConfig:
    data = {}
    if args.config:
        cfg = load_config(args.config)
        data = dataclasses.asdict(cfg)
    overrides = {
        k: getattr(args, k)
        for k in ("n_nodes", "n_modes", "dt", "t_final", "picard_tol", "max_iter",
                  "scheme", "solver", "out_dir")
        if getattr(args, k, None) is not None
    }
    data.update(overrides)
    if getattr(args, "profile", None):
        data["profile"] = {"kind": args.profile}
    if getattr(args, "u0", None):
        data["u0"] = {"kind": args.u0}
    return config_from_dict(data)


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    parser = argparse.ArgumentParser(
        prog="svfree",
        description="Vacuum free-boundary shallow-water solver and verification suite",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    p_sim = sub.add_parser("simulate", help="run the nonlinear solve and emit reports")
    _add_common_flags(p_sim)
    p_ver = sub.add_parser("verify", help="run every runtime-checkable invariant")
    _add_common_flags(p_ver)
    p_swp = sub.add_parser("sweep", help="rerun across a T range (chart contraction region)")
    _add_common_flags(p_swp)
    p_swp.add_argument("sweep_spec", nargs="?", default=None, help="range spec T=a:b:n")
    p_swp.add_argument("--sweep", dest="sweep_flag", default=None, help="range spec T=a:b:n")

    args = parser.parse_args(argv)
    try:
        cfg = _config_from_args(args)
    except SvfreeError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    try:
        if args.command == "simulate":
            summary = run_simulation(cfg)
            print(
                f"converged={summary.converged} iterations={summary.iterations} "
                f"eta_x in [{summary.eta_x_min:.4f}, {summary.eta_x_max:.4f}] "
                f"wall={summary.wall_time_s:.2f}s"
            )
            return EXIT_OK
        if args.command == "verify":
            out = Path(os.environ.get(OUT_DIR_ENV, cfg.out_dir))
            checks = run_verification_suite(cfg, out_path=out / "verification.json")
            width = max(len(c.name) for c in checks)
            for c in checks:
                print(f"{'PASS' if c.passed else 'FAIL'}  {c.name:<{width}}  {c.detail}")
            if all(c.passed for c in checks):
                print(f"all {len(checks)} checks passed")
                return EXIT_OK
            failed = [c.name for c in checks if not c.passed]
            print(f"FAILED checks: {', '.join(failed)}", file=sys.stderr)
            return EXIT_VERIFICATION
        if args.command == "sweep":
            spec = args.sweep_spec or args.sweep_flag
            if not spec:
                print("sweep needs a range spec T=a:b:n", file=sys.stderr)
                return EXIT_CONFIG
            rows = run_sweep(cfg, spec)
            for row in rows:
                print(
                    f"T={row[0]:g} converged={row[1]} iterations={row[2]} "
                    f"final_ratio={row[3]:.3g} eta_x=[{row[4]:.4g}, {row[5]:.4g}]"
                )
            return EXIT_OK
    except ConfigurationError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ValidationError as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SvfreeError as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
