"""Nonlinear solve: fixed-point iteration over the frozen-Jacobian problem.

Starting from the guess flow eta(x, t) = x + t u0(x), each pass solves the
linearized modal system against the previous flow map and integrates a new
flow from the result (trapezoid over the stored steps). Successive velocity
differences are measured in the contraction norm

    sup_t ||sqrt(rho0) sigma||_L2  +  ||sqrt(rho0) sigma_x||_{L2(time; L2)},

which the small-time theory shrinks by a factor 1/2 per pass; the empirical
ratios are recorded per iteration. Accepted trajectories must keep the
flow-map Jacobian inside [1/2, 3/2] at every node and stored time.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.integrate import trapezoid

from .errors import (
    ConfigurationError,
    NonConvergenceError,
    TimeWindowError,
)
from .fd_oracle import FDTrajectory, fd_oracle_solve
from .galerkin import (
    GalerkinBasis,
    ModalField,
    ModalTrajectory,
    assemble_mass,
    assemble_stiffness,
    n_steps_for,
    project_initial,
    solve_linearized,
)
from .profile import AnalyticField, Field, HeightProfile

__all__ = [
    "ContractionReport",
    "SolutionTrajectory",
    "FlowTrajectory",
    "PicardSettings",
    "initial_flow_guess",
    "picard_step",
    "contraction_metrics",
    "solve_nonlinear",
    "fd_oracle_solve",
    "FDTrajectory",
]

log = logging.getLogger(__name__)

ETA_BOUND = (0.5, 1.5)


@dataclass(frozen=True)
class FlowTrajectory:
    """Nodal flow map and Jacobian stored per step time."""

    times: np.ndarray
    eta: np.ndarray
    eta_x: np.ndarray
    dt: float

    def eta_x_at(self, t: float) -> np.ndarray:
        pos = t / self.dt
        idx = int(round(pos))
        if idx < len(self.times) and abs(self.times[idx] - t) <= 1e-10 * max(1.0, abs(t)):
            return self.eta_x[idx]
        if t < self.times[0] or t > self.times[-1]:
            raise ConfigurationError(f"t={t} outside the stored flow window")
        i0 = min(int(pos), len(self.times) - 2)
        w = (t - self.times[i0]) / self.dt
        return (1.0 - w) * self.eta_x[i0] + w * self.eta_x[i0 + 1]


@dataclass(frozen=True)
class ContractionReport:
    iteration: int
    sup_diff: float
    grad_diff: float
    ratio: float  # nan for the first measurable iteration

    @property
    def total(self) -> float:
        return self.sup_diff + self.grad_diff


@dataclass(frozen=True)
class SolutionTrajectory:
    """Converged modal velocity with its own flow map and convergence metadata."""

    times: np.ndarray
    dt: float
    coeffs: np.ndarray
    flow_coeffs: np.ndarray
    basis: GalerkinBasis
    profile: HeightProfile
    eta: np.ndarray
    eta_x: np.ndarray
    iterations: int
    converged: bool
    final_diff: float
    history: list = field(default_factory=list)
    zero_forcing: bool = False

    @property
    def grid(self):
        return self.profile.grid

    @property
    def eta_x_min(self) -> float:
        return float(np.min(self.eta_x))

    @property
    def eta_x_max(self) -> float:
        return float(np.max(self.eta_x))

    def index_of(self, t: float) -> int:
        idx = int(round(t / self.dt)) if self.dt > 0 else 0
        if idx < 0 or idx >= len(self.times) or abs(self.times[idx] - t) > 1e-10 * max(1.0, abs(t)):
            raise ConfigurationError(f"t={t} is not a stored time of this trajectory")
        return idx

    def velocity(self, t: float) -> ModalField:
        return ModalField(self.coeffs[self.index_of(t)], self.basis, 0, "v")

    def velocity_values(self, t: float) -> Field:
        return Field(self.velocity(t).values, "v")

    def flow(self) -> FlowTrajectory:
        return FlowTrajectory(self.times, self.eta, self.eta_x, self.dt)


@dataclass(frozen=True)
class PicardSettings:
    t_final: float = 0.05
    dt: float = 1e-4
    n_modes: int = 32
    picard_tol: float = 1e-10
    max_iter: int = 50
    scheme: str = "implicit-euler"
    zero_forcing: bool = False
    initial_guess: str = "u0"  # or "identity"
    windows: int = 1


def initial_flow_guess(u0: AnalyticField, times: np.ndarray, grid) -> FlowTrajectory:
    """Guess flow eta(x, t) = x + t*u0(x), exactly, at every stored time."""
    times = np.asarray(times, dtype=float)
    u = u0.values
    ux = u0.derivative_values(1)
    eta = grid.nodes[None, :] + times[:, None] * u[None, :]
    eta_x = 1.0 + times[:, None] * ux[None, :]
    dt = float(times[1] - times[0]) if len(times) > 1 else 0.0
    return FlowTrajectory(times, eta, eta_x, dt)


def _integrate_flow_coeffs(traj: ModalTrajectory, mu0: np.ndarray | None = None) -> np.ndarray:
    """Trapezoid-in-time modal coefficients of the displacement eta - x."""
    lam = traj.coeffs
    mu = np.zeros_like(lam)
    if mu0 is not None:
        mu[0] = mu0
    increments = 0.5 * traj.dt * (lam[:-1] + lam[1:])
    mu[1:] = mu[0] + np.cumsum(increments, axis=0)
    return mu


def _flow_from_coeffs(
    mu: np.ndarray, basis: GalerkinBasis, times: np.ndarray, dt: float
) -> FlowTrajectory:
    grid = basis.grid
    eta = grid.nodes[None, :] + mu @ basis.table(0)
    eta_x = 1.0 + mu @ basis.table(1)
    return FlowTrajectory(times, eta, eta_x, dt)


def picard_step(
    profile: HeightProfile,
    u0: AnalyticField,
    flow_prev: FlowTrajectory,
    t_final: float,
    dt: float,
    n_modes: int,
    scheme: str = "implicit-euler",
    zero_forcing: bool = False,
    basis: GalerkinBasis | None = None,
) -> tuple[ModalTrajectory, FlowTrajectory]:
    """One fixed-point pass: linearized solve against flow_prev, new flow out."""
    traj = solve_linearized(
        profile, u0, flow_prev.eta_x_at, t_final, dt, n_modes, scheme,
        zero_forcing=zero_forcing, basis=basis,
    )
    mu = _integrate_flow_coeffs(traj)
    return traj, _flow_from_coeffs(mu, traj.basis, traj.times, traj.dt)


def contraction_metrics(
    v_n: ModalTrajectory,
    v_n1: ModalTrajectory,
    profile: HeightProfile,
    iteration: int = 1,
    prev_total: float | None = None,
) -> ContractionReport:
    """Difference norms of two iterates on the same time grid."""
    if v_n.coeffs.shape != v_n1.coeffs.shape or not np.array_equal(v_n.times, v_n1.times):
        raise ConfigurationError("iterates live on different time grids")
    basis = v_n.basis
    mass = assemble_mass(profile, basis)
    grad = assemble_stiffness(profile, basis, np.ones(profile.grid.n_nodes))
    diff = v_n1.coeffs - v_n.coeffs
    sup_sq = np.einsum("ti,ij,tj->t", diff, mass, diff)
    grad_sq = np.einsum("ti,ij,tj->t", diff, grad, diff)
    sup_diff = float(np.sqrt(np.max(np.maximum(sup_sq, 0.0))))
    grad_diff = float(np.sqrt(max(trapezoid(grad_sq, dx=v_n.dt), 0.0)))
    total = sup_diff + grad_diff
    ratio = float("nan") if prev_total is None or prev_total <= 0 else total / prev_total
    return ContractionReport(iteration, sup_diff, grad_diff, ratio)


def _solve_window(
    profile: HeightProfile,
    u0,
    settings: PicardSettings,
    lam0: np.ndarray | None,
    mu0: np.ndarray | None,
    basis: GalerkinBasis,
    history: list,
) -> tuple[ModalTrajectory, np.ndarray]:
    """Fixed-point loop over one time window; returns iterate and flow coeffs."""
    steps = n_steps_for(settings.t_final, settings.dt)
    times = np.linspace(0.0, settings.t_final, steps + 1)
    if mu0 is None:
        mu0 = np.zeros(basis.n_modes)
    if settings.initial_guess == "identity":
        mu_guess = np.tile(mu0, (steps + 1, 1))
        flow = _flow_from_coeffs(mu_guess, basis, times, settings.dt)
    elif settings.initial_guess == "u0":
        lam_init = lam0 if lam0 is not None else project_initial(u0, basis, profile.grid)
        mu_guess = mu0[None, :] + times[:, None] * lam_init[None, :]
        flow = _flow_from_coeffs(mu_guess, basis, times, settings.dt)
    else:
        raise ConfigurationError(f"unknown initial_guess {settings.initial_guess!r}")

    prev = None
    prev_total = None
    for it in range(1, settings.max_iter + 1):
        traj = solve_linearized(
            profile, u0, flow.eta_x_at, settings.t_final, settings.dt,
            settings.n_modes, settings.scheme, settings.zero_forcing,
            basis=basis, lam0=lam0,
        )
        mu = mu0[None, :] + _integrate_flow_coeffs(traj)
        flow = _flow_from_coeffs(mu, basis, times, settings.dt)
        if prev is not None:
            report = contraction_metrics(prev, traj, profile, it - 1, prev_total)
            history.append(report)
            if report.total < settings.picard_tol:
                return traj, mu
            prev_total = report.total
        prev = traj
    raise NonConvergenceError(
        f"no contraction below tol={settings.picard_tol} within "
        f"{settings.max_iter} iterations (last diff "
        f"{history[-1].total if history else float('nan'):.3e})",
        history,
    )


def solve_nonlinear(
    profile: HeightProfile, u0: AnalyticField, settings: PicardSettings
) -> SolutionTrajectory:
    """Iterate to the nonlinear trajectory and enforce the flow-map bound.

    Raises NonConvergenceError (carrying the contraction history) when the
    iteration budget runs out, and TimeWindowError when the converged flow
    leaves [1/2, 3/2]; both signal that t_final exceeds the contraction regime.
    """
    basis = GalerkinBasis(settings.n_modes, profile.grid)
    history: list[ContractionReport] = []
    windows = max(1, settings.windows)
    if windows == 1:
        traj, mu = _solve_window(profile, u0, settings, None, None, basis, history)
        times, coeffs = traj.times, traj.coeffs
    else:
        steps = n_steps_for(settings.t_final, settings.dt)
        if steps % windows != 0:
            raise ConfigurationError(
                f"step count {steps} is not divisible into {windows} windows"
            )
        sub = replace(settings, t_final=settings.t_final / windows)
        lam0 = None
        mu0 = np.zeros(basis.n_modes)
        chunks = []
        for _ in range(windows):
            traj, mu_chunk = _solve_window(profile, u0, sub, lam0, mu0, basis, history)
            chunks.append((traj.coeffs, mu_chunk))
            lam0 = traj.coeffs[-1]
            mu0 = mu_chunk[-1]
        coeffs = np.vstack([chunks[0][0]] + [c[1:] for c, _ in chunks[1:]])
        mu = np.vstack([chunks[0][1]] + [m[1:] for _, m in chunks[1:]])
        times = np.linspace(0.0, settings.t_final, steps + 1)

    flow = _flow_from_coeffs(mu, basis, times, settings.dt)
    final_diff = history[-1].total if history else 0.0
    sol = SolutionTrajectory(
        times=times,
        dt=settings.dt,
        coeffs=coeffs,
        flow_coeffs=mu,
        basis=basis,
        profile=profile,
        eta=flow.eta,
        eta_x=flow.eta_x,
        iterations=len(history),
        converged=True,
        final_diff=final_diff,
        history=history,
        zero_forcing=settings.zero_forcing,
    )
    lo, hi = ETA_BOUND
    slack = 1e-12
    if sol.eta_x_min < lo - slack or sol.eta_x_max > hi + slack:
        raise TimeWindowError(
            f"flow-map Jacobian [{sol.eta_x_min:.4f}, {sol.eta_x_max:.4f}] left "
            f"the admissible band {ETA_BOUND}; rerun with a smaller t_final"
        )
    return sol
