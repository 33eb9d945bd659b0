"""Spectral Galerkin machinery for the linearized vacuum momentum equation.

The linearization freezes the flow-map Jacobian at a guess eta_bar_x and solves

    rho0 v_t + (rho0^2 / eta_bar_x^2)_x = (rho0 v_x / eta_bar_x^2)_x

by projection onto the Neumann eigenbasis of the Laplacian on [0, 1]:
e_0 = 1, e_n = sqrt(2) cos(n pi x). Every mode has vanishing endpoint slope,
so truncated velocities satisfy the vacuum-boundary Neumann condition exactly.
The modal system is

    M dlam/dt + S(t) lam = F(t),
    M_ij = int rho0 e_i e_j,  S_ij = int rho0 (e_i)_x (e_j)_x / eta_bar_x^2,
    F_j = int rho0^2 (e_j)_x / eta_bar_x^2,

stepped implicitly (backward Euler by default, Crank-Nicolson optional).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    ConfigurationError,
    DegenerateMassError,
    FlowMapDegeneracyError,
)
from .profile import Field, Grid, HeightProfile

__all__ = [
    "GalerkinBasis",
    "ModalField",
    "ModalTrajectory",
    "LinearizedOperatorSet",
    "neumann_basis",
    "assemble_mass",
    "assemble_stiffness",
    "assemble_forcing",
    "assemble_operators",
    "project_initial",
    "step_linearized",
    "solve_linearized",
    "n_steps_for",
    "energy_identity_residual",
]

ETA_X_RANGE = (0.1, 10.0)


class GalerkinBasis:
    """Neumann cosine eigenbasis sampled on a grid, with exact derivatives."""

    def __init__(self, n_modes: int, grid: Grid):
        if n_modes < 1:
            raise ConfigurationError(f"n_modes must be >= 1, got {n_modes}")
        self.n_modes = n_modes
        self.grid = grid
        self._tables: dict[int, np.ndarray] = {}

    def table(self, order: int = 0) -> np.ndarray:
        """(n_modes, n_nodes) array of order-th mode derivatives at the nodes."""
        tab = self._tables.get(order)
        if tab is None:
            tab = self.evaluate_modes(self.grid.nodes, order)
            self._tables[order] = tab
        return tab

    def evaluate_modes(self, x, order: int = 0) -> np.ndarray:
        x = np.atleast_1d(np.asarray(x, dtype=float))
        out = np.zeros((self.n_modes, x.size))
        if order == 0:
            out[0] = 1.0
        for n in range(1, self.n_modes):
            w = n * np.pi
            phase = order % 4
            amp = np.sqrt(2.0) * w**order
            if phase == 0:
                out[n] = amp * np.cos(w * x)
            elif phase == 1:
                out[n] = -amp * np.sin(w * x)
            elif phase == 2:
                out[n] = -amp * np.cos(w * x)
            else:
                out[n] = amp * np.sin(w * x)
        if order % 2 == 1:
            # sin(n pi x) vanishes identically on the boundary; keep it exact
            edge = (x == 0.0) | (x == 1.0)
            out[:, edge] = 0.0
        return out

    def evaluate(self, coeffs: np.ndarray, x, order: int = 0) -> np.ndarray:
        return np.asarray(coeffs) @ self.evaluate_modes(x, order)

    def endpoint_derivatives(self, coeffs: np.ndarray, x0: float, n_orders: int) -> np.ndarray:
        """Exact one-sided derivatives of the modal sum at an endpoint.

        All odd-order derivatives vanish there (the sine factor), a structural
        identity the boundary-limit series arithmetic relies on.
        """
        coeffs = np.asarray(coeffs)
        modes = np.arange(1, self.n_modes)
        sign_n = np.ones_like(modes, dtype=float) if x0 == 0.0 else (-1.0) ** modes
        out = np.zeros(n_orders)
        for k in range(0, n_orders, 2):
            amp = np.sqrt(2.0) * (modes * np.pi) ** k * (-1.0) ** (k // 2)
            out[k] = np.dot(coeffs[1:], amp * sign_n)
        if n_orders > 0:
            out[0] += coeffs[0]
        return out

    def orthonormality_defect(self) -> float:
        """max |(e_i, e_j) - delta_ij| under the trapezoid rule.

        Trapezoid, not Simpson: on a uniform grid it integrates every pure
        cosine below the aliasing limit exactly, so the defect is rounding-level.
        """
        w = np.full(self.grid.n_nodes, self.grid.spacing)
        w[0] *= 0.5
        w[-1] *= 0.5
        e = self.table(0)
        gram = (e * w) @ e.T
        return float(np.max(np.abs(gram - np.eye(self.n_modes))))


def neumann_basis(n_modes: int, grid: Grid) -> GalerkinBasis:
    return GalerkinBasis(n_modes, grid)


@dataclass(frozen=True)
class ModalField:
    """Cosine-series field; differentiates spectrally and composes exactly."""

    coeffs: np.ndarray
    basis: GalerkinBasis
    deriv_order: int = 0
    meta: str = ""

    @property
    def values(self) -> np.ndarray:
        return self.basis.evaluate(self.coeffs, self.basis.grid.nodes, self.deriv_order)

    def derivative(self, order: int = 1) -> "ModalField":
        return ModalField(self.coeffs, self.basis, self.deriv_order + order, self.meta)

    def as_field(self) -> Field:
        return Field(self.values, self.meta)


@dataclass(frozen=True)
class ModalTrajectory:
    """Time-indexed modal coefficients lam(t) of the velocity."""

    times: np.ndarray
    coeffs: np.ndarray
    dt: float
    basis: GalerkinBasis

    def index_of(self, t: float) -> int:
        idx = int(round(t / self.dt)) if self.dt > 0 else 0
        if idx < 0 or idx >= len(self.times) or abs(self.times[idx] - t) > 1e-10 * max(1.0, abs(t)):
            raise ConfigurationError(f"t={t} is not a stored time of this trajectory")
        return idx

    def velocity(self, t: float) -> ModalField:
        return ModalField(self.coeffs[self.index_of(t)], self.basis, 0, "v")


@dataclass(frozen=True)
class LinearizedOperatorSet:
    mass: np.ndarray
    stiffness: np.ndarray
    forcing: np.ndarray


def _check_eta_x(eta_x: np.ndarray) -> np.ndarray:
    eta_x = np.asarray(eta_x, dtype=float)
    lo, hi = ETA_X_RANGE
    if np.any(~np.isfinite(eta_x)) or np.any(eta_x <= lo) or np.any(eta_x >= hi):
        raise FlowMapDegeneracyError(
            f"flow-map Jacobian left the admissible range {ETA_X_RANGE}: "
            f"min={np.min(eta_x):.3g}, max={np.max(eta_x):.3g}"
        )
    return eta_x


def _symmetrized_weighted_gram(rows: np.ndarray, weights: np.ndarray) -> np.ndarray:
    g = (rows * weights) @ rows.T
    return (g + g.T) / 2.0


def assemble_mass(profile: HeightProfile, basis: GalerkinBasis) -> np.ndarray:
    w = profile.grid.simpson_weights * profile.values
    mass = _symmetrized_weighted_gram(basis.table(0), w)
    try:
        np.linalg.cholesky(mass)
    except np.linalg.LinAlgError as exc:
        raise DegenerateMassError(
            "weighted mass matrix is not positive definite; the height profile "
            "does not separate the basis modes"
        ) from exc
    return mass


def assemble_stiffness(
    profile: HeightProfile, basis: GalerkinBasis, eta_x: np.ndarray
) -> np.ndarray:
    eta_x = _check_eta_x(eta_x)
    w = profile.grid.simpson_weights * profile.values / eta_x**2
    return _symmetrized_weighted_gram(basis.table(1), w)


def assemble_forcing(
    profile: HeightProfile, basis: GalerkinBasis, eta_x: np.ndarray
) -> np.ndarray:
    eta_x = _check_eta_x(eta_x)
    w = profile.grid.simpson_weights * profile.values**2 / eta_x**2
    return basis.table(1) @ w


def assemble_operators(
    profile: HeightProfile, basis: GalerkinBasis, eta_x: np.ndarray
) -> LinearizedOperatorSet:
    return LinearizedOperatorSet(
        assemble_mass(profile, basis),
        assemble_stiffness(profile, basis, eta_x),
        assemble_forcing(profile, basis, eta_x),
    )


def project_initial(u0, basis: GalerkinBasis, grid: Grid) -> np.ndarray:
    """Plain (unweighted) L2 modal coefficients of the initial velocity."""
    vals = u0.values if hasattr(u0, "values") else np.asarray(u0, dtype=float)
    return basis.table(0) @ (grid.simpson_weights * vals)


def step_linearized(
    lam: np.ndarray,
    dt: float,
    mass: np.ndarray,
    stiffness_next: np.ndarray,
    forcing_next: np.ndarray,
    scheme: str = "implicit-euler",
    stiffness_cur: np.ndarray | None = None,
    forcing_cur: np.ndarray | None = None,
) -> np.ndarray:
    if dt <= 0:
        raise ConfigurationError(f"dt must be positive, got {dt}")
    try:
        if scheme == "implicit-euler":
            lhs = mass + dt * stiffness_next
            rhs = mass @ lam + dt * forcing_next
        elif scheme == "crank-nicolson":
            if stiffness_cur is None or forcing_cur is None:
                raise ConfigurationError(
                    "crank-nicolson needs operators at both step endpoints"
                )
            lhs = mass + 0.5 * dt * stiffness_next
            rhs = (mass - 0.5 * dt * stiffness_cur) @ lam + 0.5 * dt * (
                forcing_cur + forcing_next
            )
        else:
            raise ConfigurationError(f"unknown scheme {scheme!r}")
        return np.linalg.solve(lhs, rhs)
    except np.linalg.LinAlgError as exc:
        raise DegenerateMassError("implicit step system failed to solve") from exc


def n_steps_for(t_final: float, dt: float) -> int:
    """Step count with the t_final/dt integrality check."""
    if dt <= 0 or t_final <= 0:
        raise ConfigurationError(f"t_final={t_final} and dt={dt} must be positive")
    steps = round(t_final / dt)
    if steps < 1 or abs(t_final - steps * dt) > 1e-9 * max(1.0, abs(t_final)):
        raise ConfigurationError(
            f"t_final={t_final} is not an integer multiple of dt={dt}"
        )
    return steps


def solve_linearized(
    profile: HeightProfile,
    u0,
    eta_x_at,
    t_final: float,
    dt: float,
    n_modes: int,
    scheme: str = "implicit-euler",
    zero_forcing: bool = False,
    basis: GalerkinBasis | None = None,
    lam0: np.ndarray | None = None,
) -> ModalTrajectory:
    """March the modal system over [0, t_final] against a frozen flow guess.

    eta_x_at(t) must return the nodal Jacobian of the guess flow at any step
    time (interpolate between its stored times if needed). lam0 overrides the
    initial modal coefficients (windowed restarts hand over modal data
    directly instead of reprojecting).
    """
    grid = profile.grid
    if basis is None:
        basis = GalerkinBasis(n_modes, grid)
    steps = n_steps_for(t_final, dt)
    times = np.linspace(0.0, t_final, steps + 1)
    mass = assemble_mass(profile, basis)
    coeffs = np.zeros((steps + 1, basis.n_modes))
    coeffs[0] = lam0 if lam0 is not None else project_initial(u0, basis, grid)

    def ops_at(t: float):
        eta_x = eta_x_at(t)
        stiff = assemble_stiffness(profile, basis, eta_x)
        if zero_forcing:
            force = np.zeros(basis.n_modes)
        else:
            force = assemble_forcing(profile, basis, eta_x)
        return stiff, force

    stiff_cur, force_cur = ops_at(0.0) if scheme == "crank-nicolson" else (None, None)
    for m in range(steps):
        stiff_next, force_next = ops_at(times[m + 1])
        coeffs[m + 1] = step_linearized(
            coeffs[m], dt, mass, stiff_next, force_next, scheme, stiff_cur, force_cur
        )
        stiff_cur, force_cur = stiff_next, force_next
    return ModalTrajectory(times, coeffs, dt, basis)


def energy_identity_residual(
    traj: ModalTrajectory,
    profile: HeightProfile,
    eta_x_at,
) -> float:
    """Residual of the discrete balance obtained by testing with the solution:

        1/2 ||sqrt(rho0) v(T)||^2 + sum dt int rho0 v_x^2 / eta_bar_x^2
            = 1/2 ||sqrt(rho0) v(0)||^2 + sum dt int rho0^2 v_x / eta_bar_x^2,

    sums over step right-endpoints. For the backward-Euler trajectory the
    residual equals the accumulated jump dissipation, O(dt).
    """
    basis = traj.basis
    mass = assemble_mass(profile, basis)
    lam = traj.coeffs
    dt = traj.dt
    dissip = 0.0
    work = 0.0
    for m in range(len(traj.times) - 1):
        eta_x = eta_x_at(traj.times[m + 1])
        stiff = assemble_stiffness(profile, basis, eta_x)
        force = assemble_forcing(profile, basis, eta_x)
        dissip += dt * lam[m + 1] @ stiff @ lam[m + 1]
        work += dt * force @ lam[m + 1]
    lhs = 0.5 * lam[-1] @ mass @ lam[-1] + dissip
    rhs = 0.5 * lam[0] @ mass @ lam[0] + work
    return float(abs(lhs - rhs))
