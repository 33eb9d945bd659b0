"""Weighted norms, distance-weighted Sobolev checks, and interpolation identities.

All monitored estimates take the form lhs <= C * rhs with a universal constant
that the analysis never makes explicit; the checks therefore report the
empirical ratio lhs/rhs and assert only finiteness, per-family ceilings, and
stability under grid refinement. The half-interval integration-by-parts
identities behind the weighted interpolation inequality are exact statements
and are checked to quadrature tolerance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, InequalityViolationError, ValidationError
from .profile import Field, HeightProfile, differentiate, quadrature

__all__ = [
    "RatioReport",
    "IdentityReport",
    "weighted_l2_norm",
    "weighted_h1_norm",
    "h_half_norm",
    "project_cosine",
    "check_weighted_sobolev",
    "check_h_half_weighted",
    "check_sobolev_embedding",
    "check_interpolation_identity",
    "check_interpolation_inequality",
]


@dataclass(frozen=True)
class RatioReport:
    lhs: float
    rhs: float
    empirical_constant: float
    satisfied_with: float

    def satisfied(self) -> bool:
        return self.rhs == 0.0 or self.empirical_constant <= self.satisfied_with


@dataclass(frozen=True)
class IdentityReport:
    lhs: float
    rhs: float

    @property
    def abs_gap(self) -> float:
        return abs(self.lhs - self.rhs)


def _values(f) -> np.ndarray:
    if isinstance(f, Field):
        return f.values
    if hasattr(f, "values"):
        return np.asarray(f.values, dtype=float)
    return np.asarray(f, dtype=float)


def _gradient(f, field_x, profile: HeightProfile) -> np.ndarray:
    if field_x is not None:
        return _values(field_x)
    if hasattr(f, "derivative") and not isinstance(f, Field):
        return _values(f.derivative(1))
    if hasattr(f, "derivative_values"):
        return f.derivative_values(1)
    return differentiate(Field(_values(f)), 1, profile.grid).values


def weighted_l2_norm(f, weight_power: int, profile: HeightProfile) -> float:
    """sqrt of int rho0^k g^2."""
    vals = _values(f)
    return math.sqrt(max(quadrature(vals * vals, weight_power, profile), 0.0))


def weighted_h1_norm(f, weight_power: int, profile: HeightProfile, field_x=None) -> float:
    """sqrt of int rho0^k (g^2 + g_x^2)."""
    vals = _values(f)
    grad = _gradient(f, field_x, profile)
    return math.sqrt(max(quadrature(vals * vals + grad * grad, weight_power, profile), 0.0))


def project_cosine(f, profile: HeightProfile, n_modes: int | None = None) -> np.ndarray:
    """Unweighted cosine-mode coefficients of a nodal field (Simpson pairing)."""
    grid = profile.grid
    vals = _values(f)
    if n_modes is None:
        n_modes = min((grid.n_nodes - 1) // 2, 129)
    coeffs = np.empty(n_modes)
    w = grid.simpson_weights
    coeffs[0] = np.dot(w, vals)
    for n in range(1, n_modes):
        coeffs[n] = np.dot(w, vals * np.sqrt(2.0) * np.cos(n * np.pi * grid.nodes))
    return coeffs


def h_half_norm(f, profile: HeightProfile, n_modes: int | None = None) -> float:
    """Spectral half-derivative norm: sqrt(sum (1 + (n pi)^2)^(1/2) c_n^2).

    Nodal input is projected onto the cosine modes first; modal coefficient
    vectors pass through unchanged.
    """
    if isinstance(f, np.ndarray) and f.ndim == 1 and len(f) < profile.grid.n_nodes:
        coeffs = f
    elif hasattr(f, "coeffs"):
        coeffs = np.asarray(f.coeffs, dtype=float)
    else:
        coeffs = project_cosine(f, profile, n_modes)
    n = np.arange(len(coeffs))
    symbol = np.sqrt(1.0 + (n * np.pi) ** 2)
    return math.sqrt(float(np.dot(symbol, coeffs**2)))


def check_weighted_sobolev(
    f, weight_power: int, profile: HeightProfile, field_x=None, ceiling: float = 50.0
) -> RatioReport:
    """Distance-weighted Poincare-type bound: int d^k w^2 <= C int d^{k+2}(w^2 + w_x^2)."""
    if weight_power < 0:
        raise ConfigurationError("weight_power must be >= 0")
    vals = _values(f)
    grad = _gradient(f, field_x, profile)
    lhs = quadrature(vals * vals, weight_power, profile)
    rhs = quadrature(vals * vals + grad * grad, weight_power + 2, profile)
    if rhs == 0.0 and lhs > 0.0:
        raise InequalityViolationError(
            "weighted majorant vanished with nonzero minorant; the profile is "
            "degenerate beyond the admissible vacuum rate"
        )
    const = lhs / rhs if rhs > 0.0 else 0.0
    return RatioReport(lhs, rhs, const, ceiling)


def check_h_half_weighted(
    f, profile: HeightProfile, field_x=None, ceiling: float = 50.0
) -> RatioReport:
    """Half-derivative norm controlled by first-order distance-weighted data."""
    vals = _values(f)
    grad = _gradient(f, field_x, profile)
    lhs = h_half_norm(f, profile) ** 2
    rhs = quadrature(vals * vals + grad * grad, 1, profile)
    if rhs == 0.0 and lhs > 1e-14:
        raise InequalityViolationError(
            "weighted majorant vanished with nonzero half-derivative norm"
        )
    const = lhs / rhs if rhs > 0.0 else 0.0
    return RatioReport(lhs, rhs, const, ceiling)


def _half_interval_ranges(profile: HeightProfile, side: str):
    grid = profile.grid
    mid = (grid.n_nodes - 1) // 2
    if side == "left":
        return 0, mid
    if side == "right":
        return mid, grid.n_nodes - 1
    raise ConfigurationError(f"side must be 'left' or 'right', got {side!r}")


def check_interpolation_identity(
    f, profile: HeightProfile, field_x=None, weighted: bool = False, side: str = "left"
) -> IdentityReport:
    """Half-interval integration-by-parts identities for the distance weight.

    Unweighted (left half): int g^2 = 1/2 g(1/2)^2 - 2 int rho0 g g_x.
    Weighted:               int rho0 g^2 = 1/8 g(1/2)^2 - int rho0^2 g g_x.
    The right half mirrors both with the opposite boundary-term sign. Requires
    the distance profile, on which the identities are exact.
    """
    if profile.kind != "distance":
        raise ValidationError(
            "interpolation identities hold for the distance weight; got "
            f"profile kind {profile.kind!r}"
        )
    grid = profile.grid
    i0, i1 = _half_interval_ranges(profile, side)
    w = grid.subrange_weights(i0, i1)
    vals = _values(f)
    grad = _gradient(f, field_x, profile)
    rho = profile.values
    mid = (grid.n_nodes - 1) // 2
    g_mid_sq = vals[mid] ** 2
    sign = 1.0 if side == "left" else -1.0
    seg = slice(i0, i1 + 1)
    if not weighted:
        lhs = float(np.dot(w, vals[seg] ** 2))
        rhs = 0.5 * g_mid_sq - sign * 2.0 * float(np.dot(w, (rho * vals * grad)[seg]))
    else:
        lhs = float(np.dot(w, (rho * vals * vals)[seg]))
        rhs = 0.125 * g_mid_sq - sign * float(np.dot(w, (rho**2 * vals * grad)[seg]))
    return IdentityReport(lhs, rhs)


def check_sobolev_embedding(
    f, profile: HeightProfile, s: float = 0.25, ceiling: float = 50.0
) -> RatioReport:
    """Fractional embedding ||w||_{L^{2/(1-2s)}} <= C ||w||_{H^s}, 0 < s < 1/2.

    The H^s norm uses the cosine-spectral symbol (1 + (n pi)^2)^s. Exercised
    at s = 1/4 (so L^4 on the left); other exponents are out of scope.
    """
    if not 0.0 < s < 0.5:
        raise ConfigurationError(f"embedding exponent must be in (0, 1/2), got {s}")
    vals = _values(f)
    p = 2.0 / (1.0 - 2.0 * s)
    lhs = quadrature(np.abs(vals) ** p, 0, profile) ** (1.0 / p)
    coeffs = project_cosine(vals, profile)
    n = np.arange(len(coeffs))
    symbol = (1.0 + (n * np.pi) ** 2) ** s
    rhs = math.sqrt(float(np.dot(symbol, coeffs**2)))
    if rhs == 0.0 and lhs > 1e-14:
        raise InequalityViolationError("spectral norm vanished with nonzero Lp norm")
    const = lhs / rhs if rhs > 0.0 else 0.0
    return RatioReport(lhs, rhs, const, ceiling)


def check_interpolation_inequality(
    f, profile: HeightProfile, field_x=None, ceiling: float = 50.0
) -> RatioReport:
    """Plain L2 norm against the geometric mean of the weighted norms:

        ||g||_L2 <= C ||g||_{L2,rho0}^(1/2) ||g||_{H1,rho0}^(1/2).
    """
    vals = _values(f)
    grad = _gradient(f, field_x, profile)
    lhs = weighted_l2_norm(vals, 0, profile)
    l2w = weighted_l2_norm(vals, 1, profile)
    h1w = weighted_h1_norm(vals, 1, profile, field_x=grad)
    rhs = math.sqrt(l2w) * math.sqrt(h1w)
    if rhs == 0.0 and lhs > 1e-14:
        raise InequalityViolationError("weighted norms vanished with nonzero L2 norm")
    const = lhs / rhs if rhs > 0.0 else 0.0
    return RatioReport(lhs, rhs, const, ceiling)
