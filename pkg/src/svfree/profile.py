"""Reference-interval grid, vacuum height profiles, quadrature, differentiation.

The initial height rho0 lives on the fixed reference interval [0, 1], vanishes
exactly at both endpoints, and is pinched between multiples of the boundary
distance d(x) = min(x, 1-x) with a finite nonzero one-sided slope (the
physical-vacuum condition: the squared sound speed vanishes linearly at the
boundary). Profiles carry closed-form derivatives so downstream jet formulas
never see differencing noise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import sympy as sp
from numpy.lib.stride_tricks import sliding_window_view

from .errors import ConfigurationError, UnsupportedOperationError, ValidationError
from ._series import N_TERMS, LaurentSeries

__all__ = [
    "Grid",
    "Field",
    "HeightProfile",
    "AnalyticField",
    "build_grid",
    "sample_height_profile",
    "sample_velocity",
    "quadrature",
    "differentiate",
    "fornberg_weights",
]

_X = sp.Symbol("x", real=True)

_ZERO_SNAP = 1e-12


def _parse_expr(expr):
    """Sympify and rebind any symbol named x to the module's real symbol."""
    e = sp.sympify(expr)
    for s in e.free_symbols:
        if s.name == "x":
            e = e.subs(s, _X)
        else:
            raise ConfigurationError(
                f"closed-form expressions may only use 'x', found {s.name!r}"
            )
    return e


@dataclass(frozen=True)
class Grid:
    """Uniform grid on [0, 1] with an odd node count (composite Simpson)."""

    n_nodes: int
    nodes: np.ndarray
    spacing: float
    simpson_weights: np.ndarray

    def subrange_weights(self, i0: int, i1: int) -> np.ndarray:
        """Simpson weights for the node range [i0, i1] (inclusive, even span)."""
        if (i1 - i0) % 2 != 0 or i1 <= i0:
            raise ConfigurationError(
                f"Simpson subrange [{i0}, {i1}] must span an even number of panels"
            )
        w = np.ones(i1 - i0 + 1)
        w[1:-1:2] = 4.0
        w[2:-1:2] = 2.0
        return w * (self.spacing / 3.0)


@dataclass(frozen=True)
class Field:
    """Nodal scalar field."""

    values: np.ndarray
    meta: str = ""


def build_grid(n_nodes: int) -> Grid:
    if n_nodes < 5 or n_nodes % 2 == 0:
        raise ConfigurationError(
            f"n_nodes must be odd and >= 5 for composite Simpson, got {n_nodes}"
        )
    nodes = np.linspace(0.0, 1.0, n_nodes)
    h = 1.0 / (n_nodes - 1)
    w = np.ones(n_nodes)
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    return Grid(n_nodes, nodes, h, w * (h / 3.0))


def _values_of(f) -> np.ndarray:
    if isinstance(f, Field):
        return f.values
    return np.asarray(f, dtype=float)


class _AnalyticBase:
    """Closed-form scalar on the grid with exact derivatives of any order."""

    def __init__(self, expr, grid: Grid):
        self.expr = _parse_expr(expr)
        self.grid = grid
        self._deriv_cache: dict[int, np.ndarray] = {}
        self._fn_cache: dict[int, object] = {}
        self._taylor_cache: dict[float, np.ndarray] = {}

    def _callable(self, order: int):
        fn = self._fn_cache.get(order)
        if fn is None:
            fn = sp.lambdify(_X, sp.diff(self.expr, _X, order), "numpy")
            self._fn_cache[order] = fn
        return fn

    def sample(self, x, order: int = 0) -> np.ndarray:
        """Evaluate the order-th derivative at arbitrary points."""
        x = np.asarray(x, dtype=float)
        vals = np.asarray(self._callable(order)(x), dtype=float)
        if vals.ndim == 0:
            vals = np.full(x.shape, float(vals))
        return vals

    def derivative_values(self, order: int) -> np.ndarray:
        cached = self._deriv_cache.get(order)
        if cached is None:
            cached = self.sample(self.grid.nodes, order)
            self._deriv_cache[order] = cached
        return cached

    @property
    def values(self) -> np.ndarray:
        return self.derivative_values(0)

    def endpoint_derivatives(self, x0: float, n: int = N_TERMS) -> np.ndarray:
        """One-sided derivatives of orders 0..n-1 at the endpoint x0."""
        cached = self._taylor_cache.get(x0)
        if cached is None or len(cached) < n:
            derivs = []
            d = self.expr
            for k in range(max(n, N_TERMS)):
                derivs.append(float(d.subs(_X, sp.Rational(x0))))
                d = sp.diff(d, _X)
            arr = np.asarray(derivs)
            scale = np.max(np.abs(arr))
            if scale > 0:
                arr[np.abs(arr) <= 1e-13 * scale] = 0.0
            cached = arr
            self._taylor_cache[x0] = cached
        return cached[:n]

    def endpoint_series(self, x0: float) -> LaurentSeries:
        return LaurentSeries.from_derivatives(self.endpoint_derivatives(x0))


class AnalyticField(_AnalyticBase):
    """Analytic velocity/test field with exact derivatives at the nodes."""

    def __init__(self, expr, grid: Grid, kind: str = "custom"):
        super().__init__(expr, grid)
        self.kind = kind

    def as_field(self, meta: str = "") -> Field:
        return Field(self.values, meta)


class HeightProfile(_AnalyticBase):
    """Initial height rho0 with its vacuum-rate constants c1, c2."""

    def __init__(self, kind, expr, grid, c1, c2, params=None):
        super().__init__(expr, grid)
        self.kind = kind
        self.c1 = float(c1)
        self.c2 = float(c2)
        self.params = dict(params or {})
        vals = self.derivative_values(0)
        # endpoint values are analytic zeros; snap away lambdify dust
        vals[0] = 0.0
        vals[-1] = 0.0
        self.derivatives = {k: self.derivative_values(k) for k in range(1, 6)}

    def weight_values(self, power: int) -> np.ndarray:
        if power == 0:
            return np.ones(self.grid.n_nodes)
        return self.values**power


class _DistanceProfile(HeightProfile):
    """Boundary-distance weight d(x) = min(x, 1-x).

    Not smooth at the midpoint; used by the weighted-norm identity checks,
    never by the solver.
    """

    def __init__(self, grid: Grid):
        _AnalyticBase.__init__(self, sp.Integer(0), grid)  # expr unused
        self.kind = "distance"
        self.c1 = 1.0
        self.c2 = 1.0
        self.params = {}
        x = grid.nodes
        vals = np.minimum(x, 1.0 - x)
        d1 = np.where(x < 0.5, 1.0, -1.0)
        d1[np.isclose(x, 0.5)] = 0.0
        self._deriv_cache = {0: vals, 1: d1}
        for k in range(2, 8):
            self._deriv_cache[k] = np.zeros(grid.n_nodes)
        self.derivatives = {k: self._deriv_cache[k] for k in range(1, 6)}

    def derivative_values(self, order: int) -> np.ndarray:
        if order not in self._deriv_cache:
            self._deriv_cache[order] = np.zeros(self.grid.n_nodes)
        return self._deriv_cache[order]

    def sample(self, x, order: int = 0) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if order == 0:
            return np.minimum(x, 1.0 - x)
        if order == 1:
            out = np.where(x < 0.5, 1.0, -1.0)
            return np.where(np.isclose(x, 0.5), 0.0, out)
        return np.zeros(x.shape)

    def endpoint_derivatives(self, x0: float, n: int = N_TERMS) -> np.ndarray:
        out = np.zeros(max(n, N_TERMS))
        out[1] = 1.0 if x0 == 0.0 else -1.0
        return out[:n]


def _distance_values(grid: Grid) -> np.ndarray:
    return np.minimum(grid.nodes, 1.0 - grid.nodes)


def _validate_vacuum_profile(profile: HeightProfile) -> None:
    grid = profile.grid
    vals = profile.values
    if abs(vals[0]) > _ZERO_SNAP or abs(vals[-1]) > _ZERO_SNAP:
        raise ValidationError("height profile must vanish exactly on the boundary")
    if np.any(vals[1:-1] <= 0.0):
        raise ValidationError("height profile must be strictly positive inside")
    d1 = profile.derivative_values(1)
    for idx, name in ((0, "left"), (-1, "right")):
        if not (1e-10 < abs(d1[idx]) < math.inf):
            raise ValidationError(
                f"height profile needs a finite nonzero {name} endpoint slope "
                "(physical vacuum requires the squared sound speed to vanish "
                "linearly at the boundary)"
            )
    d = _distance_values(grid)
    interior = slice(1, -1)
    lo = profile.c1 * d[interior] - 1e-12
    hi = profile.c2 * d[interior] + 1e-12
    if np.any(vals[interior] < lo) or np.any(vals[interior] > hi):
        raise ValidationError(
            "height profile violates the two-sided distance bound "
            f"c1*d <= rho0 <= c2*d with c1={profile.c1}, c2={profile.c2}"
        )


def sample_height_profile(kind: str, params: dict | None, grid: Grid) -> HeightProfile:
    """Build and validate an initial height profile.

    kinds: ``parabolic`` a*x*(1-x); ``sine`` a*sin(pi*x); ``distance``
    min(x, 1-x); ``custom`` with a closed-form ``expr`` in x.
    """
    params = dict(params or {})
    if kind == "parabolic":
        a = float(params.get("amplitude", 1.0))
        if a <= 0:
            raise ValidationError("parabolic profile needs amplitude > 0")
        profile = HeightProfile(
            kind, a * _X * (1 - _X), grid, c1=a / 2.0, c2=a, params=params
        )
    elif kind in ("sine", "sine-shaped"):
        a = float(params.get("amplitude", 1.0))
        if a <= 0:
            raise ValidationError("sine profile needs amplitude > 0")
        profile = HeightProfile(
            "sine", a * sp.sin(sp.pi * _X), grid, c1=2.0 * a, c2=a * math.pi, params=params
        )
    elif kind == "distance":
        return _DistanceProfile(grid)
    elif kind in ("custom", "custom-analytic"):
        if "expr" not in params:
            raise ConfigurationError("custom profile needs an 'expr' entry")
        expr = _parse_expr(params["expr"])
        tmp = _AnalyticBase(expr, grid)
        vals = tmp.derivative_values(0).copy()
        if abs(vals[0]) > _ZERO_SNAP or abs(vals[-1]) > _ZERO_SNAP:
            raise ValidationError("custom profile must vanish on the boundary")
        if np.any(vals[1:-1] <= 0.0):
            raise ValidationError("custom profile must be positive inside")
        d = _distance_values(grid)
        ratio = vals[1:-1] / d[1:-1]
        d1 = tmp.derivative_values(1)
        slopes = [abs(d1[0]), abs(d1[-1])]
        c1 = min(float(np.min(ratio)), *slopes)
        c2 = max(float(np.max(ratio)), *slopes)
        if not (c1 > 1e-10 and np.isfinite(c2)):
            raise ValidationError(
                "custom profile violates the physical vacuum condition "
                "(vanishing or unbounded slope at an endpoint)"
            )
        profile = HeightProfile("custom", expr, grid, c1=c1, c2=c2, params=params)
    else:
        raise ConfigurationError(f"unknown profile kind {kind!r}")
    _validate_vacuum_profile(profile)
    return profile


def sample_velocity(kind: str, params: dict | None, grid: Grid) -> AnalyticField:
    """Build an initial velocity with endpoint-Neumann compatibility u0_x = 0."""
    params = dict(params or {})
    if kind == "zero":
        return AnalyticField(sp.Integer(0), grid, kind)
    if kind == "cosine":
        a = float(params.get("amplitude", 1.0))
        m = int(params.get("mode", 1))
        if m < 1:
            raise ValidationError("cosine velocity needs mode >= 1")
        u0 = AnalyticField(a * sp.cos(m * sp.pi * _X), grid, kind)
    elif kind == "custom":
        if "expr" not in params:
            raise ConfigurationError("custom velocity needs an 'expr' entry")
        u0 = AnalyticField(_parse_expr(params["expr"]), grid, kind)
    else:
        raise ConfigurationError(f"unknown velocity kind {kind!r}")
    d1 = u0.derivative_values(1)
    scale = max(float(np.max(np.abs(d1))), 1.0)
    if abs(d1[0]) > 1e-10 * scale or abs(d1[-1]) > 1e-10 * scale:
        raise ValidationError(
            "initial velocity must satisfy the endpoint condition u0_x = 0"
        )
    d1[0] = 0.0
    d1[-1] = 0.0
    return u0


def quadrature(f, weight_power: int, profile: HeightProfile) -> float:
    """Composite Simpson value of the weighted integral of rho0^k * f on [0, 1].

    Exact (to rounding) for integrands that are cubic on each two-panel cell.
    """
    if not 0 <= weight_power <= 6:
        raise ConfigurationError(f"weight_power must be in 0..6, got {weight_power}")
    vals = _values_of(f)
    grid = profile.grid
    if vals.shape != (grid.n_nodes,):
        raise ConfigurationError(
            f"field length {vals.shape} does not match grid n_nodes={grid.n_nodes}"
        )
    return float(np.dot(grid.simpson_weights, profile.weight_values(weight_power) * vals))


def fornberg_weights(order: int, x0: float, xs: np.ndarray) -> np.ndarray:
    """Finite-difference weights for the order-th derivative at x0 on nodes xs."""
    n = len(xs)
    c = np.zeros((n, order + 1))
    c[0, 0] = 1.0
    c1 = 1.0
    c4 = xs[0] - x0
    for i in range(1, n):
        mn = min(i, order)
        c2 = 1.0
        c5 = c4
        c4 = xs[i] - x0
        for j in range(i):
            c3 = xs[i] - xs[j]
            c2 *= c3
            if j == i - 1:
                for k in range(mn, 0, -1):
                    c[i, k] = c1 * (k * c[i - 1, k - 1] - c5 * c[i - 1, k]) / c2
                c[i, 0] = -c1 * c5 * c[i - 1, 0] / c2
            for k in range(mn, 0, -1):
                c[j, k] = (c4 * c[j, k] - k * c[j, k - 1]) / c3
            c[j, 0] = c4 * c[j, 0] / c3
        c1 = c2
    return c[:, order]


def differentiate(f, order: int, grid: Grid | None = None):
    """Derivative of a nodal or modal field.

    Nodal fields use sliding finite-difference stencils (order+2 points,
    second-order consistency including the one-sided boundary rows). Modal
    objects exposing ``derivative(order)`` differentiate spectrally instead.
    """
    if hasattr(f, "derivative") and not isinstance(f, Field):
        return f.derivative(order)
    if order > 6:
        raise UnsupportedOperationError(f"derivative order {order} > 6 is unsupported")
    if order < 1:
        raise ConfigurationError(f"derivative order must be >= 1, got {order}")
    vals = _values_of(f)
    if grid is None:
        raise ConfigurationError("nodal differentiation needs the grid")
    n = grid.n_nodes
    if n < order + 2:
        raise ConfigurationError(
            f"grid has {n} nodes; order-{order} stencils need at least {order + 2}"
        )
    s = order + 2
    h = grid.spacing
    xs = np.arange(s) * h
    table = np.array([fornberg_weights(order, pos * h, xs) for pos in range(s)])
    out = np.empty(n)
    windows = sliding_window_view(vals, s)
    half = s // 2
    for i in range(n):
        start = min(max(i - half, 0), n - s)
        out[i] = np.dot(table[i - start], windows[start])
    meta = f.meta if isinstance(f, Field) else ""
    return Field(out, f"d{order}({meta})" if meta else f"d{order}")
