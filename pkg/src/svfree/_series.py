"""Truncated Laurent-series arithmetic for one-sided boundary limits.

The vacuum endpoints make pointwise formulas of the form N(x)/rho0(x)^p
indeterminate: rho0 vanishes there, and whenever the data is compatible the
numerator vanishes to matching order. Evaluating the whole expression in a
truncated power-series ring around the endpoint performs every L'Hopital
cancellation at once and to machine precision. When a genuine pole survives,
the constant coefficient is the Hadamard finite part and the pole is flagged.

Series objects support +, -, *, /, ** with integers and mix freely with
Python scalars, so they can be fed straight through sympy-lambdified
rational expressions.
"""

from __future__ import annotations

import math

import numpy as np

N_TERMS = 12

# Relative threshold below which a leading coefficient is treated as
# cancellation dust when locating a denominator's valuation.
_VALUATION_DUST = 1e-12

# Relative threshold above which surviving negative-power coefficients are
# reported as a genuine pole rather than rounding residue.
_POLE_DUST = 1e-8


class LaurentSeries:
    """Power series sum_k c_k xi^(offset+k), truncated to N_TERMS coefficients."""

    __slots__ = ("offset", "coeffs")

    def __init__(self, coeffs, offset=0):
        c = np.asarray(coeffs, dtype=float)
        if c.shape != (N_TERMS,):
            full = np.zeros(N_TERMS)
            full[: min(len(c), N_TERMS)] = c[:N_TERMS]
            c = full
        self.coeffs = c
        self.offset = int(offset)

    # -- constructors -------------------------------------------------

    @classmethod
    def constant(cls, value):
        c = np.zeros(N_TERMS)
        c[0] = float(value)
        return cls(c, 0)

    @classmethod
    def from_derivatives(cls, derivs):
        """Series with coefficients derivs[m] / m! (Taylor data at the endpoint)."""
        c = np.zeros(N_TERMS)
        m = min(len(derivs), N_TERMS)
        c[:m] = [derivs[k] / math.factorial(k) for k in range(m)]
        return cls(c, 0)

    # -- helpers ------------------------------------------------------

    @staticmethod
    def _coerce(other):
        if isinstance(other, LaurentSeries):
            return other
        if isinstance(other, (int, float, np.integer, np.floating)):
            return LaurentSeries.constant(other)
        return NotImplemented

    def _shifted_to(self, offset):
        """Coefficients of self re-expressed with the given (lower) offset."""
        shift = self.offset - offset
        c = np.zeros(N_TERMS)
        upper = N_TERMS - shift
        if upper > 0:
            c[shift : shift + upper] = self.coeffs[:upper]
        return c

    def _valuation(self):
        scale = np.max(np.abs(self.coeffs))
        if scale == 0.0:
            return None
        sig = np.abs(self.coeffs) > _VALUATION_DUST * scale
        idx = int(np.argmax(sig))
        if not sig[idx]:
            return None
        return idx

    # -- ring operations ----------------------------------------------

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        off = min(self.offset, other.offset)
        return LaurentSeries(self._shifted_to(off) + other._shifted_to(off), off)

    __radd__ = __add__

    def __neg__(self):
        return LaurentSeries(-self.coeffs, self.offset)

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        prod = np.convolve(self.coeffs, other.coeffs)[:N_TERMS]
        return LaurentSeries(prod, self.offset + other.offset)

    __rmul__ = __mul__

    def _inverse(self):
        val = self._valuation()
        if val is None:
            raise ZeroDivisionError("inverse of the zero series")
        lead = self.coeffs[val]
        # normalize to a unit-leading valuation-0 series, invert by recurrence
        a = np.zeros(N_TERMS)
        a[: N_TERMS - val] = self.coeffs[val:] / lead
        inv = np.zeros(N_TERMS)
        inv[0] = 1.0
        for k in range(1, N_TERMS):
            inv[k] = -np.dot(a[1 : k + 1], inv[k - 1 :: -1])
        return LaurentSeries(inv / lead, -(self.offset + val))

    def __truediv__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return self * other._inverse()

    def __rtruediv__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return other * self._inverse()

    def __pow__(self, n):
        if not isinstance(n, (int, np.integer)):
            return NotImplemented
        n = int(n)
        if n < 0:
            return self._inverse() ** (-n)
        result = LaurentSeries.constant(1.0)
        base = self
        while n:
            if n & 1:
                result = result * base
            base = base * base
            n >>= 1
        return result

    # -- extraction ---------------------------------------------------

    def _scale(self):
        return max(float(np.max(np.abs(self.coeffs))), 1.0)

    def finite_part(self):
        """Coefficient of power 0 (the one-sided limit when no pole survives)."""
        k = -self.offset
        if 0 <= k < N_TERMS:
            return float(self.coeffs[k])
        return 0.0

    def pole_strength(self):
        """Largest surviving negative-power coefficient, relative to scale."""
        if self.offset >= 0:
            return 0.0
        neg = self.coeffs[: -self.offset]
        return float(np.max(np.abs(neg))) / self._scale()

    def has_pole(self):
        return self.pole_strength() > _POLE_DUST

    def limit(self, direction=1):
        """One-sided limit at the endpoint: finite part, or +-inf at a pole.

        direction is the sign of the local coordinate on the interior side
        (+1 at the left endpoint, -1 at the right one); a pole c*xi^p flips
        sign with odd p when approached from below.
        """
        if not self.has_pole():
            return self.finite_part()
        neg = self.coeffs[: -self.offset]
        scale = self._scale()
        sig = np.abs(neg) > _POLE_DUST * scale
        lowest = int(np.argmax(sig))
        power = self.offset + lowest
        sign = np.sign(neg[lowest]) * (direction ** (power & 1))
        return math.inf if sign > 0 else -math.inf

    def __repr__(self):
        return f"LaurentSeries(offset={self.offset}, coeffs={self.coeffs!r})"
