"""Scalar time functions carried together with their exact derivative.

A :class:`TimeFunction` maps an array of times to ``(value, derivative)``.
Arithmetic on them applies the sum/product/quotient rules, so catalog
formulas can be written the way they read on paper while derivatives stay
analytic.  The kernels below the class are the few pieces that need a
cancellation-free evaluation near ``t = 0``.
"""

from __future__ import annotations

import math

import numpy as np


def _as_time(t):
    """Float array; ``longdouble`` input is kept so margins can be evaluated in extended precision."""
    t = np.asarray(t)
    if t.dtype != np.longdouble:
        t = t.astype(float)
    return t


class TimeFunction:
    __slots__ = ("_fn", "label")

    def __init__(self, fn, label: str = ""):
        self._fn = fn
        self.label = label

    def __call__(self, t):
        t = _as_time(t)
        v, d = self._fn(t)
        return np.broadcast_to(v, t.shape).astype(t.dtype), np.broadcast_to(d, t.shape).astype(t.dtype)

    def value(self, t):
        return self(t)[0]

    def deriv(self, t):
        return self(t)[1]

    @staticmethod
    def _lift(x) -> "TimeFunction":
        if isinstance(x, TimeFunction):
            return x
        return const(float(x))

    def __add__(self, other):
        o = TimeFunction._lift(other)

        def fn(t):
            a, da = self(t)
            b, db = o(t)
            return a + b, da + db

        return TimeFunction(fn)

    __radd__ = __add__

    def __neg__(self):
        return TimeFunction(lambda t: tuple(-x for x in self(t)))

    def __sub__(self, other):
        return self + (-TimeFunction._lift(other))

    def __rsub__(self, other):
        return TimeFunction._lift(other) + (-self)

    def __mul__(self, other):
        if not isinstance(other, TimeFunction):
            k = float(other)
            return TimeFunction(lambda t: tuple(k * x for x in self(t)))

        def fn(t):
            a, da = self(t)
            b, db = other(t)
            return a * b, da * b + a * db

        return TimeFunction(fn)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if not isinstance(other, TimeFunction):
            return self * (1.0 / float(other))

        def fn(t):
            a, da = self(t)
            b, db = other(t)
            return a / b, (da * b - a * db) / (b * b)

        return TimeFunction(fn)

    def __rtruediv__(self, other):
        return TimeFunction._lift(other) / self

    def __pow__(self, k: int):
        k = int(k)

        def fn(t):
            a, da = self(t)
            return a**k, k * a ** (k - 1) * da

        return TimeFunction(fn)

    def sqrt(self):
        def fn(t):
            a, da = self(t)
            r = np.sqrt(a)
            return r, da / (2 * r)

        return TimeFunction(fn)


def const(v: float) -> TimeFunction:
    return TimeFunction(lambda t: (np.full(t.shape, v, dtype=t.dtype), np.zeros(t.shape, dtype=t.dtype)),
                        label=f"{v:g}")


def identity() -> TimeFunction:
    return TimeFunction(lambda t: (t, np.ones(t.shape, dtype=t.dtype)), label="t")


def inv_t() -> TimeFunction:
    return TimeFunction(lambda t: (1.0 / t, -1.0 / (t * t)), label="1/t")


def exp(k: float) -> TimeFunction:
    """``e^{k t}``."""

    def fn(t):
        e = np.exp(k * t)
        return e, k * e

    return TimeFunction(fn)


def tanh(k: float) -> TimeFunction:
    def fn(t):
        th = np.tanh(k * t)
        return th, k / np.cosh(k * t) ** 2

    return TimeFunction(fn)


def coth_plus_one(k: float) -> TimeFunction:
    """``coth(kt) + 1 = 2 / (1 - e^{-2kt})``, stable for small and large ``kt``."""

    def fn(t):
        em = np.expm1(-2 * k * t)
        return -2.0 / em, -4.0 * k * np.exp(-2 * k * t) / em**2

    return TimeFunction(fn)


def one_minus_exp(a: float) -> TimeFunction:
    """``1 - e^{-a t}``."""

    def fn(t):
        return -np.expm1(-a * t), a * np.exp(-a * t)

    return TimeFunction(fn)


def sharp_profile(a: float) -> TimeFunction:
    """``a / (1 - e^{-a t})``; tends to ``1/t`` as ``a -> 0``."""
    if a == 0:
        return inv_t()

    def fn(t):
        d = -np.expm1(-a * t)
        return a / d, -a * a * np.exp(-a * t) / (d * d)

    return TimeFunction(fn)


# --- cancellation-free kernels ---------------------------------------------

_SERIES_CUT = 0.5


def _sinh2x_half_minus_x(x):
    """``sinh(2x)/2 - x`` via its Taylor series for small ``x``."""
    y = 2 * x
    out = np.zeros_like(x)
    term = y**3 / 6.0
    k = 1
    while k < 14:
        out = out + term / 2.0
        term = term * y * y / ((2 * k + 2) * (2 * k + 3))
        k += 1
    return out


def lixu_alpha(k: float) -> TimeFunction:
    """``1 + (sinh(kt)cosh(kt) - kt) / sinh²(kt)``; rises from 1 to 2."""
    if k <= 0:
        raise ValueError("lixu_alpha needs k > 0")

    def fn(t):
        x = k * t
        v = np.empty_like(x)
        d = np.empty_like(x)
        small = x < _SERIES_CUT
        xs = x[small]
        if xs.size:
            g = _sinh2x_half_minus_x(xs)
            s = np.sinh(xs)
            v[small] = 1.0 + g / s**2
            d[small] = k * (2.0 - 2.0 * g * np.cosh(xs) / s**3)
        xl = x[~small]
        if xl.size:
            q = np.exp(-2 * xl)
            den = -np.expm1(-2 * xl)
            coth = (1 + q) / den
            csch2 = 4 * q / den**2
            v[~small] = 1.0 + coth - xl * csch2
            d[~small] = k * 2 * csch2 * (xl * coth - 1.0)
        return v, d

    return TimeFunction(fn, label=f"lixu_alpha({k:g})")


def _expm1_minus_x_over_x(x):
    """``(e^x - 1 - x) / x`` with the removable point at 0."""
    out = np.empty_like(x)
    small = np.abs(x) < _SERIES_CUT
    xs = x[small]
    if xs.size:
        acc = np.zeros_like(xs)
        term = xs / 2.0
        for j in range(2, 20):
            acc = acc + term
            term = term * xs / (j + 1)
        out[small] = acc
    xl = x[~small]
    out[~small] = (np.expm1(xl) - xl) / xl
    return out


def hhl_alpha(a: float, K: float) -> TimeFunction:
    """Li-Xu type ``α`` for the log equation with ``a >= 0``::

        (a+2K)/(a+K) · [e^{st} - 1 + s (e^{-at} - 1)/a] / [e^{st} + e^{-st} - 2],  s = 2K + a.

    Substituting ``K -> K - a`` gives the ``a < 0`` alternative, and ``a -> M``
    the bounded-solution Yamabe variants.
    """
    s = 2 * K + a
    if s <= 0 or a + K <= 0:
        raise ValueError("hhl_alpha needs 2K + a > 0 and K + a > 0")
    pref = s / (a + K)

    def fn(t):
        st = s * t
        # numerator = s t [E(st) - E(-at)], E(x) = (e^x - 1 - x)/x, after the s t terms cancel
        num = st * (_expm1_minus_x_over_x(st) - _expm1_minus_x_over_x(-a * t))
        sh = np.sinh(st / 2)
        den = 4 * sh * sh
        dnum = s * (np.expm1(st) - np.expm1(-a * t))
        dden = 2 * s * np.sinh(st)
        big = st > 600
        with np.errstate(over="ignore", invalid="ignore"):
            v = pref * num / den
            d = pref * (dnum * den - num * dden) / (den * den)
        if np.any(big):
            # e^{st} dominates; α -> pref with exponentially small corrections
            v = np.where(big, pref, v)
            d = np.where(big, 0.0, d)
        return v, d

    return TimeFunction(fn, label=f"hhl_alpha({a:g},{K:g})")


def lixu_unit_crossing(level: float) -> float:
    """Unique ``t > 0`` with ``1 + (sinh t cosh t - t)/sinh² t = level``, for ``level`` in (1, 2)."""
    from scipy.optimize import brentq

    if not 1 < level < 2:
        raise ValueError("level must lie in (1, 2)")
    f = lixu_alpha(1.0)
    lo, hi = 1e-12, 1.0
    while f.value(np.array([hi]))[0] < level:
        hi *= 2
    return brentq(lambda x: f.value(np.array([x]))[0] - level, lo, hi, xtol=1e-14, rtol=1e-14)


def logspace(lo: float, hi: float, n: int) -> np.ndarray:
    return np.logspace(math.log10(lo), math.log10(hi), n)
