"""Nonlinearities ``H(u)`` and their logarithmic reaction terms.

With ``f = ln u`` the equation ``u_t = Δu + H(u)`` becomes
``f_t = Δf + |∇f|² + h(f)`` where ``h(f) = H(e^f) e^{-f}``.  Every checker in
the package works with ``h`` and its first two derivatives in ``f``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np

# (p_i - 1) f is clamped to this range before exponentiation.
EXP_CLAMP = 700.0


class EquationError(ValueError):
    """Raised for malformed equation specs or out-of-domain arguments."""


@dataclass(frozen=True)
class Linear:
    """``H(u) = p u``."""

    p: float = 0.0


@dataclass(frozen=True)
class Logarithmic:
    """``H(u) = a u ln u`` with ``a != 0``."""

    a: float

    def __post_init__(self):
        if self.a == 0:
            raise EquationError("Logarithmic requires a != 0 (a = 0 is Linear(0))")


@dataclass(frozen=True)
class PowerSum:
    """``H(u) = Σ a_i u^{p_i}`` with strictly increasing exponents."""

    terms: tuple[tuple[float, float], ...]

    def __post_init__(self):
        terms = tuple((float(a), float(p)) for a, p in self.terms)
        if not terms:
            raise EquationError("PowerSum needs at least one term")
        exps = [p for _, p in terms]
        if any(q <= p for p, q in zip(exps, exps[1:])):
            raise EquationError(f"PowerSum exponents must be strictly increasing, got {exps}")
        object.__setattr__(self, "terms", terms)

    @classmethod
    def yamabe(cls, a: float, b: float, p: float) -> "PowerSum":
        """``H(u) = a u + b u^p``; the linear term is dropped when ``a == 0``."""
        if p == 1:
            return cls(((a + b, 1.0),))
        terms = [(b, p)] if a == 0 else sorted([(a, 1.0), (b, p)], key=lambda ap: ap[1])
        return cls(tuple(terms))


EquationSpec = Union[Linear, Logarithmic, PowerSum]


@dataclass(frozen=True)
class CurvatureParams:
    """Effective dimension ``m``, curvature bound ``Ric_V^m >= -K``, and the
    spatial dimension ``n`` used by simulations and exact solutions."""

    m: float
    K: float = 0.0
    n: int = 1

    def __post_init__(self):
        if not self.m > 0:
            raise EquationError(f"m must be positive, got {self.m}")
        if self.K < 0:
            raise EquationError(f"K must be non-negative, got {self.K}")
        if int(self.n) != self.n or self.n < 1:
            raise EquationError(f"n must be a positive integer, got {self.n}")

    def require_flat(self):
        """Exact solutions with ``V = 0`` need ``m >= n``."""
        if self.m < self.n:
            raise EquationError(f"m={self.m} < n={self.n} is not allowed with V = 0")


def big_H(eq: EquationSpec, u):
    """Evaluate ``H(u)`` for ``u > 0``."""
    u = np.asarray(u, dtype=float)
    if np.any(u <= 0):
        raise EquationError("H(u) is only defined for u > 0")
    if isinstance(eq, Linear):
        out = eq.p * u
    elif isinstance(eq, Logarithmic):
        out = eq.a * u * np.log(u)
    elif isinstance(eq, PowerSum):
        out = sum(a * u**p for a, p in eq.terms)
    else:
        raise EquationError(f"unknown equation kind {eq!r}")
    return out if out.ndim else float(out)


def _power_parts(eq: PowerSum, f):
    f = np.asarray(f, dtype=float)
    vals = [np.zeros_like(f) for _ in range(3)]
    clamped = np.zeros(f.shape, dtype=bool)
    for a, p in eq.terms:
        q = p - 1.0
        x = q * f
        clamped |= np.abs(x) > EXP_CLAMP
        e = a * np.exp(np.clip(x, -EXP_CLAMP, EXP_CLAMP))
        vals[0] += e
        vals[1] += q * e
        vals[2] += q * q * e
    return vals, clamped


def reaction_terms(eq: EquationSpec, f):
    """Return ``(h, h', h'', clamped)`` at ``f``.

    ``clamped`` marks entries where a PowerSum exponent hit the ±700 clamp, in
    which case the values are finite surrogates rather than exact.
    """
    f = np.asarray(f, dtype=float)
    zeros = np.zeros_like(f)
    if isinstance(eq, Linear):
        return zeros + eq.p, zeros, zeros.copy(), np.zeros(f.shape, dtype=bool)
    if isinstance(eq, Logarithmic):
        return eq.a * f, zeros + eq.a, zeros, np.zeros(f.shape, dtype=bool)
    if isinstance(eq, PowerSum):
        (v0, v1, v2), clamped = _power_parts(eq, f)
        return v0, v1, v2, clamped
    raise EquationError(f"unknown equation kind {eq!r}")


def _scalar(x):
    return float(x) if np.ndim(x) == 0 else x


def h(eq: EquationSpec, f):
    return _scalar(reaction_terms(eq, f)[0])


def h1(eq: EquationSpec, f):
    return _scalar(reaction_terms(eq, f)[1])


def h2(eq: EquationSpec, f):
    return _scalar(reaction_terms(eq, f)[2])


def equation_from_dict(d: dict) -> EquationSpec:
    """Build an equation from a config mapping with keys ``kind``, ``p``,
    ``a``, ``terms`` (and ``b`` for the two-term Yamabe shorthand)."""
    kind = str(d.get("kind", "")).lower()
    if kind == "linear":
        return Linear(float(d.get("p", 0.0)))
    if kind in ("log", "logarithmic"):
        return Logarithmic(float(d["a"]))
    if kind in ("powersum", "power_sum", "power"):
        return PowerSum(tuple((float(a), float(p)) for a, p in d["terms"]))
    if kind == "yamabe":
        return PowerSum.yamabe(float(d.get("a", 0.0)), float(d["b"]), float(d["p"]))
    raise EquationError(f"unknown equation kind {d.get('kind')!r}")


def equation_to_dict(eq: EquationSpec) -> dict:
    if isinstance(eq, Linear):
        return {"kind": "linear", "p": eq.p}
    if isinstance(eq, Logarithmic):
        return {"kind": "logarithmic", "a": eq.a}
    return {"kind": "powersum", "terms": [list(t) for t in eq.terms]}
