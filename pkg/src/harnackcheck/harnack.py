"""Integrated Harnack inequalities along space-time paths.

Integrating ``γ|∇f|² - α f_t + α h - φ <= 0`` along a path ``l`` from
``(x1, t1)`` to ``(x2, t2)`` gives, for the log equation,

    e^{-a t2} f(x2, t2) - e^{-a t1} f(x1, t1) >= ∫ e^{-at} (-φ/α - (α/4γ)|l'|²) dt

and the same without the weight for power nonlinearities.  With constant
``α, γ`` the best path runs at speed ``∝ e^{at}``; the sharp family turns
the resulting bound into an equality.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.integrate import quad

from harnackcheck.candidates import CandidateFunctions

QUAD_TOL = 1e-10
PARAMETERIZATIONS = ("constant_speed", "exponential_speed", "sampled")


class HarnackError(ValueError):
    pass


@dataclass
class PathSpec:
    """Path from ``x1`` at ``t1`` to ``x2`` at ``t2``.

    ``constant_speed`` and ``exponential_speed`` follow the straight segment
    (``a`` sets the exponential rate).  ``sampled`` is piecewise linear
    through ``points`` at ``times``.
    """

    x1: np.ndarray
    x2: np.ndarray
    t1: float
    t2: float
    parameterization: str = "constant_speed"
    a: float = 0.0
    times: Optional[np.ndarray] = None
    points: Optional[np.ndarray] = None
    length: Optional[float] = None

    def __post_init__(self):
        self.x1 = np.atleast_1d(np.asarray(self.x1, dtype=float))
        self.x2 = np.atleast_1d(np.asarray(self.x2, dtype=float))
        if not 0 < self.t1 < self.t2:
            raise HarnackError(f"need 0 < t1 < t2, got t1={self.t1}, t2={self.t2}")
        if self.parameterization not in PARAMETERIZATIONS:
            raise HarnackError(f"parameterization must be one of {PARAMETERIZATIONS}")
        if self.parameterization == "sampled":
            if self.times is None or self.points is None:
                raise HarnackError("sampled paths need times and points")
            self.times = np.asarray(self.times, dtype=float)
            pts = np.asarray(self.points, dtype=float)
            self.points = pts.reshape(len(self.times), -1)
            if np.any(np.diff(self.times) <= 0):
                raise HarnackError("sample times must be strictly increasing")
            if abs(self.times[0] - self.t1) > 1e-12 or abs(self.times[-1] - self.t2) > 1e-12:
                raise HarnackError("sample times must run from t1 to t2")
            if not (np.allclose(self.points[0], self.x1) and np.allclose(self.points[-1], self.x2)):
                raise HarnackError("sampled paths must start at x1 and end at x2")
        if self.length is None:
            self.length = float(np.linalg.norm(self.x2 - self.x1))

    def segments(self) -> list:
        """``(s0, s1, speed_fn)`` pieces covering ``[t1, t2]``."""
        L, t1, t2 = self.length, self.t1, self.t2
        if self.parameterization == "constant_speed":
            v = L / (t2 - t1)
            return [(t1, t2, lambda t: v)]
        if self.parameterization == "exponential_speed":
            return [(t1, t2, optimal_speed(self.a, t1, t2, L))]
        out = []
        for k in range(len(self.times) - 1):
            s0, s1 = self.times[k], self.times[k + 1]
            v = float(np.linalg.norm(self.points[k + 1] - self.points[k])) / (s1 - s0)
            out.append((s0, s1, lambda t, v=v: v))
        return out


def optimal_speed(a: float, t1: float, t2: float, L: float):
    """Speed ``aL e^{at}/(e^{at2} - e^{at1})`` minimising ``∫ e^{-at}|l'|² dt``; ``L/(t2-t1)`` at ``a = 0``."""
    if a == 0:
        return lambda t: L / (t2 - t1)
    k = a * L / (math.exp(a * t2) - math.exp(a * t1))
    return lambda t: k * math.exp(a * t)


def min_energy(a: float, t1: float, t2: float, L: float) -> float:
    """``min ∫ e^{-at}|l'|² dt = aL²/(e^{at2} - e^{at1})``."""
    if a == 0:
        return L * L / (t2 - t1)
    return a * L * L / (math.exp(a * t2) - math.exp(a * t1))


def path_energy(path: PathSpec, a: float) -> float:
    """``∫ e^{-at}|l'|² dt`` along ``path``."""
    total = 0.0
    for s0, s1, v in path.segments():
        total += quad(lambda t: math.exp(-a * t) * v(t) ** 2, s0, s1, epsabs=QUAD_TOL, epsrel=QUAD_TOL)[0]
    return total


def _at(fn, t):
    v, d = fn(np.array([t]))
    return float(v[0])


def _constant(fn, t1, t2) -> Optional[float]:
    ts = np.linspace(t1, t2, 9)
    vals = fn(ts)[0]
    if np.max(np.abs(vals - vals[0])) > 1e-12 * max(1.0, abs(vals[0])):
        return None
    return float(vals[0])


def _is_sharp_phi(cand: CandidateFunctions, a: float) -> bool:
    return cand.name == "log.sharp_compact" and cand.param_meta.get("a") == a


def phi_integral(cand: CandidateFunctions, a: float, t1: float, t2: float, weighted: bool = True) -> float:
    """``∫ w(t) φ/α dt`` with ``w = e^{-at}`` (log case) or 1."""
    w = (lambda t: math.exp(-a * t)) if weighted else (lambda t: 1.0)
    return quad(lambda t: w(t) * _at(cand.phi, t) / _at(cand.alpha, t), t1, t2,
                epsabs=QUAD_TOL, epsrel=QUAD_TOL, limit=200)[0]


def sharp_phi_integral(m: float, a: float, t1: float, t2: float) -> float:
    """``∫ e^{-at} · ma/(2(1 - e^{-at})) dt = (m/2) ln((1 - e^{-at2})/(1 - e^{-at1}))``."""
    return (m / 2) * math.log(math.expm1(-a * t2) / math.expm1(-a * t1))


def harnack_rhs_log(cand: CandidateFunctions, a: float, t1: float, t2: float, dist: float) -> float:
    """``-∫ e^{-at} φ/α dt - (α/4γ) a d²/(e^{at2} - e^{at1})`` for constant ``α, γ``."""
    if not 0 < t1 < t2:
        raise HarnackError("need 0 < t1 < t2")
    al, ga = _constant(cand.alpha, t1, t2), _constant(cand.gamma, t1, t2)
    if al is None or ga is None:
        raise HarnackError(f"{cand.name}: alpha or gamma varies on [t1, t2]; use path_integral_rhs")
    if _is_sharp_phi(cand, a):
        integral = sharp_phi_integral(cand.param_meta["m"], a, t1, t2) / al
    else:
        integral = phi_integral(cand, a, t1, t2)
    return -integral - (al / (4 * ga)) * min_energy(a, t1, t2, dist)


def harnack_rhs_power(cand: CandidateFunctions, t1: float, t2: float, dist: float) -> float:
    """``-∫ φ/α dt - (α/4γ) d²/(t2 - t1)`` for constant ``α, γ``."""
    if not 0 < t1 < t2:
        raise HarnackError("need 0 < t1 < t2")
    al, ga = _constant(cand.alpha, t1, t2), _constant(cand.gamma, t1, t2)
    if al is None or ga is None:
        raise HarnackError(f"{cand.name}: alpha or gamma varies on [t1, t2]; use path_integral_rhs")
    return -phi_integral(cand, 0.0, t1, t2, weighted=False) - (al / (4 * ga)) * dist * dist / (t2 - t1)


def path_integral_rhs(cand: CandidateFunctions, eq_kind: str, path: PathSpec, a: float = 0.0) -> float:
    """``∫ w(t)(-φ/α - (α/4γ)|l'|²) dt`` along ``path``; ``w = e^{-at}`` for ``log``, 1 for ``power``."""
    if eq_kind not in ("log", "power"):
        raise HarnackError("eq_kind must be 'log' or 'power'")
    rate = a if eq_kind == "log" else 0.0
    total = 0.0
    for s0, s1, v in path.segments():
        def integrand(t, v=v):
            al, ga = _at(cand.alpha, t), _at(cand.gamma, t)
            return math.exp(-rate * t) * (-_at(cand.phi, t) / al - al / (4 * ga) * v(t) ** 2)

        total += quad(integrand, s0, s1, epsabs=QUAD_TOL, epsrel=QUAD_TOL, limit=200)[0]
    return total


def sharp_x0(a: float, t1: float, t2: float, x1, x2) -> np.ndarray:
    """``((e^{at2} - 1)x1 - (e^{at1} - 1)x2)/(e^{at2} - e^{at1})``."""
    if t1 == t2:
        raise HarnackError("sharp_x0 needs t1 != t2")
    x1 = np.atleast_1d(np.asarray(x1, dtype=float))
    x2 = np.atleast_1d(np.asarray(x2, dtype=float))
    e1, e2 = math.expm1(a * t1), math.expm1(a * t2)
    return (e2 * x1 - e1 * x2) / (e2 - e1)


@dataclass
class SharpHarnackReport:
    lhs: float
    rhs: float
    slack: float
    x0: list
    equality_expected: bool
    passed: bool
    tol: float

    def to_dict(self):
        return {"lhs": self.lhs, "rhs": self.rhs, "slack": self.slack, "x0": self.x0,
                "equality_expected": self.equality_expected, "passed": self.passed, "tol": self.tol}


def sharp_harnack_sides(a: float, n: int, t1: float, t2: float, x1, x2, x0=None, C: float = 0.0) -> tuple:
    """Both sides of the sharp log Harnack inequality on the exact solution centred at ``x0``."""
    from harnackcheck.pde_lab import ExactLogSolution

    x1 = np.atleast_1d(np.asarray(x1, dtype=float))
    x2 = np.atleast_1d(np.asarray(x2, dtype=float))
    if x0 is None:
        x0 = sharp_x0(a, t1, t2, x1, x2)
    sol = ExactLogSolution(a, n, tuple(np.atleast_1d(x0)), C)
    lhs = math.exp(-a * t2) * float(sol.f(x2, t2)) - math.exp(-a * t1) * float(sol.f(x1, t1))
    d2 = float(np.sum((x1 - x2) ** 2))
    rhs = -sharp_phi_integral(n, a, t1, t2) - a * d2 / (4 * (math.exp(a * t2) - math.exp(a * t1)))
    return lhs, rhs, np.atleast_1d(x0)


def verify_sharp_harnack(a: float, n: int, t1: float, t2: float, x1, x2, x0=None, tol: float = 1e-10
                         ) -> SharpHarnackReport:
    """Equality with ``x0 = sharp_x0(...)``; ``lhs >= rhs - tol`` for any other centre."""
    if a == 0:
        raise HarnackError("verify_sharp_harnack needs a != 0")
    if not 0 < t1 < t2:
        raise HarnackError("need 0 < t1 < t2")
    equality = x0 is None
    lhs, rhs, x0 = sharp_harnack_sides(a, n, t1, t2, x1, x2, x0)
    slack = lhs - rhs
    scale = max(1.0, abs(lhs), abs(rhs))
    ok = abs(slack) <= tol * scale if equality else slack >= -tol * scale
    return SharpHarnackReport(lhs, rhs, slack, [float(v) for v in x0], equality, bool(ok), tol)


# --- simulated fields --------------------------------------------------------------------

def torus_distance(x1, x2, extent) -> float:
    """Minimal-image Euclidean distance on the flat torus with side lengths ``extent``."""
    d = np.abs(np.atleast_1d(np.asarray(x1, dtype=float)) - np.atleast_1d(np.asarray(x2, dtype=float)))
    L = np.atleast_1d(np.asarray(extent, dtype=float))
    d = np.mod(d, L)
    d = np.minimum(d, L - d)
    return float(np.sqrt(np.sum(d * d)))


@dataclass
class PairResult:
    node1: tuple
    node2: tuple
    t1: float
    t2: float
    lhs: float
    rhs: float
    slack: float

    def to_dict(self):
        return {"node1": list(self.node1), "node2": list(self.node2), "t1": self.t1, "t2": self.t2,
                "lhs": self.lhs, "rhs": self.rhs, "slack": self.slack}


@dataclass
class PairSweepReport:
    pairs: list
    tol: float
    seed: int
    failing: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.failing

    @property
    def min_slack(self) -> float:
        return min(p.slack for p in self.pairs)

    def to_dict(self):
        ordered = sorted(self.pairs, key=lambda p: (p.slack >= -self.tol, p.slack))
        return {"tol": self.tol, "seed": self.seed, "passed": self.passed, "n_pairs": len(self.pairs),
                "n_failing": len(self.failing), "min_slack": self.min_slack,
                "pairs": [p.to_dict() for p in ordered]}


def node_pairs(shape: tuple, n_pairs: int, seed: int) -> list:
    rng = np.random.default_rng(seed)
    total = int(np.prod(shape))
    out = []
    for _ in range(n_pairs):
        i, j = rng.integers(0, total, size=2)
        out.append((np.unravel_index(int(i), shape), np.unravel_index(int(j), shape)))
    return out


def pair_sweep(field1, field2, cand: CandidateFunctions, kind: str, a: float = 0.0, n_pairs: int = 64,
               seed: int = 0, tol: float = 1e-6) -> PairSweepReport:
    """Integrated Harnack inequality between two snapshots at seeded random node pairs.

    ``kind="log"`` compares ``e^{-at}f`` against :func:`harnack_rhs_log`;
    ``kind="power"`` compares ``f`` against :func:`harnack_rhs_power`.
    Distances are minimal-image torus distances.
    """
    if field1.grid != field2.grid:
        raise HarnackError("snapshots live on different grids")
    if not 0 < field1.t < field2.t:
        raise HarnackError("need 0 < t1 < t2 between the snapshots")
    grid = field1.grid
    if grid.boundary != "periodic":
        raise HarnackError("pair sweeps use torus distance and need a periodic grid")
    t1, t2 = field1.t, field2.t
    x = grid.coords()
    f1, f2 = field1.f, field2.f
    if kind == "log":
        w1, w2 = math.exp(-a * t1), math.exp(-a * t2)
    elif kind == "power":
        w1 = w2 = 1.0
    else:
        raise HarnackError("kind must be 'log' or 'power'")
    cache = {}
    pairs = []
    for n1, n2 in node_pairs(grid.shape, n_pairs, seed):
        d = round(torus_distance(x[n1], x[n2], grid.extent), 14)
        if d not in cache:
            cache[d] = harnack_rhs_log(cand, a, t1, t2, d) if kind == "log" else harnack_rhs_power(cand, t1, t2, d)
        lhs = w2 * float(f2[n2]) - w1 * float(f1[n1])
        pairs.append(PairResult(tuple(int(v) for v in n1), tuple(int(v) for v in n2), t1, t2, lhs, cache[d],
                                lhs - cache[d]))
    rep = PairSweepReport(pairs, tol, seed)
    rep.failing = [p for p in pairs if p.slack < -tol]
    return rep
