"""Auxiliary ODEs: the ε-family blow-up problem, the piecewise ``l(t)``, and
the comparison solutions behind the Liouville statements.

The blow-up problem is::

    m'(t) = m (m + 1) (-a) · 3(e^{-at} - 1) / (3e^{-at} - 1),   m(0) = ε,   a < 0.

Its solution blows up at a finite time ``A_ε`` which grows without bound as
``ε -> 0⁺``.  ``l`` equals ``ε`` up to ``ln 3/(-a)`` and then follows the
shifted solution; ``γ = 1/(1+l)`` is what makes the complete-manifold sharp
family work for ``a < 0``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.integrate import solve_ivp

from harnackcheck.timefn import TimeFunction

BLOWUP_THRESHOLD = 1e8
DEFAULT_TOL = 1e-10


class OdeError(ValueError):
    pass


def blowup_rhs(t, m, a: float):
    """Right-hand side of the blow-up ODE; vanishes at ``t = 0``."""
    em = np.expm1(-a * t)  # e^{-at} - 1
    return m * (m + 1.0) * (-a) * 3.0 * em / (3.0 * em + 2.0)


def _check(a, eps):
    if not a < 0:
        raise OdeError(f"the blow-up problem needs a < 0, got a={a}")
    if eps < 0:
        raise OdeError(f"eps must be >= 0, got {eps}")


@dataclass
class Trajectory:
    """Samples of one integration.

    ``status`` is ``"completed"``, ``"blew_up"`` or ``"left_domain"``;
    ``event_time`` is the threshold crossing for ``"blew_up"``.
    """

    t_samples: np.ndarray
    values: np.ndarray
    status: str
    event_time: Optional[float] = None
    method_meta: dict = field(default_factory=dict)
    dense: object = None
    quarter_time: Optional[float] = None

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        if self.dense is None:
            return np.interp(t, self.t_samples, self.values)
        return self.dense(t)[0] if t.ndim else float(self.dense(float(t))[0])

    @property
    def end_time(self) -> float:
        return float(self.t_samples[-1])

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "value"])
            for t, v in zip(self.t_samples, self.values):
                w.writerow([repr(float(t)), repr(float(v))])


def solve_blowup(a: float, eps: float, t_max: float = 10.0, tol: float = DEFAULT_TOL,
                     threshold: float = BLOWUP_THRESHOLD) -> Trajectory:
    """Integrate the blow-up ODE from ``t = 0`` with an adaptive embedded RK (DOP853).

    Integration stops when ``m`` reaches ``threshold``; the crossing is
    located by root finding on the dense output.  ``eps = 0`` returns the
    zero solution.  The absolute tolerance is ``tol · min(1, eps)`` so that
    the early phase, where ``m ≈ eps``, is resolved to relative ``tol``.
    """
    _check(a, eps)
    atol = tol * min(1.0, eps) if eps > 0 else tol
    meta = {"method": "DOP853", "rtol": tol, "atol": atol, "threshold": threshold, "t_max": t_max}
    if eps == 0:
        ts = np.array([0.0, t_max])
        return Trajectory(ts, np.zeros(2), "completed", None, meta)

    def blow(t, y):
        return y[0] - threshold

    blow.terminal = True
    blow.direction = 1

    def quarter(t, y):
        return y[0] - 0.25

    quarter.direction = 1

    sol = solve_ivp(lambda t, y: blowup_rhs(t, y, a), (0.0, t_max), [eps], method="DOP853",
                    rtol=tol, atol=atol, events=[blow, quarter], dense_output=True)
    if sol.status == -1:
        raise OdeError(f"integration failed: {sol.message}")
    meta["nfev"] = int(sol.nfev)
    meta["steps"] = int(sol.t.size - 1)
    tq = float(sol.t_events[1][0]) if sol.t_events[1].size else None
    if sol.status == 1:
        te = float(sol.t_events[0][0])
        return Trajectory(sol.t, sol.y[0], "blew_up", te, meta, sol.sol, tq)
    return Trajectory(sol.t, sol.y[0], "completed", None, meta, sol.sol, tq)


def rk4_fixed(fun, y0: float, t_grid) -> np.ndarray:
    """Classical fourth-order Runge-Kutta on a supplied increasing grid."""
    t = np.asarray(t_grid, dtype=float)
    y = np.empty_like(t)
    y[0] = y0
    for i in range(t.size - 1):
        h = t[i + 1] - t[i]
        ti, yi = t[i], y[i]
        k1 = fun(ti, yi)
        k2 = fun(ti + h / 2, yi + h / 2 * k1)
        k3 = fun(ti + h / 2, yi + h / 2 * k2)
        k4 = fun(ti + h, yi + h * k3)
        y[i + 1] = yi + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
    return y


def cross_check_rk4(a: float, eps: float, traj: Trajectory, fraction: float = 0.9, refine: int = 10):
    """Compare the adaptive trajectory with fixed-step RK4 at ``refine``× its step count.

    The window is ``[0, fraction · A_ε]`` (or the whole run when it did not
    blow up).  Returns ``(max relative difference, number of RK4 steps)``.
    """
    end = traj.event_time * fraction if traj.status == "blew_up" else traj.end_time
    n = max(1000, refine * int(traj.method_meta.get("steps", 100)))
    grid = np.linspace(0.0, end, n + 1)
    y = rk4_fixed(lambda t, m: blowup_rhs(t, m, a), eps, grid)
    ref = traj(grid)
    rel = np.abs(y - ref) / np.maximum(np.abs(ref), 1e-300)
    return float(np.max(rel)), n


def blowup_time_rk4(a: float, eps: float, threshold: float = BLOWUP_THRESHOLD, h: float = 1e-3,
                    t_max: float = 100.0) -> Optional[float]:
    """Threshold crossing time from fixed-step RK4 on the reciprocal ``w = 1/m``.

    ``w' = -(1 + w) q(t)`` with ``q = m'/(m(m+1))`` stays smooth through the
    blow-up, where ``w`` reaches 0.  The crossing of ``1/threshold`` is located
    by bisection on the cubic Hermite interpolant of the step that brackets it.
    Returns ``None`` if ``m`` stays below the threshold up to ``t_max``.
    """
    _check(a, eps)
    if eps == 0:
        return None

    def q(t):
        em = math.expm1(-a * t)
        return -a * 3.0 * em / (3.0 * em + 2.0)

    def fw(t, w):
        return -(1.0 + w) * q(t)

    level = 1.0 / threshold
    t, w = 0.0, 1.0 / eps
    while t < t_max:
        k1 = fw(t, w)
        k2 = fw(t + h / 2, w + h / 2 * k1)
        k3 = fw(t + h / 2, w + h / 2 * k2)
        k4 = fw(t + h, w + h * k3)
        wn = w + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        if wn <= level:
            d0, d1 = k1, fw(t + h, wn)

            def herm(s):
                s2, s3 = s * s, s * s * s
                return ((2 * s3 - 3 * s2 + 1) * w + (s3 - 2 * s2 + s) * h * d0
                        + (-2 * s3 + 3 * s2) * wn + (s3 - s2) * h * d1)

            lo, hi = 0.0, 1.0
            for _ in range(60):
                mid = 0.5 * (lo + hi)
                if herm(mid) > level:
                    lo = mid
                else:
                    hi = mid
            return t + 0.5 * (lo + hi) * h
        t, w = t + h, wn
    return None


def continuation_bound(a: float, traj: Trajectory) -> dict:
    """Step-continuation lower bound on ``A_ε`` with ``δ₀ = 1/(48(-a))``.

    While ``m <= 1/4`` on ``[0, nδ₀]`` the solution extends to ``(n+1)δ₀``;
    with ``t_q`` the first time ``m`` reaches ``1/4`` this gives
    ``A_ε >= (floor(t_q/δ₀) + 1) δ₀``.
    """
    d0 = 1.0 / (48.0 * (-a))
    if traj.quarter_time is None:
        return {"delta0": d0, "t_quarter": None, "N": None, "bound": None, "A_eps": traj.event_time, "holds": True}
    n = int(math.floor(traj.quarter_time / d0)) + 1
    bound = n * d0
    A = traj.event_time
    holds = A is None or A >= bound
    return {"delta0": d0, "t_quarter": traj.quarter_time, "N": n, "bound": bound, "A_eps": A, "holds": bool(holds)}


@dataclass
class AEpsPoint:
    eps: float
    A_eps: float
    capped: bool


def a_eps_curve(a: float, eps_list, t_max: float = 10.0, tol: float = DEFAULT_TOL) -> list:
    """Blow-up times for each ε; runs reaching ``t_max`` report ``t_max`` as a lower bound."""
    out = []
    for eps in eps_list:
        if eps <= 0:
            raise OdeError(f"eps must be positive in an A_eps sweep, got {eps}")
        tr = solve_blowup(a, float(eps), t_max=t_max, tol=tol)
        if tr.status == "blew_up":
            out.append(AEpsPoint(float(eps), tr.event_time, False))
        else:
            out.append(AEpsPoint(float(eps), float(t_max), True))
    return out


def a_eps_monotone(curve) -> bool:
    """``A_ε`` non-increasing in ``ε`` (capped values count as lower bounds)."""
    pts = sorted(curve, key=lambda p: p.eps)
    for small, big in zip(pts, pts[1:]):
        if big.capped and not small.capped:
            return False
        if not big.capped and big.A_eps > small.A_eps:
            return False
    return True


def write_a_eps_csv(curve, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["eps", "A_eps", "capped_flag"])
        for p in curve:
            w.writerow([repr(p.eps), repr(p.A_eps), int(p.capped)])


class PiecewiseL(TimeFunction):
    """``l(t) = ε`` for ``t <= ln3/(-a)``, else ``m(t - ln3/(-a))``.

    Valid on ``(0, t_end)`` with ``t_end = ln3/(-a) + A_ε`` (or the ODE
    horizon when no blow-up was seen).  ``l'`` comes from the ODE itself,
    so it is continuous at the junction where both sides vanish.
    """

    def __init__(self, a: float, eps: float, traj: Trajectory):
        self.a = a
        self.eps = eps
        self.traj = traj
        self.t_junction = math.log(3.0) / (-a)
        self.A_eps = traj.event_time
        horizon = traj.event_time if traj.status == "blew_up" else traj.end_time
        self.t_end = self.t_junction + horizon
        super().__init__(self._eval, label=f"l(a={a:g}, eps={eps:g})")

    def _eval(self, t):
        t = np.asarray(t, dtype=float)
        s = t - self.t_junction
        late = s > 0
        v = np.full(t.shape, float(self.eps))
        d = np.zeros(t.shape)
        if np.any(late):
            inside = late & (t < self.t_end)
            sl = s[inside]
            if sl.size:
                mv = np.asarray(self.traj(sl), dtype=float).reshape(sl.shape)
                v[inside] = mv
                d[inside] = blowup_rhs(sl, mv, self.a)
            v[late & ~inside] = np.nan
            d[late & ~inside] = np.nan
        return v, d


def build_l(a: float, eps: float, t_max: Optional[float] = None, tol: float = DEFAULT_TOL) -> PiecewiseL:
    _check(a, eps)
    if eps == 0:
        raise OdeError("build_l needs eps > 0")
    horizon = 100.0 / (-a) if t_max is None else t_max
    return PiecewiseL(a, eps, solve_blowup(a, eps, t_max=horizon, tol=tol))


# --- comparison solutions ------------------------------------------------------------

def comparison_log(a: float, f0: float, t0: float, m: Optional[float] = None) -> TimeFunction:
    """Comparison solution through ``(t0, f0)``.

    Without ``m``: ``v' = a v``, so ``v = f0 e^{a(t-t0)}``.  With ``m``:
    ``v' = ma/(2(e^{-at}-1)) + a v``, so
    ``v = e^{a(t-t0)} f0 + (m/2) e^{at} ln((e^{-a t0} - 1)/(e^{-at} - 1))``.
    """
    if m is None:
        def fn(t):
            v = f0 * np.exp(a * (t - t0))
            return v, a * v

        return TimeFunction(fn, label="comparison_log")
    if a == 0 or t0 == 0:
        raise OdeError("the forced comparison needs a != 0 and t0 != 0")
    e0 = np.expm1(-a * t0)

    def fn(t):
        e = np.expm1(-a * t)
        v = np.exp(a * (t - t0)) * f0 + (m / 2) * np.exp(a * t) * np.log(e0 / e)
        return v, m * a / (2 * e) + a * v

    return TimeFunction(fn, label="comparison_log_forced")


def comparison_log_constant(a: float, m: float, f0: float, t0: float) -> float:
    """``c = (m/2) ln|1 - e^{-a t0}| + e^{-a t0} f0`` so the forced comparison is
    ``-(m/2) e^{at} ln|1 - e^{-at}| + c e^{at}``."""
    return (m / 2) * math.log(abs(math.expm1(-a * t0))) + math.exp(-a * t0) * f0


@dataclass
class PowerComparison:
    a1: float
    p1: float
    u0_val: float
    t0: float

    @property
    def vanishing_time(self) -> float:
        """Time at which the comparison solution reaches 0 going backwards."""
        return self.t0 - self.u0_val ** (1 - self.p1) / (self.a1 * (1 - self.p1))

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        q = 1 - self.p1
        base = self.a1 * q * (t - self.t0) + self.u0_val**q
        out = np.where(base > 0, np.abs(base) ** (1 / q), 0.0)
        return out if out.ndim else float(out)


def comparison_power(a1: float, p1: float, u0_val: float, t0: float = 0.0) -> PowerComparison:
    """Solution of ``v' = a1 v^{p1}`` with ``v(t0) = u0_val`` (``p1 < 1``, ``a1 > 0``)."""
    if not p1 < 1:
        raise OdeError(f"p1 must be < 1, got {p1}")
    if not a1 > 0:
        raise OdeError(f"a1 must be positive, got {a1}")
    if u0_val < 0:
        raise OdeError("u0_val must be >= 0")
    return PowerComparison(a1, p1, u0_val, t0)


def u0_reference(a1: float, p1: float, t):
    """Space-independent solution ``(a1(1-p1)t)^{1/(1-p1)}``."""
    t = np.asarray(t, dtype=float)
    out = (a1 * (1 - p1) * t) ** (1 / (1 - p1))
    return out if out.ndim else float(out)


# --- Liouville monotone quantity ----------------------------------------------------

def liouville_F_log(a: float, m: float, f_val, t):
    """``F = e^{-at} f + (m/2) ln|e^{-at} - 1|``, non-decreasing in time."""
    t = np.asarray(t, dtype=float)
    out = np.exp(-a * t) * f_val + (m / 2) * np.log(np.abs(np.expm1(-a * t)))
    return out if np.ndim(out) else float(out)


def liouville_F_exact(sol, m: float, x, t):
    """``F`` on the exact Euclidean solution in closed form.

    Equals ``C + a|x-x0|²/(4(1-e^{at}))`` when ``m = n``; the extra
    ``((m-n)/2) ln|e^{-at}-1|`` covers ``m > n``.
    """
    a = sol.a
    r2 = sol.dist2(x)
    t = np.asarray(t, dtype=float)
    out = sol.C - a * r2 / (4 * np.expm1(a * t)) + ((m - sol.n) / 2) * np.log(np.abs(np.expm1(-a * t)))
    return out if np.ndim(out) else float(out)
