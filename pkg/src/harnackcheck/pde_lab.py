"""Flat-geometry simulations of ``u_t = Δu + H(u)`` and the Harnack quantity on fields.

Grids are uniform tensor grids in one or two dimensions.  ``periodic`` grids
are flat tori with nodes at ``i·h``; ``neumann`` grids are cell-centred with
reflecting ghost cells; ``open`` grids are finite patches of Euclidean space
used to sample closed-form solutions, where every stencil is interior and the
outer ring of each derived array is ``nan``.

All derivatives of ``f = ln u`` are formed from differences of ``u`` through
the chain rule (``∇f = ∇u/u``, ``Δf = Δu/u - |∇u|²/u²``).  Differencing
``ln u`` directly would be exact on the quadratic log-profiles of the sharp
family and hide the O(h²) behaviour the refinement studies measure.
"""

from __future__ import annotations

import csv
import math
import struct
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from harnackcheck.candidates import CandidateFunctions
from harnackcheck.equations import CurvatureParams, EquationSpec, Linear, Logarithmic, PowerSum, reaction_terms

BOUNDARIES = ("periodic", "neumann", "open")
SAFETY = 0.9
MAX_HALVINGS = 20
MAX_STEPS = 100_000
MAX_POINTS_2D = 256
DUMP_MAGIC = b"HKF1"


class SimulationError(RuntimeError):
    pass


@dataclass(frozen=True)
class GridSpec:
    dim: int
    extent: tuple
    points: tuple
    boundary: str = "periodic"

    def __post_init__(self):
        ext = tuple(float(e) for e in np.atleast_1d(self.extent))
        pts = tuple(int(p) for p in np.atleast_1d(self.points))
        object.__setattr__(self, "extent", ext)
        object.__setattr__(self, "points", pts)
        if self.dim not in (1, 2):
            raise ValueError(f"dim must be 1 or 2, got {self.dim}")
        if len(ext) != self.dim or len(pts) != self.dim:
            raise ValueError("extent and points need one entry per axis")
        if any(p < 8 for p in pts):
            raise ValueError(f"need at least 8 points per axis, got {pts}")
        if self.dim == 2 and any(p > MAX_POINTS_2D for p in pts):
            raise ValueError(f"2-D grids are capped at {MAX_POINTS_2D} points per axis")
        if any(e <= 0 for e in ext):
            raise ValueError("extents must be positive")
        if self.boundary not in BOUNDARIES:
            raise ValueError(f"boundary must be one of {BOUNDARIES}, got {self.boundary!r}")

    @property
    def h(self) -> tuple:
        return tuple(e / p for e, p in zip(self.extent, self.points))

    @property
    def shape(self) -> tuple:
        return self.points

    def axes(self, origin=None) -> list:
        """Node coordinates per axis; cell-centred for ``neumann``."""
        origin = np.zeros(self.dim) if origin is None else np.atleast_1d(np.asarray(origin, dtype=float))
        off = 0.5 if self.boundary == "neumann" else 0.0
        return [origin[k] + (np.arange(p) + off) * hk for k, (p, hk) in enumerate(zip(self.points, self.h))]

    def coords(self, origin=None) -> np.ndarray:
        """Array of shape ``points + (dim,)``."""
        mesh = np.meshgrid(*self.axes(origin), indexing="ij")
        return np.stack(mesh, axis=-1)

    def max_dt(self) -> float:
        return SAFETY * min(self.h) ** 2 / (2 * self.dim)

    def refined(self) -> "GridSpec":
        return GridSpec(self.dim, self.extent, tuple(2 * p for p in self.points), self.boundary)

    def to_dict(self) -> dict:
        return {"dim": self.dim, "extent": list(self.extent), "points": list(self.points), "boundary": self.boundary}


@dataclass
class Field:
    grid: GridSpec
    u: np.ndarray
    t: float

    def __post_init__(self):
        self.u = np.asarray(self.u, dtype=float)
        if self.u.shape != self.grid.shape:
            raise ValueError(f"field shape {self.u.shape} does not match grid {self.grid.shape}")
        if not np.all(self.u > 0):
            raise ValueError("fields must be strictly positive")

    @property
    def f(self) -> np.ndarray:
        return np.log(self.u)


# --- finite differences --------------------------------------------------------------

def _shift(u, axis, k, grid):
    """``u`` at node ``i + k`` along ``axis`` (``k = ±1``)."""
    if grid.boundary == "periodic":
        return np.roll(u, -k, axis=axis)
    n = u.shape[axis]
    idx = np.arange(n) + k
    if grid.boundary == "neumann":
        idx = np.clip(idx, 0, n - 1)  # ghost cell mirrors the edge cell
        return np.take(u, idx, axis=axis)
    out = np.take(u, np.clip(idx, 0, n - 1), axis=axis).astype(float)
    bad = (idx < 0) | (idx >= n)
    sl = [slice(None)] * u.ndim
    sl[axis] = bad
    out[tuple(sl)] = np.nan
    return out


def d1(u, grid: GridSpec, axis: int):
    return (_shift(u, axis, 1, grid) - _shift(u, axis, -1, grid)) / (2 * grid.h[axis])


def d2(u, grid: GridSpec, axis: int):
    return (_shift(u, axis, 1, grid) - 2 * u + _shift(u, axis, -1, grid)) / grid.h[axis] ** 2


def d11(u, grid: GridSpec):
    """Mixed derivative ``∂x∂y`` by the centred four-point stencil."""
    return d1(d1(u, grid, 0), grid, 1)


def laplacian(u, grid: GridSpec):
    return sum(d2(u, grid, k) for k in range(grid.dim))


def gradient(u, grid: GridSpec) -> list:
    return [d1(u, grid, k) for k in range(grid.dim)]


def log_derivatives(u, grid: GridSpec) -> dict:
    """``∇f``, ``|∇f|²``, ``Δf`` and the Hessian of ``f = ln u`` via the chain rule."""
    g = gradient(u, grid)
    gf = [gk / u for gk in g]
    hess = {}
    for i in range(grid.dim):
        hess[(i, i)] = d2(u, grid, i) / u - gf[i] * gf[i]
    if grid.dim == 2:
        hess[(0, 1)] = d11(u, grid) / u - gf[0] * gf[1]
    return {
        "grad": gf,
        "grad2": sum(x * x for x in gf),
        "lap": sum(hess[(i, i)] for i in range(grid.dim)),
        "hess": hess,
    }


def hess_norm2(hess: dict, dim: int):
    out = sum(hess[(i, i)] ** 2 for i in range(dim))
    if dim == 2:
        out = out + 2 * hess[(0, 1)] ** 2
    return out


# --- time stepping ---------------------------------------------------------------------

def _reaction(eq: EquationSpec, u):
    if isinstance(eq, Linear):
        return eq.p * u
    if isinstance(eq, Logarithmic):
        return eq.a * u * np.log(u)
    if isinstance(eq, PowerSum):
        return sum(a * u**p for a, p in eq.terms)
    raise SimulationError(f"unknown equation {eq!r}")


def _rk4_step(eq, grid, u, dt):
    """One classical RK4 step; ``None`` when a stage leaves ``u > 0``."""

    def rhs(v):
        if not np.all(v > 0):
            return None
        return laplacian(v, grid) + _reaction(eq, v)

    k1 = rhs(u)
    if k1 is None:
        return None
    k2 = rhs(u + dt / 2 * k1)
    if k2 is None:
        return None
    k3 = rhs(u + dt / 2 * k2)
    if k3 is None:
        return None
    k4 = rhs(u + dt * k3)
    if k4 is None:
        return None
    out = u + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
    if not np.all(np.isfinite(out)) or not np.all(out > 0):
        return None
    return out


def _advance(eq, grid, u, dt, t):
    """Advance by ``dt``, splitting into ``2^k`` equal sub-steps when positivity fails."""
    for k in range(MAX_HALVINGS + 1):
        n = 2**k
        v = u
        for _ in range(n):
            v = _rk4_step(eq, grid, v, dt / n)
            if v is None:
                break
        if v is not None:
            return v, k
    raise SimulationError(f"positivity lost near t={t:.6g} after {MAX_HALVINGS} halvings of dt={dt:g}")


def simulate(eq: EquationSpec, grid: GridSpec, u0, t_end: float, dt: Optional[float] = None,
             save_times=None, save_every: int = 1, t0: float = 0.0) -> list:
    """March ``u_t = Δu + H(u)`` from ``t0`` to ``t_end``.

    Steps never exceed ``dt`` (default: the stability limit) and land exactly
    on every time in ``save_times``; without ``save_times`` a snapshot is kept
    every ``save_every`` steps.  The first and last states are always kept.
    """
    if grid.boundary == "open":
        raise SimulationError("open grids are for sampling closed-form solutions, not for simulation")
    limit = grid.max_dt()
    dt = limit if dt is None else float(dt)
    if dt <= 0:
        raise SimulationError("dt must be positive")
    if dt > limit * (1 + 1e-12):
        raise SimulationError(f"dt={dt:g} violates the stability limit {limit:g} = {SAFETY}·h²/(2·dim)")
    u = np.array(u0.u if isinstance(u0, Field) else u0, dtype=float)
    start = Field(grid, u, t0)
    if not t_end > t0:
        raise SimulationError("t_end must exceed the start time")

    if save_times is None:
        n = max(1, math.ceil((t_end - t0) / dt - 1e-9))
        marks = [t0 + (t_end - t0) * (i + 1) / n for i in range(n)]
        keep = {i for i in range(n) if (i + 1) % save_every == 0} | {n - 1}
    else:
        targets = sorted({float(x) for x in save_times if t0 < x <= t_end} | {float(t_end)})
        marks, keep, prev = [], set(), t0
        for tgt in targets:
            n = max(1, math.ceil((tgt - prev) / dt - 1e-9))
            marks += [prev + (tgt - prev) * (i + 1) / n for i in range(n)]
            keep.add(len(marks) - 1)
            prev = tgt
    if len(marks) > MAX_STEPS:
        raise SimulationError(f"run needs {len(marks)} steps, above the cap {MAX_STEPS}")

    out, t, halvings = [start], t0, 0
    for i, tn in enumerate(marks):
        u, k = _advance(eq, grid, u, tn - t, t)
        halvings = max(halvings, k)
        t = tn
        if i in keep:
            out.append(Field(grid, u.copy(), t))
    return out


# --- Harnack quantity on fields ----------------------------------------------------------

def _check_stencil(prev: Field, cur: Field, nxt: Field) -> float:
    if not (prev.grid == cur.grid == nxt.grid):
        raise ValueError("snapshots live on different grids")
    a, b = cur.t - prev.t, nxt.t - cur.t
    if a <= 0 or b <= 0 or abs(a - b) > 1e-9 * max(a, b):
        raise ValueError(f"snapshots must be equally spaced in time, got steps {a:g} and {b:g}")
    return 0.5 * (a + b)


def log_time_derivative(prev: Field, cur: Field, nxt: Field):
    """Centred ``f_t = u_t/u`` from three equally spaced snapshots."""
    tau = _check_stencil(prev, cur, nxt)
    return (nxt.u - prev.u) / (2 * tau * cur.u)


def _cand_at(cand: CandidateFunctions, t: float) -> dict:
    v = cand.evaluate(np.array([t]))
    return {k: float(x[0]) for k, x in v.items()}


def harnack_F(cand: CandidateFunctions, eq: EquationSpec, params: CurvatureParams, prev: Field, cur: Field,
              nxt: Field):
    """``F = γ|∇f|² - α f_t + α h(f) - φ`` at every node of ``cur``."""
    ft = log_time_derivative(prev, cur, nxt)
    der = log_derivatives(cur.u, cur.grid)
    c = _cand_at(cand, cur.t)
    h0 = reaction_terms(eq, cur.f)[0]
    return c["gamma"] * der["grad2"] - c["alpha"] * ft + c["alpha"] * h0 - c["phi"]


def F_series(cand, eq, params, fields: list, centers: Optional[list] = None) -> list:
    """``(t, F)`` at every snapshot that has equally spaced neighbours (run ends excluded)."""
    out = []
    for i in range(1, len(fields) - 1):
        p, c, n = fields[i - 1], fields[i], fields[i + 1]
        if centers is not None and not any(abs(c.t - x) <= 1e-12 * max(1.0, x) for x in centers):
            continue
        if abs((c.t - p.t) - (n.t - c.t)) > 1e-9 * (n.t - p.t):
            continue
        out.append((c.t, harnack_F(cand, eq, params, p, c, n)))
    return out


def evolution_identity_residual(eq: EquationSpec, fields: list, cand: CandidateFunctions):
    """``ℒF - RHS`` at the middle of five equally spaced snapshots, ``ℒ = Δ - ∂t``.

    The right-hand side is the flat (``Ric = 0``, ``V = 0``) evolution identity
    ``2γ|∇²f|² - 2⟨∇f,∇F⟩ + [2(α-γ)h' - γ']|∇f|² + α'f_t + α(h'Δf + h''|∇f|²) - α'h + φ'``.
    """
    if len(fields) != 5:
        raise ValueError("the identity stencil needs exactly five snapshots")
    grid = fields[0].grid
    params = None
    Fs = [harnack_F(cand, eq, params, fields[k - 1], fields[k], fields[k + 1]) for k in (1, 2, 3)]
    tau = _check_stencil(fields[1], fields[2], fields[3])
    _check_stencil(fields[0], fields[1], fields[2])
    _check_stencil(fields[2], fields[3], fields[4])
    F = Fs[1]
    lhs = laplacian(F, grid) - (Fs[2] - Fs[0]) / (2 * tau)

    cur = fields[2]
    der = log_derivatives(cur.u, grid)
    ft = log_time_derivative(fields[1], cur, fields[3])
    c = _cand_at(cand, cur.t)
    h0, h1, h2, _ = reaction_terms(eq, cur.f)
    gF = gradient(F, grid)
    dot = sum(a * b for a, b in zip(der["grad"], gF))
    g, a = c["gamma"], c["alpha"]
    rhs = (2 * g * hess_norm2(der["hess"], grid.dim) - 2 * dot
           + (2 * (a - g) * h1 - c["dgamma"]) * der["grad2"]
           + c["dalpha"] * ft + a * (h1 * der["lap"] + h2 * der["grad2"])
           - c["dalpha"] * h0 + c["dphi"])
    res = lhs - rhs
    if grid.boundary == "neumann":
        # ghost cells are first-order for the nested stencils; keep two clear rings
        sl = tuple(slice(2, -2) for _ in range(grid.dim))
        out = np.full(res.shape, np.nan)
        out[sl] = res[sl]
        return out
    return res


# --- closed-form Euclidean solutions -------------------------------------------------------

@dataclass(frozen=True)
class ExactLogSolution:
    """``u = exp[-a|x-x0|²/(4D) - (n/2)e^{at} ln|D| + C e^{at}]`` with ``D = 1 - e^{-at}``.

    Solves ``u_t = Δu + a u ln u`` on ``ℝⁿ`` for ``t`` with ``D != 0``.
    """

    a: float
    n: int
    x0: tuple = (0.0,)
    C: float = 0.0

    def __post_init__(self):
        if self.a == 0:
            raise ValueError("ExactLogSolution needs a != 0")
        x0 = tuple(float(v) for v in np.atleast_1d(self.x0))
        if len(x0) == 1 and self.n > 1:
            x0 = x0 * self.n
        if len(x0) != self.n:
            raise ValueError(f"x0 needs {self.n} coordinates")
        object.__setattr__(self, "x0", x0)

    def _pts(self, x):
        x = np.asarray(x, dtype=float)
        if self.n == 1 and (x.ndim == 0 or x.shape[-1] != 1):
            x = x[..., None]
        if x.shape[-1] != self.n:
            raise ValueError(f"points need {self.n} coordinates on the last axis")
        return x

    def _D(self, t):
        t = np.asarray(t, dtype=float)
        D = -np.expm1(-self.a * t)
        if np.any(D == 0):
            raise ValueError("the exact solution is undefined where e^{-at} = 1")
        return D

    def dist2(self, x):
        x = self._pts(x)
        return np.sum((x - np.asarray(self.x0)) ** 2, axis=-1)

    def f(self, x, t):
        a, D = self.a, self._D(t)
        return (-a * self.dist2(x) / (4 * D) - (self.n / 2) * np.exp(a * t) * np.log(np.abs(D))
                + self.C * np.exp(a * t))

    def u(self, x, t):
        return np.exp(self.f(x, t))

    def f_t(self, x, t):
        a, D = self.a, self._D(t)
        et = np.exp(a * t)
        return (a * a * self.dist2(x) * np.exp(-a * t) / (4 * D * D) - (self.n * a / 2) * et * np.log(np.abs(D))
                - self.n * a / (2 * D) + a * self.C * et)

    def grad_f(self, x, t):
        D = self._D(t)
        return -self.a * (self._pts(x) - np.asarray(self.x0)) / (2 * np.asarray(D)[..., None])

    def lap_f(self, x, t):
        D = self._D(t)
        return -self.n * self.a / (2 * D) + 0 * self.dist2(x)

    def sample(self, grid: GridSpec, t: float, origin=None) -> Field:
        if grid.dim != self.n:
            raise ValueError("grid dimension must match n")
        return Field(grid, self.u(grid.coords(origin), t), t)


def exact_log_eval(sol: ExactLogSolution, x, t):
    out = sol.u(x, t)
    return out if np.ndim(out) else float(out)


def exact_log_residual(sol: ExactLogSolution, x, t):
    """``(u_t - Δu - a u ln u)/u = f_t - Δf - |∇f|² - a f`` from the analytic derivatives."""
    g = sol.grad_f(x, t)
    out = sol.f_t(x, t) - sol.lap_f(x, t) - np.sum(g * g, axis=-1) - sol.a * sol.f(x, t)
    return out if np.ndim(out) else float(out)


def exact_patch(sol: ExactLogSolution, half_width: float, points: int) -> tuple:
    """Open grid of ``points`` nodes per axis centred on ``x0`` and its origin."""
    h = 2 * half_width / (points - 1)
    grid = GridSpec(sol.n, (h * points,) * sol.n, (points,) * sol.n, "open")
    origin = np.asarray(sol.x0) - half_width
    return grid, origin


# --- report objects -------------------------------------------------------------------------

@dataclass
class CheckReport:
    name: str
    passed: bool
    value: float
    tol: float
    detail: dict = field(default_factory=dict)

    def to_dict(self):
        return {"name": self.name, "passed": bool(self.passed), "value": _num(self.value), "tol": _num(self.tol),
                "detail": {k: _num(v) if isinstance(v, (float, np.floating)) else v for k, v in self.detail.items()}}


def _num(x):
    if x is None:
        return None
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return x


def observed_order(err_coarse: float, err_fine: float) -> float:
    if err_fine <= 0 or err_coarse <= 0:
        return float("nan")
    return math.log2(err_coarse / err_fine)


def sharp_exact_discrete_error(sol: ExactLogSolution, t: float, points: int, half_width: float = 2.0) -> float:
    """Max over the patch of ``|Δf + na/(2D)|`` with ``Δf`` from grid differences of ``u``."""
    grid, origin = exact_patch(sol, half_width, points)
    fld = sol.sample(grid, t, origin)
    lap = log_derivatives(fld.u, grid)["lap"]
    D = -math.expm1(-sol.a * t)
    return float(np.nanmax(np.abs(lap + sol.n * sol.a / (2 * D))))


def sharp_log_check(sol: ExactLogSolution, t: float, points: int = 101, half_width: float = 2.0,
                    tol: float = 1e-10) -> CheckReport:
    """Equality ``Δf + na/(2(1-e^{-at})) = 0`` on the exact family.

    Reports the analytic defect and the discrete defect at ``points`` and
    ``2·points - 1`` nodes (same patch, halved spacing) with its observed order.
    """
    grid, origin = exact_patch(sol, half_width, points)
    x = grid.coords(origin)
    D = -math.expm1(-sol.a * t)
    analytic = float(np.max(np.abs(sol.lap_f(x, t) + sol.n * sol.a / (2 * D))))
    e1 = sharp_exact_discrete_error(sol, t, points, half_width)
    e2 = sharp_exact_discrete_error(sol, t, 2 * points - 1, half_width)
    order = observed_order(e1, e2)
    return CheckReport("sharp_log_exact", analytic <= tol, analytic, tol,
                       {"discrete_error_h": e1, "discrete_error_h2": e2, "observed_order": order})


def sharp_log_sim_check(fields: list, m: float, a: float, tol_F: float) -> CheckReport:
    """``min (Δf + ma/(2(1-e^{-at}))) >= -tol_F`` over nodes and snapshots with ``t > 0``."""
    worst, where = math.inf, None
    for fl in fields:
        if fl.t <= 0:
            continue
        lap = log_derivatives(fl.u, fl.grid)["lap"]
        val = float(np.nanmin(lap + m * a / (2 * -math.expm1(-a * fl.t))))
        if val < worst:
            worst, where = val, fl.t
    return CheckReport("sharp_log_sim", worst >= -tol_F, worst, tol_F, {"t_worst": where})


def liyau_power_check(fields: list, m: float, eq: EquationSpec, tol_F: float) -> CheckReport:
    """``min (Δf + m/2t) >= -tol_F`` for ``H = Σ a_i u^{p_i}`` with ``a_i >= 0``, ``p_i <= 1``."""
    if isinstance(eq, PowerSum):
        if any(a < 0 for a, _ in eq.terms) or any(p > 1 for _, p in eq.terms):
            raise ValueError("liyau_power_check needs a_i >= 0 and p_i <= 1")
    elif not (isinstance(eq, Linear) and eq.p == 0):
        raise ValueError("liyau_power_check needs a PowerSum (or the heat equation)")
    worst, where = math.inf, None
    for fl in fields:
        if fl.t <= 0:
            continue
        lap = log_derivatives(fl.u, fl.grid)["lap"]
        val = float(np.nanmin(lap + m / (2 * fl.t)))
        if val < worst:
            worst, where = val, fl.t
    return CheckReport("liyau_power", worst >= -tol_F, worst, tol_F, {"t_worst": where})


MONOTONE_QUANTITIES = ("t_pow_m_half_u", "F_log")


def monotone_checks(fields: list, quantity: str, m: float, a: Optional[float] = None,
                    tol: float = 1e-4) -> CheckReport:
    """Per-node differences of a time-monotone quantity across snapshots (``t > 0``)."""
    from harnackcheck.ode_lab import liouville_F_log

    if quantity not in MONOTONE_QUANTITIES:
        raise ValueError(f"quantity must be one of {MONOTONE_QUANTITIES}")
    if quantity == "F_log" and not a:
        raise ValueError("F_log needs a != 0")
    vals = []
    for fl in fields:
        if fl.t <= 0:
            continue
        if quantity == "t_pow_m_half_u":
            vals.append(fl.t ** (m / 2) * fl.u)
        else:
            vals.append(liouville_F_log(a, m, fl.f, fl.t))
    if len(vals) < 2:
        raise ValueError("need at least two snapshots with t > 0")
    worst = min(float(np.min(b - c)) for c, b in zip(vals, vals[1:]))
    return CheckReport(f"monotone_{quantity}", worst >= -tol, worst, tol, {"snapshots": len(vals)})


def conservation_drift(fields: list) -> float:
    """Largest relative change of the spatial mean across snapshots."""
    means = np.array([float(np.mean(fl.u)) for fl in fields])
    return float(np.max(np.abs(means - means[0])) / abs(means[0]))


# --- refinement-derived tolerance -------------------------------------------------------------

def restrict(fine, grid: GridSpec):
    """Fine-grid values at the coarse nodes.

    Periodic nodes coincide (every other fine node); cell-centred Neumann
    nodes take the average of the two fine cells.
    """
    fine = np.asarray(fine)
    if grid.boundary == "periodic":
        return fine[tuple(slice(None, None, 2) for _ in range(fine.ndim))]
    out = fine
    for ax in range(fine.ndim):
        n = out.shape[ax]
        a = np.take(out, np.arange(0, n, 2), axis=ax)
        b = np.take(out, np.arange(1, n, 2), axis=ax)
        out = 0.5 * (a + b)
    return out


def stencil_times(centers, tau: float) -> list:
    return sorted({float(x) for c in centers for x in (c - tau, c, c + tau)})


def run_F(cand, eq, params, grid: GridSpec, u0_fn, centers, tau_steps: int = 8):
    """Simulate with a stencil spacing ``τ = tau_steps · dt_max`` (so ``τ = O(h²)``) and return
    ``F`` at each centre time, shape ``(len(centers),) + grid.shape``."""
    dt = grid.max_dt()
    tau = tau_steps * dt
    u0 = u0_fn(grid.coords())
    times = stencil_times(centers, tau)
    fields = simulate(eq, grid, u0, max(times), dt=dt, save_times=times)
    by_t = {round(fl.t, 12): fl for fl in fields}
    out = []
    for c in centers:
        p, cur, n = (by_t[round(x, 12)] for x in (c - tau, c, c + tau))
        out.append(harnack_F(cand, eq, params, p, cur, n))
    return np.array(out), fields


@dataclass
class RefinementReport:
    sizes: list
    max_F: list
    estimates: list
    tol_F: float
    shrink: float
    passed: bool

    def to_dict(self):
        return {"sizes": self.sizes, "max_F": [_num(x) for x in self.max_F],
                "estimates": [_num(x) for x in self.estimates], "tol_F": _num(self.tol_F),
                "shrink": _num(self.shrink), "passed": bool(self.passed)}


def F_refinement(cand, eq, params, grid: GridSpec, u0_fn, centers, levels: int = 3,
                 tau_steps: int = 8) -> RefinementReport:
    """``max F`` on ``grid`` with ``tol_F = 10 ·`` the discretization estimate.

    The estimate at a level is ``(4/3) max|F_h - F_{h/2}|`` on the coarse
    nodes (second-order Richardson).  ``shrink`` is the ratio of the first
    two estimates, expected near 4.
    """
    grids = [grid]
    for _ in range(levels - 1):
        grids.append(grids[-1].refined())
    Fs = [run_F(cand, eq, params, g, u0_fn, centers, tau_steps)[0] for g in grids]
    ests = []
    for k in range(levels - 1):
        fine = np.array([restrict(x, grids[k]) for x in Fs[k + 1]])
        ests.append(4.0 / 3.0 * float(np.max(np.abs(Fs[k] - fine))))
    max_F = [float(np.max(x)) for x in Fs]
    tol_F = 10 * ests[0]
    shrink = ests[0] / ests[1] if len(ests) > 1 and ests[1] > 0 else float("nan")
    return RefinementReport([g.points[0] for g in grids], max_F, ests, tol_F, shrink, max_F[0] <= tol_F)


# --- exports ---------------------------------------------------------------------------------

def write_field_csv(fld: Field, path, origin=None):
    x = fld.grid.coords(origin).reshape(-1, fld.grid.dim)
    names = ["x", "y"][: fld.grid.dim]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(names + ["u"])
        for row, val in zip(x, fld.u.reshape(-1)):
            w.writerow([repr(float(v)) for v in row] + [repr(float(val))])


def write_field_binary(fld: Field, path):
    """Little-endian dump: magic ``HKF1``, ``u32`` dim, ``f64`` extents, ``u32`` counts,
    ``f64`` time, then the C-ordered ``f64`` payload."""
    g = fld.grid
    with open(path, "wb") as fh:
        fh.write(DUMP_MAGIC)
        fh.write(struct.pack("<I", g.dim))
        fh.write(struct.pack(f"<{g.dim}d", *g.extent))
        fh.write(struct.pack(f"<{g.dim}I", *g.points))
        fh.write(struct.pack("<d", fld.t))
        fh.write(np.ascontiguousarray(fld.u, dtype="<f8").tobytes())


def read_field_binary(path, boundary: str = "periodic") -> Field:
    with open(path, "rb") as fh:
        raw = fh.read()
    if raw[:4] != DUMP_MAGIC:
        raise ValueError("not a field dump")
    off = 4
    (dim,) = struct.unpack_from("<I", raw, off)
    off += 4
    ext = struct.unpack_from(f"<{dim}d", raw, off)
    off += 8 * dim
    pts = struct.unpack_from(f"<{dim}I", raw, off)
    off += 4 * dim
    (t,) = struct.unpack_from("<d", raw, off)
    off += 8
    u = np.frombuffer(raw, dtype="<f8", offset=off).reshape(pts)
    return Field(GridSpec(dim, ext, pts, boundary), u.astype(float), t)


def simulate_pair(eq: EquationSpec, grid: GridSpec, u0_fn, save_times, t_end: Optional[float] = None) -> tuple:
    """The same run on ``grid`` and on its refinement, snapshots at ``save_times``."""
    t_end = max(save_times) if t_end is None else t_end
    runs = []
    for g in (grid, grid.refined()):
        runs.append(simulate(eq, g, u0_fn(g.coords()), t_end, save_times=save_times))
    return runs[0], runs[1]


def pair_estimate(q_coarse, q_fine, grid: GridSpec) -> float:
    """``(4/3) max|q_h - q_{h/2}|`` over coarse nodes, for stacks of per-snapshot arrays."""
    diffs = [np.nanmax(np.abs(a - restrict(b, grid))) for a, b in zip(q_coarse, q_fine)]
    return 4.0 / 3.0 * float(max(diffs))


def sharp_log_quantity(fields: list, m: float, a: float) -> list:
    return [log_derivatives(fl.u, fl.grid)["lap"] + m * a / (2 * -math.expm1(-a * fl.t)) for fl in fields if fl.t > 0]


def liyau_quantity(fields: list, m: float) -> list:
    return [log_derivatives(fl.u, fl.grid)["lap"] + m / (2 * fl.t) for fl in fields if fl.t > 0]


INITIAL_KINDS = ("constant", "cosine", "bump", "random_fourier")


def initial_data(spec: dict, grid: GridSpec, seed: int = 0):
    """Positive initial data as a function of node coordinates.

    ``constant`` (``value``), ``cosine`` (``exp(mean_log + amplitude Σ cos(2πx_k/L_k))``),
    ``bump`` (``base + amplitude · exp(-|x-c|²/(2 width²))``) and
    ``random_fourier`` (``exp`` of a seeded trigonometric sum with ``modes`` terms).
    """
    kind = spec.get("kind", "cosine")
    L = np.asarray(grid.extent)
    if kind == "constant":
        v = float(spec.get("value", 1.0))
        if v <= 0:
            raise ValueError("constant initial data must be positive")
        return lambda x: np.full(x.shape[:-1], v)
    if kind == "cosine":
        amp, mean = float(spec.get("amplitude", 0.5)), float(spec.get("mean_log", 0.0))
        return lambda x: np.exp(mean + amp * np.sum(np.cos(2 * np.pi * x / L), axis=-1))
    if kind == "bump":
        base, amp = float(spec.get("base", 0.1)), float(spec.get("amplitude", 1.0))
        width = float(spec.get("width", 0.1 * float(L.min())))
        centre = np.asarray(spec.get("center", (L / 2).tolist()), dtype=float)
        if base <= 0:
            raise ValueError("bump base must be positive")
        return lambda x: base + amp * np.exp(-np.sum((x - centre) ** 2, axis=-1) / (2 * width**2))
    if kind == "random_fourier":
        modes, amp = int(spec.get("modes", 4)), float(spec.get("amplitude", 0.5))
        rng = np.random.default_rng(seed)
        coef = rng.normal(size=(modes, grid.dim, 2)) / (1 + np.arange(modes))[:, None, None] ** 2

        def fn(x):
            s = np.zeros(x.shape[:-1])
            for k in range(modes):
                for d in range(grid.dim):
                    ph = 2 * np.pi * (k + 1) * x[..., d] / L[d]
                    s = s + coef[k, d, 0] * np.cos(ph) + coef[k, d, 1] * np.sin(ph)
            return np.exp(amp * s)

        return fn
    raise ValueError(f"initial data kind must be one of {INITIAL_KINDS}, got {kind!r}")
