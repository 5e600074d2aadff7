"""Margins of the A1/A2/A3 inequality systems and their verdicts.

Every inequality is reported as a *margin*, ``LHS - RHS`` oriented so that
the constraint holds when the margin is non-negative (or positive, for the
strict ones).  :func:`check_system` evaluates all margins on the product of
a time grid and an ``f`` grid and adds the boundary, positivity and
branch (I)/(II)/(III) checks.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from harnackcheck.candidates import CandidateFunctions
from harnackcheck.equations import CurvatureParams, EquationSpec, Linear, reaction_terms
from harnackcheck.timefn import logspace

TOL_EQ = 1e-9
TOL_EQ_TABULATED = 1e-6
TOL_STRICT = 1e-12

DEFAULT_T = (1e-3, 10.0, 200)
DEFAULT_F = (-10.0, 10.0, 21)

# boundedness: a grid supremum above this is treated as unbounded
BOUND_CAP = 1e6
# relative rise over the last stretch of the grid that counts as "still rising"
RISE_TOL = 1e-3


class CheckError(ValueError):
    pass


def default_t_grid(n: int = DEFAULT_T[2]) -> np.ndarray:
    return logspace(DEFAULT_T[0], DEFAULT_T[1], n)


def default_f_grid(n: int = DEFAULT_F[2]) -> np.ndarray:
    return np.linspace(DEFAULT_F[0], DEFAULT_F[1], n)


def _terms(cand, eq, t, f):
    # extended precision: equality-case entries cancel terms of size ~1/t² near t = 0
    t = np.asarray(t, dtype=np.longdouble)
    f = np.asarray(f, dtype=np.longdouble)
    if t.size == 0:
        raise CheckError("empty t grid")
    if not np.all(cand.contains(t)):
        bad = t[~cand.contains(t)]
        raise CheckError(f"t={bad.flat[0]:g} lies outside the domain {cand.t_domain} of {cand.name}")
    v = cand.evaluate(t)
    if np.any(v["alpha"] <= 0):
        raise CheckError(f"alpha must be positive; {cand.name} has alpha <= 0 on the grid")
    _, g1, g2, _ = reaction_terms(eq, f)
    return v, g1, g2


def _f64(x):
    x = np.asarray(x, dtype=float)
    return float(x) if x.ndim == 0 else x


def _first(v, g1, g2, m, K):
    g, a, c = v["gamma"], v["alpha"], v["c"]
    q = 4 * g / m * c
    lhs = q + (a - g) * g1 + a * g2 - 2 * K * g - v["dgamma"]
    return lhs - (g / a) * (q - v["dalpha"])


def _second_m(v, g1, m):
    g, a, c, phi = v["gamma"], v["alpha"], v["c"], v["phi"]
    return v["dphi"] - 2 * g / m * c * c + (phi / a) * (4 * g / m * c - a * g1 - v["dalpha"])


def _third_strict(v, g1, m):
    return 4 * v["gamma"] / m * v["c"] - v["alpha"] * g1 - v["dalpha"]


def _third_a3(v, g1, m):
    a, b = v["alpha"], v["beta"]
    return -(g1 + v["dalpha"] / a + v["dbeta"] / b - 4 * v["gamma"] * v["phi"] / (m * a * a))


def margin_A1_first(cand: CandidateFunctions, eq: EquationSpec, params: CurvatureParams, t, f):
    """``(4γ/m)c + (α-γ)h' + αh'' - 2Kγ - γ' - (γ/α)((4γ/m)c - α')``."""
    v, g1, g2 = _terms(cand, eq, t, f)
    return _f64(_first(v, g1, g2, params.m, params.K))


def margin_A1_first_rearranged(cand, eq, params, t, f):
    """The same quantity written as ``[(4γ/m)c + (α-2γ)h' + αh'' - 2Kγ - γ'] - (γ/α)[(4γ/m)c - αh' - α']``."""
    v, g1, g2 = _terms(cand, eq, t, f)
    g, a, c, m = v["gamma"], v["alpha"], v["c"], params.m
    q = 4 * g / m * c
    left = q + (a - 2 * g) * g1 + a * g2 - 2 * params.K * g - v["dgamma"]
    return _f64(left - (g / a) * (q - a * g1 - v["dalpha"]))


def margin_A1_second(cand, eq, params, t, f):
    """``φ' - (2γ/m)c² + (φ/α)((4γ/m)c - αh' - α')``."""
    v, g1, _ = _terms(cand, eq, t, f)
    return _f64(_second_m(v, g1, params.m))


def margin_A1_third(cand, eq, params, t, f):
    """``(4γ/m)c - αh' - α'``; must be strictly positive."""
    v, g1, _ = _terms(cand, eq, t, f)
    return _f64(_third_strict(v, g1, params.m))


def margin_A3_third(cand, eq, params, t, f):
    """``-(h' + α'/α + β'/β - 4γφ/(mα²))``."""
    if cand.beta is None:
        raise CheckError(f"{cand.name} has no beta; the A3 third inequality needs one")
    v, g1, _ = _terms(cand, eq, t, f)
    return _f64(_third_a3(v, g1, params.m))

# --- sub-checks ----------------------------------------------------------------

@dataclass
class Check:
    """Outcome of one boundary, monotonicity or boundedness test."""

    id: str
    status: str  # "pass" | "fail" | "inconclusive" | "skipped"
    value: Optional[float] = None
    detail: str = ""

    def to_dict(self):
        return {"id": self.id, "status": self.status, "value": _num(self.value), "detail": self.detail}


def _num(x):
    if x is None:
        return None
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return x


def _nondecreasing(cid, deriv, tol) -> Check:
    worst = float(np.min(deriv))
    return Check(cid, "pass" if worst >= -tol else "fail", worst, "minimum derivative on the window")


def _bounded(cid, ratio, cap) -> Check:
    ratio = np.asarray(ratio, dtype=float)
    if not np.all(np.isfinite(ratio)):
        return Check(cid, "fail", float("inf"), "non-finite values on the window")
    sup = float(np.max(ratio))
    if sup > cap:
        return Check(cid, "fail", sup, f"grid supremum exceeds cap {cap:g}")
    k = max(2, ratio.size // 20)
    scale = max(abs(sup), 1e-300)
    rising_left = ratio[0] >= sup - 1e-15 * scale and (ratio[0] - ratio[k - 1]) > RISE_TOL * scale
    rising_right = ratio[-1] >= sup - 1e-15 * scale and (ratio[-1] - ratio[-k]) > RISE_TOL * scale
    if rising_left or rising_right:
        end = "left" if rising_left else "right"
        return Check(cid, "inconclusive", sup, f"supremum still rising at the {end} end of the window")
    return Check(cid, "pass", sup, "grid supremum")


def check_condition_branch(cand: CandidateFunctions, branch: str, t_grid, eps: Optional[float] = None,
                           tol: float = TOL_EQ, cap: float = BOUND_CAP) -> list:
    """Branch (I), (II) or (III) on the supplied window.

    For (I), ``eps=None`` takes ``ε`` as the smallest value of ``min{α-γ, γ}``
    on the window, which must then be positive.
    """
    t = np.asarray(t_grid, dtype=np.longdouble)
    v = cand.evaluate(t)
    g, dg, a, da = v["gamma"], v["dgamma"], v["alpha"], v["dalpha"]
    if "beta" not in v:
        return [Check(f"branch_{branch}", "fail", None, "candidate has no beta")]
    b, db = v["beta"], v["dbeta"]
    out = []
    if branch == "I":
        gap = float(np.min(np.minimum(a - g, g)))
        if eps is None:
            ok = gap > TOL_STRICT
            out.append(Check("I.min_gap", "pass" if ok else "fail", gap, "min{alpha-gamma, gamma} > 0 (eps = window minimum)"))
        else:
            if not eps > 0:
                raise CheckError("branch I needs eps > 0")
            out.append(Check("I.min_gap", "pass" if gap >= eps - tol else "fail", gap,
                             f"min{{alpha-gamma, gamma}} >= eps = {eps:g}"))
        out.append(_nondecreasing("I.alpha_nondecreasing", da, tol))
        out.append(_nondecreasing("I.beta_nondecreasing", db, tol))
        return out
    if branch not in ("II", "III"):
        raise CheckError(f"unknown branch {branch!r}")
    gap = a - g
    out.append(Check(f"{branch}.alpha_gt_gamma", "pass" if np.min(gap) > TOL_STRICT else "fail", float(np.min(gap))))
    out.append(Check(f"{branch}.gamma_positive", "pass" if np.min(g) > TOL_STRICT else "fail", float(np.min(g))))
    out.append(_nondecreasing(f"{branch}.alpha_nondecreasing", da, tol))
    with np.errstate(divide="ignore", invalid="ignore"):
        if branch == "II":
            # (α²β/γ)' = (2αα'β + α²β')/γ - α²βγ'/γ²
            d = (2 * a * da * b + a * a * db) / g - a * a * b * dg / (g * g)
            out.append(_nondecreasing("II.alpha2beta_over_gamma_nondecreasing", d, tol))
            out.append(_bounded("II.beta_over_gamma2_gap_bounded", b / (g * g * gap), cap))
        else:
            d = 2 * a * da / g - a * a * dg / (g * g)
            out.append(_nondecreasing("III.alpha2_over_gamma_nondecreasing", d, tol))
            out.append(_nondecreasing("III.beta_nondecreasing", db, tol))
            out.append(_bounded("III.beta_over_gap_bounded", b / gap, cap))
    return out


RICHARDSON_T = 1e-3 * 2.0 ** -np.arange(7)


def _limit_check(cid, fn) -> Check:
    """Decide whether ``lim_{t->0+}`` exists from samples at ``1e-3·2^-j``.

    Successive differences must shrink (first-order convergence halves them);
    the reported value is the two-level Richardson extrapolation.
    """
    vals = fn(RICHARDSON_T)[0]
    if not np.all(np.isfinite(vals)):
        return Check(cid, "fail", None, "non-finite samples near t = 0")
    d = np.diff(vals)
    scale = max(1.0, float(np.max(np.abs(vals))))
    r1 = 2 * vals[1:] - vals[:-1]
    r2 = (4 * r1[1:] - r1[:-1]) / 3
    est = float(r2[-1])
    if np.max(np.abs(d)) <= 1e-9 * scale:
        return Check(cid, "pass", est, "constant near t = 0")
    if abs(d[-1]) <= 0.5 * abs(d[0]):
        return Check(cid, "pass", est, "Richardson extrapolation of t = 1e-3*2^-j, j=0..6")
    return Check(cid, "fail", est, "differences do not shrink as t -> 0")


def check_A2_boundary(cand: CandidateFunctions, params: Optional[CurvatureParams] = None) -> list:
    """Limits of ``α`` and ``γ`` at ``0⁺`` and divergence of ``φ``."""
    out = [_limit_check("alpha_limit", cand.alpha), _limit_check("gamma_limit", cand.gamma)]
    ts = logspace(1e-8, 1e-2, 25)
    phi = cand.phi(ts)[0]
    decreasing = bool(np.all(np.diff(phi) < 0))
    tphi = ts * phi
    ratio = float(tphi[0] / tphi[12]) if tphi[12] != 0 else 0.0
    ok = decreasing and np.all(tphi > 0) and ratio >= 0.5
    detail = f"phi decreasing near 0: {decreasing}; t*phi(1e-8)/t*phi(1e-5) = {ratio:.6g}"
    out.append(Check("phi_divergence", "pass" if ok else "fail", float(tphi[0]), detail))
    return out


def check_beta_zero(cand: CandidateFunctions) -> Check:
    """``β(0) = 0`` read as ``β(1e-8) < 1e-6 β(1)``."""
    lo, hi = cand.t_domain
    if cand.beta is None:
        return Check("beta_zero", "fail", None, "candidate has no beta")
    if cand.tabulated and (lo > 1e-8 or hi < 1):
        return Check("beta_zero", "inconclusive", None, "t = 1e-8 or t = 1 lies outside the sample range")
    b0, b1 = cand.beta(np.array([1e-8, 1.0]))[0]
    ok = abs(b0) < 1e-6 * abs(b1)
    return Check("beta_zero", "pass" if ok else "fail", float(b0), f"beta(1e-8) vs 1e-6*beta(1) = {1e-6 * b1:.3g}")


# --- full report ------------------------------------------------------------------

@dataclass
class SystemCheckReport:
    system_kind: str
    condition_branch: str
    candidate: str
    t_grid: np.ndarray
    f_grid: np.ndarray
    margins: dict
    strict: tuple
    tol_eq: float
    min_margin: dict = field(default_factory=dict)
    worst_location: dict = field(default_factory=dict)
    boundary_checks: list = field(default_factory=list)
    branch_checks: list = field(default_factory=list)
    verdict: str = "pass"
    failing: list = field(default_factory=list)
    notes: list = field(default_factory=list)
    params: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.verdict == "pass"

    def to_dict(self) -> dict:
        return {
            "system_kind": self.system_kind,
            "condition_branch": self.condition_branch,
            "candidate": self.candidate,
            "params": self.params,
            "verdict": self.verdict,
            "failing": list(self.failing),
            "tol_eq": self.tol_eq,
            "tol_strict": TOL_STRICT,
            "grid": {
                "t_min": float(self.t_grid[0]), "t_max": float(self.t_grid[-1]), "n_t": int(self.t_grid.size),
                "f_min": float(self.f_grid[0]), "f_max": float(self.f_grid[-1]), "n_f": int(self.f_grid.size),
            },
            "min_margin": {k: _num(v) for k, v in self.min_margin.items()},
            "worst_location": {k: [_num(t), _num(f)] for k, (t, f) in self.worst_location.items()},
            "strict_constraints": list(self.strict),
            "boundary_checks": [c.to_dict() for c in self.boundary_checks],
            "branch_checks": [c.to_dict() for c in self.branch_checks],
            "notes": list(self.notes),
        }

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True, **kw)

    def write_json(self, path):
        with open(path, "w") as fh:
            fh.write(self.to_json())
            fh.write("\n")

    def write_margin_csv(self, path):
        with open(path, "w", newline="") as fh:
            write_margin_rows(fh, self)


def write_margin_rows(fh, report: SystemCheckReport):
    w = csv.writer(fh)
    w.writerow(["t", "f", "margin_id", "margin"])
    for mid in sorted(report.margins):
        arr = report.margins[mid]
        for i, t in enumerate(report.t_grid):
            for j, f in enumerate(report.f_grid):
                w.writerow([repr(float(t)), repr(float(f)), mid, repr(float(arr[i, j]))])


def _window(cand: CandidateFunctions, t_grid) -> np.ndarray:
    t = np.asarray(t_grid, dtype=float)
    if t.size == 0:
        raise CheckError("empty t grid")
    if np.any(np.diff(t) <= 0):
        raise CheckError("t grid must be strictly increasing")
    w = t[cand.contains(t)]
    lo, hi = cand.t_domain
    if math.isfinite(hi) and not cand.right_open and t[0] <= hi <= t[-1] and (w.size == 0 or w[-1] < hi):
        w = np.append(w, hi)
    if cand.tabulated and t[0] <= lo <= t[-1] and (w.size == 0 or w[0] > lo):
        w = np.insert(w, 0, lo)
    if w.size == 0:
        raise CheckError(f"t grid does not meet the domain {cand.t_domain} of {cand.name}")
    return w


def _f_window(cand: CandidateFunctions, f_grid) -> np.ndarray:
    f = np.asarray(f_grid, dtype=float)
    if f.size == 0:
        raise CheckError("empty f grid")
    lo, hi = cand.f_domain
    keep = f[(f >= lo) & (f <= hi)]
    for edge in (lo, hi):
        if math.isfinite(edge) and f.min() <= edge <= f.max():
            keep = np.append(keep, edge)
    keep = np.unique(keep)
    if keep.size == 0:
        raise CheckError(f"f grid does not meet the admissible range {cand.f_domain} of {cand.name}")
    return keep


def check_system(cand: CandidateFunctions, eq: EquationSpec, params: CurvatureParams, system: str = "A3",
                 branch: Optional[str] = None, t_grid=None, f_grid=None, eps: Optional[float] = None,
                 cap: float = BOUND_CAP) -> SystemCheckReport:
    """Evaluate every margin and check of ``system`` for ``cand``.

    The time window is ``t_grid`` intersected with the candidate domain; the
    ``f`` grid is clipped to the candidate's admissible ``f`` range with the
    range edge added, since the reaction derivatives of a single power are
    extremal there.
    """
    system = system.upper()
    if system not in ("A1", "A2", "A3"):
        raise CheckError(f"unknown system {system!r}")
    if system == "A3" and branch not in ("I", "II", "III"):
        raise CheckError(f"A3 needs a branch in I/II/III, got {branch!r}")
    t = _window(cand, default_t_grid() if t_grid is None else t_grid)
    f = _f_window(cand, default_f_grid() if f_grid is None else f_grid)
    tol = TOL_EQ_TABULATED if cand.tabulated else TOL_EQ

    v, g1, g2 = _terms(cand, eq, t, f)
    _, _, _, clamped = reaction_terms(eq, f)
    vv = {k: x[:, None] for k, x in v.items()}
    G1, G2 = g1[None, :], g2[None, :]
    shape = (t.size, f.size)
    m, K = params.m, params.K

    def full(x):
        return np.broadcast_to(np.asarray(x, dtype=float), shape).copy()

    margins = {
        "first": full(_first(vv, G1, G2, m, K)),
        "second": full(_second_m(vv, G1, m)),
        "alpha_positive": full(vv["alpha"]),
        "gamma_positive": full(vv["gamma"]),
    }
    strict = ["alpha_positive", "gamma_positive"]
    if system in ("A1", "A2"):
        margins["third_strict"] = full(_third_strict(vv, G1, m))
        strict.append("third_strict")
    else:
        if cand.beta is None:
            raise CheckError(f"{cand.name} has no beta; A3 needs one")
        margins["third"] = full(_third_a3(vv, G1, m))
        margins["beta_positive"] = full(vv["beta"])
        strict.append("beta_positive")

    report = SystemCheckReport(
        system_kind=system, condition_branch=branch if system == "A3" else "none", candidate=cand.name,
        t_grid=t, f_grid=f, margins=margins, strict=tuple(strict), tol_eq=tol,
        params=_jsonable(dict(cand.param_meta)),
    )
    failing = []
    for mid in sorted(margins):
        arr = margins[mid]
        flat = np.where(np.isnan(arr), -np.inf, arr)
        idx = int(np.argmin(flat))
        i, j = divmod(idx, shape[1])
        val = float(flat.flat[idx])
        report.min_margin[mid] = val
        report.worst_location[mid] = (float(t[i]), float(f[j]))
        threshold = TOL_STRICT if mid in strict else -tol
        if (val <= threshold) if mid in strict else (val < threshold):
            failing.append(mid)

    if system == "A2":
        report.boundary_checks = check_A2_boundary(cand, params)
    if system == "A3":
        report.boundary_checks = [check_beta_zero(cand)]
        report.branch_checks = check_condition_branch(cand, branch, t, eps=eps, tol=tol, cap=cap)
    checks = report.boundary_checks + report.branch_checks
    failing += [c.id for c in checks if c.status == "fail"]
    report.failing = failing
    if failing:
        report.verdict = "fail"
    elif any(c.status == "inconclusive" for c in checks):
        report.verdict = "inconclusive"
    if np.any(clamped):
        report.notes.append("reaction exponent clamped at |(p-1)f| = 700 on part of the f grid")
    if cand.experimental:
        report.notes.append("experimental catalog entry")
    if isinstance(eq, Linear):
        report.notes.append("linear equation: margins are independent of f")
    if math.isfinite(cand.t_domain[1]) and cand.t_domain[1] < np.max(default_t_grid() if t_grid is None else t_grid):
        report.notes.append(f"verdict is for the finite window t <= {cand.t_domain[1]:.6g}")
    return report


def _jsonable(d):
    out = {}
    for k, v in d.items():
        if isinstance(v, (int, float)) and not isinstance(v, bool):
            out[k] = _num(v)
        elif isinstance(v, (str, bool)) or v is None:
            out[k] = v
        else:
            out[k] = str(v)
    return out
