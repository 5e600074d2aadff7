"""Candidate quintuples ``(γ, α, φ, β, c)`` and the closed-form catalog.

Each time function returns ``(value, derivative)`` on an array of times.
Constructors validate their parameter regime and raise
:class:`CandidateError` naming the violated constraint.

Catalog entries are addressable by string id through :data:`CATALOG`, e.g.
``"heat.li_yau"``, ``"log.hamilton_neg"`` or ``"yamabe.case1_2.li_yau.k_scaled"``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from harnackcheck import timefn as tf
from harnackcheck.equations import CurvatureParams, EquationSpec, Linear, Logarithmic, PowerSum
from harnackcheck.timefn import TimeFunction


class CandidateError(ValueError):
    pass


def _require(cond: bool, msg: str):
    if not cond:
        raise CandidateError(msg)


@dataclass(frozen=True)
class CandidateFunctions:
    """A named quintuple of time functions with a validity window.

    ``t_domain`` is ``(lo, hi)``; the left end is always open, the right end
    is closed when finite unless ``right_open`` is set.  ``f_domain`` limits
    the values of ``f = ln u`` on which the entry is claimed (bounded
    solutions in the Yamabe catalog).
    """

    name: str
    gamma: TimeFunction
    alpha: TimeFunction
    phi: TimeFunction
    beta: Optional[TimeFunction]
    c: TimeFunction
    t_domain: tuple = (0.0, math.inf)
    param_meta: dict = field(default_factory=dict)
    f_domain: tuple = (-math.inf, math.inf)
    experimental: bool = False
    tabulated: bool = False
    right_open: bool = False

    def contains(self, t):
        t = np.asarray(t, dtype=float)
        lo, hi = self.t_domain
        upper = t < hi if self.right_open else t <= hi
        return (t > lo) & upper

    def evaluate(self, t) -> dict:
        """All five functions and derivatives at ``t`` as a dict of arrays."""
        out = {}
        for key in ("gamma", "alpha", "phi", "beta", "c"):
            fn = getattr(self, key)
            if fn is None:
                continue
            v, d = fn(t)
            out[key] = v
            out["d" + key] = d
        return out

    def scaled(self, k: float, name: Optional[str] = None) -> "CandidateFunctions":
        """``(kα, β, k²φ, kc)`` with ``γ`` unchanged."""
        _require(k >= 1, f"k-scaling needs k >= 1, got {k}")
        meta = dict(self.param_meta, k=k)
        return CandidateFunctions(
            name=name or f"{self.name}*k",
            gamma=self.gamma,
            alpha=k * self.alpha,
            phi=(k * k) * self.phi,
            beta=self.beta,
            c=k * self.c,
            t_domain=self.t_domain,
            param_meta=meta,
            f_domain=self.f_domain,
            experimental=self.experimental,
            right_open=self.right_open,
        )


ONE = tf.const(1.0)
T = tf.identity()
INV_T = tf.inv_t()


def _li_yau(name, m, K, alpha, extra_const=0.0, k_phi=4.0, meta=None):
    """``φ = mα²/2t + mα²(K/(k_phi(α-1))) + α² extra``, ``c = mα/2t + mαK/(2(α-1)) + α extra``.

    Shared by every constant-α Li-Yau entry; ``extra_const`` carries the
    ``mM/2`` shifts of the bounded-solution variants.
    """
    _require(alpha > 1, f"{name}: alpha must be > 1, got {alpha}")
    a2 = alpha * alpha
    phi = (m * a2 / 2) * INV_T + (m * a2 * K / (k_phi * (alpha - 1)) + a2 * extra_const)
    c = (m * alpha / 2) * INV_T + (m * alpha * K / (2 * (alpha - 1)) + alpha * extra_const)
    return CandidateFunctions(
        name=name, gamma=ONE, alpha=tf.const(alpha), phi=phi, beta=T, c=c,
        param_meta=dict(meta or {}, m=m, K=K, alpha=alpha),
    )


def _li_xu(name, m, kappa, meta=None):
    """``α = 1 + (sinh cosh - x)/sinh²``, ``β = tanh``, ``φ = c = (mκ/2)(coth(κt)+1)``."""
    _require(kappa > 0, f"{name}: needs a positive curvature rate, got {kappa}")
    phi = (m * kappa / 2) * tf.coth_plus_one(kappa)
    return CandidateFunctions(
        name=name, gamma=ONE, alpha=tf.lixu_alpha(kappa), phi=phi, beta=tf.tanh(kappa), c=phi,
        param_meta=dict(meta or {}, m=m, kappa=kappa),
    )


def _hhl(name, m, a, K, meta=None):
    """Li-Xu type with the exponential α of the log equation; ``s = K + a/2``."""
    s = K + a / 2
    _require(s > 0 and K + a > 0, f"{name}: needs K + a/2 > 0 and K + a > 0 (K={K}, a={a})")
    phi = (m * s / 2) * tf.coth_plus_one(s)
    return CandidateFunctions(
        name=name, gamma=ONE, alpha=tf.hhl_alpha(a, K), phi=phi, beta=tf.tanh(s), c=phi,
        param_meta=dict(meta or {}, m=m, K=K, a=a),
    )


def _linear_li_xu(name, m, K, shift=0.0, shift_kind="none", scale=1.0, meta=None):
    """``α = s(1 + 2Kt/3)``, ``β = tanh(Kt)`` with optional reaction shifts.

    ``shift_kind`` selects the correction added to ``φ`` and ``c``:
    ``"pos"`` adds ``(m s²A/16)(At+6)(1+2Kt/3)²`` and ``(m s A/4)(1+2Kt/3)``,
    ``"neg"`` adds ``-(mA/16)(1+2Kt/3)²`` and ``-(mA/4)(1+2Kt/3)``, with ``A = shift``.
    """
    _require(K > 0, f"{name}: needs K > 0, got {K}")
    lin = 1 + (2 * K / 3) * T
    phi = (m / 2) * (INV_T + K + (K * K / 3) * T)
    c = (m / 2) * (INV_T + K)
    if shift_kind == "pos":
        phi = phi + (m * shift / 16) * ((shift * T + 6) * lin**2)
        c = c + (m * shift / 4) * lin
    elif shift_kind == "neg":
        phi = phi - (m * shift / 16) * lin**2
        c = c - (m * shift / 4) * lin
    return CandidateFunctions(
        name=name, gamma=ONE, alpha=scale * lin, phi=(scale * scale) * phi, beta=tf.tanh(K), c=scale * c,
        param_meta=dict(meta or {}, m=m, K=K),
    )


def _hamilton(name, m, K, delta, phi_shift=0.0, c_shift=None, k=1.0, meta=None):
    """``γ = δe^{-2Kt}``, ``α = 1``, ``β = t``, ``φ = k² (m e^{2Kt}/2δ)(1/t + φ_shift)``."""
    _require(0 < delta < 1, f"{name}: delta must lie in (0, 1), got {delta}")
    c_shift = phi_shift if c_shift is None else c_shift
    base = (m / (2 * delta)) * tf.exp(2 * K)
    return CandidateFunctions(
        name=name,
        gamma=delta * tf.exp(-2 * K),
        alpha=ONE,
        phi=(k * k) * (base * (INV_T + phi_shift)),
        beta=T,
        c=k * (base * (INV_T + c_shift)),
        param_meta=dict(meta or {}, m=m, K=K, delta=delta, k=k),
    )


# --- heat equation ---------------------------------------------------------

HEAT_KINDS = ("LiYauDavies", "LiXu", "LinearLiXu", "Hamilton")


def make_heat_family(kind: str, params: CurvatureParams, alpha: float = 2.0, delta: float = 0.5) -> CandidateFunctions:
    m, K = params.m, params.K
    if kind == "LiYauDavies":
        if alpha == 1:
            # classical closed-manifold form, only for K = 0
            _require(K == 0, "heat.li_yau: alpha = 1 needs K = 0")
            half = (m / 2) * INV_T
            return CandidateFunctions(name="heat.li_yau", gamma=ONE, alpha=ONE, phi=half, beta=T, c=half,
                                      param_meta={"m": m, "K": K, "alpha": 1.0})
        return _li_yau("heat.li_yau", m, K, alpha)
    if kind == "LiXu":
        _require(K > 0, "heat.li_xu: needs K > 0")
        return _li_xu("heat.li_xu", m, K, meta={"K": K})
    if kind == "LinearLiXu":
        return _linear_li_xu("heat.linear_li_xu", m, K)
    if kind == "Hamilton":
        return _hamilton("heat.hamilton", m, K, delta)
    raise CandidateError(f"unknown heat family {kind!r}; expected one of {HEAT_KINDS}")


# --- logarithmic equation --------------------------------------------------

LOG_KINDS = (
    "LiYauCase1a", "LiYauCase1b", "LiYauCase2", "LiXuPos", "LiXuPosAlt", "LiXuNeg", "LiXuNegAlt",
    "LinearLiXuPos", "LinearLiXuNeg", "HamiltonPos", "HamiltonNeg", "ExtraPos", "ExtraNeg",
    "SharpCompact", "SharpPosComplete", "SharpNegFamily",
)


def _lixu_pos_alt(m, a, K):
    _require(a > 0, f"log.li_xu_pos_alt: needs a > 0, got {a}")
    s, P = K + a / 2, K + 3 * a / 2
    e = tf.exp(a) - 1.0  # e^{at} - 1
    coth_like = (tf.exp(a) + 1.0) / e
    phi = (m / 2) * ((P * P / (2 * a)) * coth_like - (2 * s * P / a) * (1.0 / e) + (s * s) * (T / e**2))
    c = (m / 2) * (tf.sharp_profile(a) + s)
    alpha = 1 + (2 * K / (3 * a)) * tf.one_minus_exp(a)
    return CandidateFunctions(
        name="log.li_xu_pos_alt", gamma=ONE, alpha=alpha, phi=phi, beta=tf.tanh(s), c=c,
        param_meta={"m": m, "K": K, "a": a},
    )


def _extra_pos(m, a, K):
    _require(K > 0, "log.extra_pos: needs K > 0 (the constant involves sqrt((K+a)K))")
    _require(a >= 0, f"log.extra_pos: needs a >= 0, got {a}")
    ec = tf.exp(a) * tf.coth_plus_one(K)
    return CandidateFunctions(
        name="log.extra_pos", gamma=ONE, alpha=tf.lixu_alpha(K), beta=tf.tanh(K),
        phi=(m / 2 * (K + a)) * ec, c=(m / 2 * math.sqrt((K + a) * K)) * ec,
        param_meta={"m": m, "K": K, "a": a}, experimental=True,
    )


def _extra_neg(m, a, K):
    _require(K > 0, "log.extra_neg: needs K > 0")
    _require(a <= 0, f"log.extra_neg: needs a <= 0, got {a}")
    al = tf.lixu_alpha(K)
    base = (m * K / 2) * tf.coth_plus_one(K)
    return CandidateFunctions(
        name="log.extra_neg", gamma=ONE, alpha=al, beta=tf.tanh(K),
        phi=base - (m * a / 16) * al**2, c=base - (m * a / 4) * al,
        param_meta={"m": m, "K": K, "a": a},
    )


def sharp_compact(m: float, a: float) -> CandidateFunctions:
    """``γ = α = 1``, ``φ = c = ma / (2(1 - e^{-at}))``.

    ``β = |1 - e^{-at}|`` is attached so the quintuple can also be fed to the
    complete-manifold checks (where it is expected to fail the branch test).
    """
    _require(a != 0, "log.sharp_compact: needs a != 0")
    phi = (m / 2) * tf.sharp_profile(a)
    beta = math.copysign(1.0, a) * tf.one_minus_exp(a)
    return CandidateFunctions(
        name="log.sharp_compact", gamma=ONE, alpha=ONE, phi=phi, beta=beta, c=phi,
        param_meta={"m": m, "a": a},
    )


def sharp_pos_complete(m: float, a: float, alpha: float) -> CandidateFunctions:
    _require(a > 0, f"log.sharp_pos_complete: needs a > 0, got {a}")
    _require(alpha > 1, f"log.sharp_pos_complete: needs alpha > 1, got {alpha}")
    prof = (m / 2) * tf.sharp_profile(a)
    return CandidateFunctions(
        name="log.sharp_pos_complete", gamma=ONE, alpha=tf.const(alpha), phi=(alpha * alpha) * prof,
        beta=tf.one_minus_exp(a), c=alpha * prof, param_meta={"m": m, "a": a, "alpha": alpha},
    )


def sharp_neg_family(m: float, a: float, l_fn, t_max: float, eps: Optional[float] = None) -> CandidateFunctions:
    """``γ = 1/(1+l)``, ``α = 1``, ``β = e^{-at} - 1``, ``φ = c = (1+l) ma/(2(1-e^{-at}))``.

    ``l_fn`` maps times to ``(l, l')``; it is normally the piecewise function
    built from the blow-up ODE, valid on ``(0, t_max)``.
    """
    _require(a < 0, f"log.sharp_neg_family: needs a < 0, got {a}")
    l_tf = l_fn if isinstance(l_fn, TimeFunction) else TimeFunction(l_fn)
    one_l = 1 + l_tf
    prof = (m / 2) * tf.sharp_profile(a)
    return CandidateFunctions(
        name="log.sharp_neg_family", gamma=1.0 / one_l, alpha=ONE, phi=one_l * prof,
        beta=-tf.one_minus_exp(a), c=one_l * prof, t_domain=(0.0, float(t_max)), right_open=True,
        param_meta={"m": m, "a": a, "eps": eps, "t_max": float(t_max)},
    )


def make_log_family(kind: str, params: CurvatureParams, a: float, alpha: float = 2.0, delta: float = 0.5,
                    l_fn=None, t_max: Optional[float] = None, eps: Optional[float] = None) -> CandidateFunctions:
    m, K = params.m, params.K
    meta = {"a": a}
    if kind in ("LiYauCase1a", "LiYauCase1b"):
        _require(a >= 0, f"{kind}: needs a >= 0, got {a}")
        _require(alpha > 1, f"{kind}: alpha must be > 1, got {alpha}")
        edge = 1.5 * a * (alpha - 1)
        if kind == "LiYauCase1a":
            _require(K <= edge, f"LiYauCase1a: needs K <= (3/2)a(alpha-1) = {edge}, got K={K}")
            cand = _li_yau("log.li_yau_case1a", m, 0.0, alpha, extra_const=m * a / 2, meta=meta)
            return _with(cand, param_meta=dict(cand.param_meta, K=K))
        _require(K >= edge, f"LiYauCase1b: needs K >= (3/2)a(alpha-1) = {edge}, got K={K}")
        return _li_yau_shifted("log.li_yau_case1b", m, K, alpha, a / 4, -a / 4, meta)
    if kind == "LiYauCase2":
        _require(a <= 0, f"LiYauCase2: needs a <= 0, got {a}")
        return _li_yau_shifted("log.li_yau_case2", m, K, alpha, -a / 4, -a / 4, meta)
    if kind == "LiXuPos":
        _require(a >= 0, f"LiXuPos: needs a >= 0, got {a}")
        return _hhl("log.li_xu_pos", m, a, K)
    if kind == "LiXuPosAlt":
        return _lixu_pos_alt(m, a, K)
    if kind == "LiXuNeg":
        _require(a <= 0, f"LiXuNeg: needs a <= 0, got {a}")
        return _li_xu("log.li_xu_neg", m, K - a / 2, meta={"K": K, "a": a})
    if kind == "LiXuNegAlt":
        _require(-K <= a < 0, f"LiXuNegAlt: needs -K <= a < 0 (K={K}, a={a})")
        cand = _hhl("log.li_xu_neg_alt", m, a, K - a)
        return _with(cand, param_meta={"m": m, "K": K, "a": a})
    if kind == "LinearLiXuPos":
        _require(a >= 0, f"LinearLiXuPos: needs a >= 0, got {a}")
        return _linear_li_xu("log.linear_li_xu_pos", m, K, a, "pos", meta=meta)
    if kind == "LinearLiXuNeg":
        _require(a <= 0, f"LinearLiXuNeg: needs a <= 0, got {a}")
        return _linear_li_xu("log.linear_li_xu_neg", m, K, a, "neg", meta=meta)
    if kind == "HamiltonPos":
        _require(a >= 0, f"HamiltonPos: needs a >= 0, got {a}")
        return _hamilton("log.hamilton_pos", m, K, delta, a, meta=meta)
    if kind == "HamiltonNeg":
        _require(a <= 0, f"HamiltonNeg: needs a <= 0, got {a}")
        return _hamilton("log.hamilton_neg", m, K, delta, -a / 8, -a / 2, meta=meta)
    if kind == "ExtraPos":
        return _extra_pos(m, a, K)
    if kind == "ExtraNeg":
        return _extra_neg(m, a, K)
    if kind == "SharpCompact":
        return sharp_compact(m, a)
    if kind == "SharpPosComplete":
        return sharp_pos_complete(m, a, alpha)
    if kind == "SharpNegFamily":
        if l_fn is None:
            from harnackcheck.ode_lab import build_l

            _require(eps is not None and eps > 0, "SharpNegFamily: needs eps > 0 or an explicit l_fn")
            l_obj = build_l(a, eps)
            l_fn, t_max = l_obj, l_obj.t_end
        _require(t_max is not None, "SharpNegFamily: needs t_max with an explicit l_fn")
        return sharp_neg_family(m, a, l_fn, t_max, eps)
    raise CandidateError(f"unknown log family {kind!r}; expected one of {LOG_KINDS}")


def _li_yau_shifted(name, m, K, alpha, phi_shift, c_shift, meta):
    """Li-Yau with the ``K/(2(α-1))`` constant and separate ``±a/4`` shifts."""
    _require(alpha > 1, f"{name}: alpha must be > 1, got {alpha}")
    a2 = alpha * alpha
    q = K / (2 * (alpha - 1))
    phi = (m * a2 / 2) * INV_T + (m * a2 / 2) * (q + phi_shift)
    c = (m * alpha / 2) * INV_T + m * alpha * (q + c_shift)
    return CandidateFunctions(
        name=name, gamma=ONE, alpha=tf.const(alpha), phi=phi, beta=T, c=c,
        param_meta=dict(meta, m=m, K=K, alpha=alpha),
    )


def _with(cand: CandidateFunctions, **changes) -> CandidateFunctions:
    from dataclasses import replace

    return replace(cand, **changes)


# --- Yamabe type equation H(u) = a u + b u^p --------------------------------

YAMABE_KINDS = ("li_yau", "li_xu", "linear_li_xu", "hamilton")


def yamabe_case(b: float, p: float) -> str:
    """Case label from the signs of ``b`` and ``p``."""
    _require(b != 0 and p != 1 and p != 0, f"Yamabe case needs b != 0, p not in (0, 1): b={b}, p={p}")
    if b > 0 and p > 1:
        return "1.1"
    if b < 0 and 0 < p < 1:
        return "1.2"
    if b < 0 and p < 0:
        return "1.3"
    if b > 0 and p < 0:
        return "2.1"
    if b > 0 and 0 < p < 1:
        return "2.2"
    return "2.3"


def bounded_f_domain(b: float, p: float, M: float) -> tuple:
    """Values of ``f`` with ``|b(p-1)| e^{(p-1)f} <= M``."""
    _require(M > 0, f"a bounded-solution entry needs M > 0, got {M}")
    edge = math.log(M / abs(b * (p - 1))) / (p - 1)
    return (-math.inf, edge) if p > 1 else (edge, math.inf)


def make_yamabe_family(kind: str, params: CurvatureParams, a: float, b: float, p: float, M: float = 0.0,
                       case: Optional[str] = None, alpha: float = 1.5, delta: float = 0.5,
                       k: Optional[float] = None) -> CandidateFunctions:
    """Catalog entries for ``H(u) = a u + b u^p``.

    ``case`` is checked against the signs of ``b`` and ``p`` when given.
    Entries that use the bound ``M`` carry the matching ``f_domain``.
    """
    m, K = params.m, params.K
    _require(M >= 0, f"M must be >= 0, got {M}")
    actual = yamabe_case(b, p)
    if case is not None:
        _require(str(case) == actual, f"case {case} does not match sign(b)={b:+g}, p={p:g} (that is case {actual})")
    meta = {"a": a, "b": b, "p": p, "M": M, "case": actual}
    tag = "yamabe.case" + actual.replace(".", "_")

    def bounded(cand):
        return _with(cand, f_domain=bounded_f_domain(b, p, M), param_meta=dict(cand.param_meta, **meta))

    def plain(cand):
        return _with(cand, param_meta=dict(cand.param_meta, **meta))

    if actual in ("1.1", "1.2"):
        if kind == "li_yau":
            base = _li_yau(f"{tag}.li_yau", m, K, alpha, extra_const=m * M / 2, k_phi=2.0)
        elif kind == "li_xu":
            _require(M > 0 or K > 0, f"{tag}.li_xu: needs K + M > 0")
            base = _hhl(f"{tag}.li_xu", m, M, K) if M > 0 else _li_xu(f"{tag}.li_xu", m, K)
        elif kind == "linear_li_xu":
            base = _linear_li_xu(f"{tag}.linear_li_xu", m, K, M, "pos")
        elif kind == "hamilton":
            kk = 1.0
            if actual == "1.2":
                _require(0 < delta < 1, f"{tag}.hamilton: delta must lie in (0, 1), got {delta}")
                kk = 1.0 if (delta <= p or delta <= 2 / 3) else delta / (2 * (1 - delta))
            return bounded(_hamilton(f"{tag}.hamilton", m, K, delta, M, k=kk))
        else:
            raise CandidateError(f"unknown Yamabe family {kind!r}")
        if actual == "1.1":
            return bounded(base)
        kk = 1.0 / p if k is None else k
        _require(kk >= 1 / p, f"{tag}: k-scaling needs k >= 1/p = {1 / p}, got {kk}")
        return bounded(base.scaled(kk, name=f"{tag}.{kind}.k_scaled"))

    if actual == "1.3":
        Kt = K + (abs(p) + 0.5) * M
        meta["K_tilde"] = Kt
        if kind == "li_yau":
            _require(1 < alpha < 2, f"{tag}.li_yau: alpha must lie in (1, 2), got {alpha}")
            return bounded(_li_yau(f"{tag}.li_yau", m, Kt, alpha, extra_const=m * M / 2, k_phi=2.0))
        if kind == "li_xu":
            return bounded(_hhl(f"{tag}.li_xu", m, M, Kt))
        if kind == "linear_li_xu":
            return bounded(_linear_li_xu(f"{tag}.linear_li_xu", m, K, M, "pos", scale=2 - p))
        if kind == "hamilton":
            _require(0 < delta < 1, f"{tag}.hamilton: delta must lie in (0, 1), got {delta}")
            kk = 1.0 if delta <= (2 + p) / 3 else (delta - p) / (2 * (1 - delta))
            return bounded(_hamilton(f"{tag}.hamilton", m, K, delta, M, k=kk))
        raise CandidateError(f"unknown Yamabe family {kind!r}")

    if actual == "2.1":
        return plain(make_heat_family(_HEAT_OF[kind], params, alpha=alpha, delta=delta))

    if actual == "2.2":
        if kind == "li_yau":
            _require(1 < alpha <= 1 / p, f"{tag}.li_yau: alpha must lie in (1, 1/p] = (1, {1 / p}], got {alpha}")
            return plain(make_heat_family("LiYauDavies", params, alpha=alpha))
        if kind == "li_xu":
            cand = make_heat_family("LiXu", params)
            if p > 0.5:
                cand = _with(cand, t_domain=(0.0, tf.lixu_unit_crossing(1 / p) / K))
            return plain(cand)
        if kind == "linear_li_xu":
            cand = make_heat_family("LinearLiXu", params)
            return plain(_with(cand, t_domain=(0.0, 1.5 / K * (1 / p - 1))))
        if kind == "hamilton":
            _require(p < delta < 1, f"{tag}.hamilton: delta must lie in (p, 1) = ({p}, 1), got {delta}")
            cand = make_heat_family("Hamilton", params, delta=delta)
            hi = math.log(delta / p) / (2 * K) if K > 0 else math.inf
            return plain(_with(cand, t_domain=(0.0, hi)))
        raise CandidateError(f"unknown Yamabe family {kind!r}")

    # case 2.3: b < 0, p > 1
    Kb = K + (p - 0.5) * M
    meta["K_bar"] = Kb
    if kind == "li_yau":
        _require(1 < alpha < 2, f"{tag}.li_yau: alpha must lie in (1, 2), got {alpha}")
        return bounded(_li_yau(f"{tag}.li_yau", m, Kb, alpha))
    if kind == "li_xu":
        return bounded(_li_xu(f"{tag}.li_xu", m, Kb))
    if kind == "linear_li_xu":
        return bounded(_linear_li_xu(f"{tag}.linear_li_xu", m, K, M, "pos", scale=2 - p))
    if kind == "hamilton":
        _require(0 < delta < 1, f"{tag}.hamilton: delta must lie in (0, 1), got {delta}")
        kk = 1.0 if delta <= 2 - p else (p - delta) / (2 * (1 - delta))
        return bounded(_hamilton(f"{tag}.hamilton", m, K, delta, M, k=kk))
    raise CandidateError(f"unknown Yamabe family {kind!r}")


_HEAT_OF = {"li_yau": "LiYauDavies", "li_xu": "LiXu", "linear_li_xu": "LinearLiXu", "hamilton": "Hamilton"}


def power_li_yau(params: CurvatureParams, eq: PowerSum, alpha: float) -> CandidateFunctions:
    """Li-Yau form for ``H(u) = Σ a_i u^{p_i}`` with ``a_i >= 0`` and ``p_i <= 1``.

    ``α`` must lie in ``(1, α0]`` where ``α0 = 1/p_N`` (or ``1/p_{N-1}`` when
    ``p_N = 1``; unbounded when the relevant exponent is ``<= 0``).  ``α = 1``
    gives the closed-manifold variant and needs ``K = 0``.
    """
    _require(isinstance(eq, PowerSum), "power.li_yau needs a PowerSum equation")
    _require(all(a >= 0 for a, _ in eq.terms), "power.li_yau: needs all coefficients a_i >= 0")
    _require(all(p <= 1 for _, p in eq.terms), "power.li_yau: needs all exponents p_i <= 1")
    exps = [p for _, p in eq.terms]
    top = exps[-1] if exps[-1] < 1 or len(exps) == 1 else exps[-2]
    alpha0 = 1 / top if 0 < top < 1 else math.inf
    m, K = params.m, params.K
    meta = {"m": m, "K": K, "alpha": alpha, "alpha0": alpha0}
    if alpha == 1:
        _require(K == 0, "power.li_yau: alpha = 1 needs K = 0")
        half = (m / 2) * INV_T
        return CandidateFunctions(name="power.li_yau", gamma=ONE, alpha=ONE, phi=half, beta=T, c=half,
                                  param_meta=meta)
    _require(alpha <= alpha0, f"power.li_yau: alpha must lie in (1, alpha0] = (1, {alpha0}], got {alpha}")
    return _with(_li_yau("power.li_yau", m, K, alpha), param_meta=meta)


# --- tabulated candidates ----------------------------------------------------

def tabulated_candidate(name: str, samples) -> CandidateFunctions:
    """Monotone cubic (PCHIP) interpolation of sampled ``(t, γ, α, φ, β, c)`` rows."""
    from scipy.interpolate import PchipInterpolator

    arr = np.asarray(samples, dtype=float)
    _require(arr.ndim == 2 and arr.shape[1] == 6, "samples must be rows of (t, gamma, alpha, phi, beta, c)")
    _require(arr.shape[0] >= 4, f"tabulated candidate needs at least 4 samples, got {arr.shape[0]}")
    t = arr[:, 0]
    _require(bool(np.all(np.diff(t) > 0)), "sample times must be strictly increasing")

    def wrap(col):
        ip = PchipInterpolator(t, arr[:, col], extrapolate=False)
        dip = ip.derivative()
        return TimeFunction(lambda s: (ip(s), dip(s)))

    return CandidateFunctions(
        name=name, gamma=wrap(1), alpha=wrap(2), phi=wrap(3), beta=wrap(4), c=wrap(5),
        t_domain=(float(t[0]), float(t[-1])), tabulated=True, param_meta={"samples": int(arr.shape[0])},
    )


# --- catalog registry ----------------------------------------------------------

@dataclass(frozen=True)
class CatalogEntry:
    """How to build and check one catalog id.

    ``equation`` builds the matching equation from the merged parameters;
    ``system`` and ``branches`` are the designated verification target.
    """

    id: str
    build: Callable[..., CandidateFunctions]
    equation: Callable[[dict], EquationSpec]
    system: str
    branches: tuple
    defaults: dict
    note: str = ""


def _heat_eq(_):
    return Linear(0.0)


def _log_eq(prm):
    return Logarithmic(prm["a"])


def _yam_eq(prm):
    return PowerSum.yamabe(prm.get("a", 0.0), prm["b"], prm["p"])


def _cp(prm):
    return CurvatureParams(m=prm["m"], K=prm.get("K", 0.0), n=int(prm.get("n", 1)))


CATALOG: dict = {}


def _reg(id, build, equation, system, branches, defaults, note=""):
    CATALOG[id] = CatalogEntry(id, build, equation, system, tuple(branches), dict(defaults), note)


for _kind, _id, _br, _d in (
    ("LiYauDavies", "heat.li_yau", ("I",), {"m": 4.0, "K": 0.5, "alpha": 2.0}),
    ("LiXu", "heat.li_xu", ("II", "III"), {"m": 4.0, "K": 1.0}),
    ("LinearLiXu", "heat.linear_li_xu", ("II", "III"), {"m": 4.0, "K": 1.0}),
    ("Hamilton", "heat.hamilton", ("I",), {"m": 4.0, "K": 0.5, "delta": 0.5}),
):
    _reg(_id, lambda prm, _k=_kind: make_heat_family(_k, _cp(prm), alpha=prm.get("alpha", 2.0),
                                                     delta=prm.get("delta", 0.5)),
         _heat_eq, "A3", _br, _d)

_LOG_TABLE = (
    ("LiYauCase1a", "log.li_yau_case1a", ("I",), {"m": 4.0, "K": 0.5, "a": 1.0, "alpha": 2.0}),
    ("LiYauCase1b", "log.li_yau_case1b", ("I",), {"m": 4.0, "K": 2.0, "a": 1.0, "alpha": 2.0}),
    ("LiYauCase2", "log.li_yau_case2", ("I",), {"m": 4.0, "K": 0.5, "a": -1.0, "alpha": 2.0}),
    ("LiXuPos", "log.li_xu_pos", ("II", "III"), {"m": 4.0, "K": 1.0, "a": 1.0}),
    ("LiXuPosAlt", "log.li_xu_pos_alt", ("II", "III"), {"m": 4.0, "K": 1.0, "a": 1.0}),
    ("LiXuNeg", "log.li_xu_neg", ("II", "III"), {"m": 4.0, "K": 1.0, "a": -1.0}),
    ("LiXuNegAlt", "log.li_xu_neg_alt", ("II", "III"), {"m": 4.0, "K": 1.0, "a": -0.5}),
    ("LinearLiXuPos", "log.linear_li_xu_pos", ("II", "III"), {"m": 4.0, "K": 1.0, "a": 1.0}),
    ("LinearLiXuNeg", "log.linear_li_xu_neg", ("II", "III"), {"m": 4.0, "K": 1.0, "a": -1.0}),
    ("HamiltonPos", "log.hamilton_pos", ("I",), {"m": 4.0, "K": 0.5, "a": 1.0, "delta": 0.5}),
    ("HamiltonNeg", "log.hamilton_neg", ("I",), {"m": 4.0, "K": 0.5, "a": -1.0, "delta": 0.5}),
    ("ExtraPos", "log.extra_pos", ("II", "III"), {"m": 4.0, "K": 1.0, "a": 1.0}),
    ("ExtraNeg", "log.extra_neg", ("II", "III"), {"m": 4.0, "K": 1.0, "a": -1.0}),
    ("SharpPosComplete", "log.sharp_pos_complete", ("I",), {"m": 1.0, "K": 0.0, "a": 1.0, "alpha": 1.1}),
    ("SharpNegFamily", "log.sharp_neg_family", ("I",), {"m": 1.0, "K": 0.0, "a": -1.0, "eps": 1e-3}),
)

for _kind, _id, _br, _d in _LOG_TABLE:
    _reg(_id, lambda prm, _k=_kind: make_log_family(_k, _cp(prm), prm["a"], alpha=prm.get("alpha", 2.0),
                                                    delta=prm.get("delta", 0.5), eps=prm.get("eps")),
         _log_eq, "A3", _br, _d)

_reg("log.sharp_compact", lambda prm: sharp_compact(prm["m"], prm["a"]), _log_eq, "A2", (),
     {"m": 1.0, "K": 0.0, "a": 1.0})

_YAM_TABLE = (
    # case, defaults (b, p, M), {kind: branches}
    ("1.1", {"b": 1.0, "p": 2.0, "M": 1.0}, {"li_yau": ("I",), "li_xu": ("II", "III"),
                                             "linear_li_xu": ("II", "III"), "hamilton": ("I",)}),
    ("1.2", {"b": -1.0, "p": 0.5, "M": 1.0}, {"li_yau": ("I",), "li_xu": ("II", "III"),
                                              "linear_li_xu": ("II", "III"), "hamilton": ("I",)}),
    ("1.3", {"b": -1.0, "p": -1.0, "M": 1.0}, {"li_yau": ("I",), "li_xu": ("II",),
                                               "linear_li_xu": ("I",), "hamilton": ("I",)}),
    ("2.1", {"b": 1.0, "p": -1.0, "M": 0.0}, {"li_yau": ("I",), "li_xu": ("II", "III"),
                                              "linear_li_xu": ("II", "III"), "hamilton": ("I",)}),
    ("2.2", {"b": 1.0, "p": 0.75, "M": 0.0}, {"li_yau": ("I",), "li_xu": ("II", "III"),
                                              "linear_li_xu": ("II", "III"), "hamilton": ("I",)}),
    ("2.3", {"b": -1.0, "p": 1.5, "M": 1.0}, {"li_yau": ("I",), "li_xu": ("II", "III"),
                                              "linear_li_xu": ("II", "III"), "hamilton": ("I",)}),
)

for _case, _bp, _kinds in _YAM_TABLE:
    for _kind, _br in _kinds.items():
        _d = {"m": 4.0, "K": 1.0, "a": 0.0, "alpha": 1.5, "delta": 0.5, **_bp}
        if _case == "1.1" and _kind == "li_yau":
            _d["alpha"] = 2.0
        if _case == "2.2" and _kind == "hamilton":
            _d["delta"] = 0.9
        if _case == "2.2" and _kind == "li_yau":
            _d["alpha"] = 1.25
        _suffix = ".k_scaled" if _case == "1.2" and _kind != "hamilton" else ""
        _id = f"yamabe.case{_case.replace('.', '_')}.{_kind}{_suffix}"
        _reg(_id, lambda prm, _k=_kind, _c=_case: make_yamabe_family(
            _k, _cp(prm), prm.get("a", 0.0), prm["b"], prm["p"], prm.get("M", 0.0), case=_c,
            alpha=prm.get("alpha", 1.5), delta=prm.get("delta", 0.5), k=prm.get("k")),
            _yam_eq, "A3", _br, _d)

# short alias used in docs and configs
CATALOG["yamabe.case1_2.k_scaled"] = CATALOG["yamabe.case1_2.li_yau.k_scaled"]

def _power_eq(prm):
    return PowerSum(tuple(tuple(t) for t in prm["terms"]))


_reg("power.li_yau", lambda prm: power_li_yau(_cp(prm), _power_eq(prm), prm.get("alpha", 1.5)),
     _power_eq, "A3", ("I",), {"m": 3.0, "K": 0.0, "terms": [[1.0, 0.5]], "alpha": 1.5})
_reg("power.li_yau_compact", lambda prm: power_li_yau(_cp(prm), _power_eq(prm), 1.0),
     _power_eq, "A2", (), {"m": 3.0, "K": 0.0, "terms": [[1.0, 0.5]]})


def catalog_ids() -> list:
    return sorted(CATALOG)


def build_catalog(id: str, overrides: Optional[dict] = None):
    """Return ``(candidate, equation, params, entry)`` for a catalog id."""
    if id not in CATALOG:
        raise CandidateError(f"unknown catalog id {id!r}")
    entry = CATALOG[id]
    prm = dict(entry.defaults, **(overrides or {}))
    return entry.build(prm), entry.equation(prm), _cp(prm), entry
