"""``harnackcheck`` command line.

Every command reads one JSON config, writes ``report.json`` (plus CSVs or
field dumps) into ``--out`` and a separate ``metadata.json`` carrying the
timestamp, so reports are byte-identical for identical config and seed.

Exit codes: 0 pass, 1 violation, 2 usage or config error, 3 inconclusive.
"""

from __future__ import annotations

import argparse
import datetime as _dt
import json
import math
import os
import sys

import numpy as np

from harnackcheck import __version__

EXIT_PASS, EXIT_FAIL, EXIT_USAGE, EXIT_INCONCLUSIVE = 0, 1, 2, 3


class ConfigError(ValueError):
    pass


def _clean(x):
    """JSON-safe copy: numpy scalars to Python, non-finite floats to strings."""
    if isinstance(x, dict):
        return {str(k): _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if isinstance(x, np.ndarray):
        return [_clean(v) for v in x.tolist()]
    if isinstance(x, (np.bool_, bool)):
        return bool(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    return x


def _write_json(path, obj):
    with open(path, "w") as fh:
        json.dump(_clean(obj), fh, indent=2, sort_keys=True)
        fh.write("\n")


def _t_grid(spec):
    from harnackcheck.system_checker import default_t_grid

    if spec is None:
        return default_t_grid()
    if isinstance(spec, dict):
        lo, hi, n = float(spec["min"]), float(spec["max"]), int(spec["n"])
        if spec.get("spacing", "log") == "log":
            return np.logspace(math.log10(lo), math.log10(hi), n)
        return np.linspace(lo, hi, n)
    return np.asarray(spec, dtype=float)


def _f_grid(spec):
    from harnackcheck.system_checker import default_f_grid

    if spec is None:
        return default_f_grid()
    if isinstance(spec, dict):
        return np.linspace(float(spec["min"]), float(spec["max"]), int(spec["n"]))
    return np.asarray(spec, dtype=float)


# --- commands ---------------------------------------------------------------------------

def cmd_verify_system(cfg: dict, out: str, seed: int) -> tuple:
    from harnackcheck.candidates import CATALOG, build_catalog
    from harnackcheck.system_checker import check_system

    cid = cfg.get("candidate")
    if not isinstance(cid, str):
        raise ConfigError("verify-system needs a string 'candidate' id")
    if cid not in CATALOG:
        raise ConfigError(f"unknown catalog id {cid!r}")
    cand, eq, params, entry = build_catalog(cid, cfg.get("params"))
    system = cfg.get("system", entry.system)
    branches = cfg.get("branches") or ([cfg["branch"]] if cfg.get("branch") else list(entry.branches) or [None])
    reports = []
    for br in branches:
        rep = check_system(cand, eq, params, system, br, t_grid=_t_grid(cfg.get("t_grid")),
                           f_grid=_f_grid(cfg.get("f_grid")), eps=cfg.get("eps"))
        reports.append(rep)
        tag = f"_{br}" if br else ""
        rep.write_margin_csv(os.path.join(out, f"margins{tag}.csv"))
    verdicts = [r.verdict for r in reports]
    verdict = "fail" if "fail" in verdicts else ("inconclusive" if "inconclusive" in verdicts else "pass")
    body = {"command": "verify-system", "verdict": verdict, "reports": [r.to_dict() for r in reports]}
    return body, verdict


def cmd_simulate(cfg: dict, out: str, seed: int) -> tuple:
    from harnackcheck import pde_lab as P
    from harnackcheck.candidates import CATALOG, build_catalog
    from harnackcheck.equations import CurvatureParams, Logarithmic, equation_from_dict

    eq = equation_from_dict(cfg.get("equation", {"kind": "linear", "p": 0.0}))
    pr = cfg.get("params", {})
    params = CurvatureParams(float(pr.get("m", 1.0)), float(pr.get("K", 0.0)), int(pr.get("n", 1)))
    gs = cfg.get("grid", {})
    grid = P.GridSpec(int(gs.get("dim", 1)), tuple(gs.get("extent", [2 * math.pi])),
                      tuple(gs.get("points", [128])), gs.get("boundary", "periodic"))
    if params.n != grid.dim:
        raise ConfigError("params.n must equal the grid dimension on a flat grid")
    u0_fn = P.initial_data(cfg.get("initial", {"kind": "cosine"}), grid, seed)
    t_end = float(cfg.get("t_end", 1.0))
    save = cfg.get("save_times") or [t_end * (k + 1) / 10 for k in range(10)]
    checks = cfg.get("checks", ["monotone"])
    results, statuses = {}, []

    coarse, fine = P.simulate_pair(eq, grid, u0_fn, save, t_end)
    results["snapshots"] = len(coarse)
    results["conservation_drift"] = P.conservation_drift(coarse)
    if cfg.get("dump", True):
        P.write_field_binary(coarse[-1], os.path.join(out, "final_field.bin"))
        P.write_field_csv(coarse[-1], os.path.join(out, "final_field.csv"))

    m = params.m
    for chk in checks:
        if chk == "harnack_F":
            cspec = cfg.get("candidate")
            if not isinstance(cspec, str) or cspec not in CATALOG:
                raise ConfigError(f"harnack_F needs a known catalog 'candidate', got {cspec!r}")
            cand = build_catalog(cspec, cfg.get("candidate_params"))[0]
            centers = cfg.get("centers") or [t_end / 4, t_end / 2, 3 * t_end / 4]
            rep = P.F_refinement(cand, eq, params, grid, u0_fn, centers, levels=int(cfg.get("levels", 2)))
            results["harnack_F"] = rep.to_dict()
            statuses.append(rep.passed)
        elif chk == "sharp_log":
            if not isinstance(eq, Logarithmic):
                raise ConfigError("sharp_log needs a logarithmic equation")
            est = P.pair_estimate(P.sharp_log_quantity(coarse, m, eq.a), P.sharp_log_quantity(fine, m, eq.a), grid)
            rep = P.sharp_log_sim_check(coarse, m, eq.a, 10 * est)
            results["sharp_log"] = rep.to_dict()
            statuses.append(rep.passed)
        elif chk == "liyau_power":
            est = P.pair_estimate(P.liyau_quantity(coarse, m), P.liyau_quantity(fine, m), grid)
            rep = P.liyau_power_check(coarse, m, eq, 10 * est)
            results["liyau_power"] = rep.to_dict()
            statuses.append(rep.passed)
        elif chk == "monotone":
            if isinstance(eq, Logarithmic):
                rep = P.monotone_checks(coarse, "F_log", m, eq.a)
            else:
                rep = P.monotone_checks(coarse, "t_pow_m_half_u", m)
            results["monotone"] = rep.to_dict()
            statuses.append(rep.passed)
        else:
            raise ConfigError(f"unknown simulate check {chk!r}")
    verdict = "pass" if all(statuses) else "fail"
    return {"command": "simulate", "verdict": verdict, "grid": grid.to_dict(), "results": results}, verdict


def cmd_sharpness(cfg: dict, out: str, seed: int) -> tuple:
    from harnackcheck import harnack as Hn
    from harnackcheck import pde_lab as P
    from harnackcheck.ode_lab import liouville_F_exact

    a = float(cfg.get("a", 1.0))
    n = int(cfg.get("n", 1))
    m = float(cfg.get("m", n))
    C = float(cfg.get("C", 0.0))
    samples = int(cfg.get("samples", 1000))
    if a == 0:
        raise ConfigError("sharpness needs a != 0")
    rng = np.random.default_rng(seed)
    x0 = np.asarray(cfg.get("x0", [0.0] * n), dtype=float)
    sol = P.ExactLogSolution(a, n, tuple(x0), C)
    xs = x0 + rng.uniform(-2, 2, size=(samples, n))
    ts = rng.uniform(0.05, 3.0, size=samples)
    res = float(np.max(np.abs([P.exact_log_residual(sol, x, t) for x, t in zip(xs, ts)])))
    sharp = P.sharp_log_check(sol, float(cfg.get("t", 1.0)))
    t1 = float(cfg.get("t1", math.log(2)))
    t2 = float(cfg.get("t2", math.log(4)))
    x1 = np.asarray(cfg.get("x1", [0.0] * n), dtype=float)
    x2 = np.asarray(cfg.get("x2", [1.0] * n), dtype=float)
    eqr = Hn.verify_sharp_harnack(a, n, t1, t2, x1, x2)
    pert = Hn.verify_sharp_harnack(a, n, t1, t2, x1, x2, x0=np.asarray(eqr.x0) + 0.5)
    tt = np.linspace(0.1, 3.0, 30)
    Fc = np.array([liouville_F_exact(sol, n, x0, t) for t in tt])
    liou = float(np.max(np.abs(Fc - C)))
    results = {
        "exact_residual_max": res,
        "sharp_equality": sharp.to_dict(),
        "sharp_harnack_equality": eqr.to_dict(),
        "sharp_harnack_perturbed": pert.to_dict(),
        "liouville_F_at_center_max_dev": liou,
        "m": m,
    }
    ok = (res <= 1e-10 and sharp.passed and eqr.passed and pert.passed and pert.slack > 0 and liou <= 1e-10)
    verdict = "pass" if ok else "fail"
    return {"command": "sharpness", "verdict": verdict, "results": results}, verdict


def cmd_eps_sweep(cfg: dict, out: str, seed: int) -> tuple:
    from harnackcheck import ode_lab as O
    from harnackcheck.candidates import sharp_neg_family
    from harnackcheck.equations import CurvatureParams, Logarithmic
    from harnackcheck.system_checker import check_system

    a = float(cfg.get("a", -1.0))
    eps_list = [float(e) for e in cfg.get("eps", [0.2, 0.1, 0.05])]
    if any(e <= 0 for e in eps_list):
        raise ConfigError("eps values must be positive")
    if not a < 0:
        raise ConfigError("eps-sweep needs a < 0")
    m = float(cfg.get("m", 1.0))
    t_max = float(cfg.get("t_max", 100.0))
    curve = O.a_eps_curve(a, eps_list, t_max=t_max)
    O.write_a_eps_csv(curve, os.path.join(out, "a_eps.csv"))
    params = CurvatureParams(m, 0.0, 1)
    rows, statuses = [], []
    for eps in eps_list:
        l_obj = O.build_l(a, eps, t_max=t_max)
        cand = sharp_neg_family(m, a, l_obj, l_obj.t_end, eps)
        t_grid = np.logspace(-3, math.log10(l_obj.t_end), int(cfg.get("n_t", 200)))
        rep = check_system(cand, Logarithmic(a), params, "A3", "I", t_grid=t_grid, f_grid=_f_grid(cfg.get("f_grid")))
        c2 = O.continuation_bound(a, l_obj.traj)
        rows.append({"eps": eps, "window_end": l_obj.t_end, "A_eps": l_obj.A_eps, "verdict": rep.verdict,
                     "failing": rep.failing, "continuation_bound": c2})
        statuses.append(rep.verdict == "pass" and c2["holds"])
    by_eps = sorted(rows, key=lambda r: -r["eps"])
    windows_grow = all(b["window_end"] > a_["window_end"] for a_, b in zip(by_eps, by_eps[1:]))
    ok = all(statuses) and windows_grow and O.a_eps_monotone(curve)
    body = {"command": "eps-sweep", "a": a, "m": m, "windows": rows, "windows_increase": windows_grow,
            "a_eps": [{"eps": p.eps, "A_eps": p.A_eps, "capped": p.capped} for p in curve]}
    if cfg.get("simulate", True):
        trend = _eps_sup_F_trend(cfg, a, m, params, sorted(eps_list, reverse=True), t_max, seed)
        body["sup_F"] = trend
        ok = ok and trend["gap_shrinks"]
    verdict = "pass" if ok else "fail"
    body["verdict"] = verdict
    return body, verdict


def _eps_sup_F_trend(cfg, a, m, params, eps_desc, t_max, seed) -> dict:
    """``sup F`` of the ε-family on one simulated torus field against the sharp ``ε = 0`` quantity.

    The gap to the sharp value must shrink as ``ε`` decreases.
    """
    from harnackcheck import ode_lab as O
    from harnackcheck import pde_lab as P
    from harnackcheck.candidates import sharp_compact, sharp_neg_family
    from harnackcheck.equations import Logarithmic

    eq = Logarithmic(a)
    grid = P.GridSpec(1, (2 * math.pi,), (int(cfg.get("points", 64)),), "periodic")
    u0 = P.initial_data(cfg.get("initial", {"kind": "cosine"}), grid, seed)(grid.coords())
    centers = sorted(float(c) for c in cfg.get("centers", [0.5, 1.0, 2.0, 3.0]))
    tau = 8 * grid.max_dt()
    fields = P.simulate(eq, grid, u0, centers[-1] + tau, save_times=P.stencil_times(centers, tau))

    def sup(cand):
        return max(float(np.max(F)) for _, F in P.F_series(cand, eq, params, fields, centers))

    sharp = sup(sharp_compact(m, a))
    rows = []
    for eps in eps_desc:
        l_obj = O.build_l(a, eps, t_max=t_max)
        if centers[-1] >= l_obj.t_end:
            raise ConfigError(f"centre time {centers[-1]} lies beyond the eps={eps:g} window {l_obj.t_end:.6g}")
        val = sup(sharp_neg_family(m, a, l_obj, l_obj.t_end, eps))
        rows.append({"eps": eps, "sup_F": val, "gap": abs(val - sharp)})
    shrinks = all(b["gap"] < c["gap"] for c, b in zip(rows, rows[1:]))
    return {"sharp_sup_F": sharp, "centers": centers, "points": grid.points[0], "by_eps": rows,
            "gap_shrinks": shrinks}


COMMANDS = {
    "verify-system": cmd_verify_system,
    "simulate": cmd_simulate,
    "sharpness": cmd_sharpness,
    "eps-sweep": cmd_eps_sweep,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="harnackcheck", description=__doc__.splitlines()[0])
    p.add_argument("command", choices=sorted(COMMANDS))
    p.add_argument("--config", required=True, help="JSON config file")
    p.add_argument("--out", default=".", help="output directory")
    p.add_argument("--seed", type=int, default=0, help="seed for random sampling (u64)")
    p.add_argument("--quiet", action="store_true")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_USAGE if e.code else EXIT_PASS
    if not 0 <= args.seed < 2**64:
        print("error: --seed must be an unsigned 64-bit integer", file=sys.stderr)
        return EXIT_USAGE
    try:
        with open(args.config) as fh:
            cfg = json.load(fh)
        if not isinstance(cfg, dict):
            raise ConfigError("config must be a JSON object")
        os.makedirs(args.out, exist_ok=True)
        body, verdict = COMMANDS[args.command](cfg, args.out, args.seed)
    except (OSError, json.JSONDecodeError, ConfigError, KeyError, TypeError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except RuntimeError as e:
        # simulations that cannot keep u > 0 abort here with their diagnostic
        print(f"aborted: {e}", file=sys.stderr)
        return EXIT_USAGE
    body["config"] = cfg
    body["seed"] = args.seed
    body["version"] = __version__
    _write_json(os.path.join(args.out, "report.json"), body)
    _write_json(os.path.join(args.out, "metadata.json"),
                {"created": _dt.datetime.now(_dt.timezone.utc).isoformat(), "command": args.command,
                 "version": __version__})
    code = {"pass": EXIT_PASS, "fail": EXIT_FAIL, "inconclusive": EXIT_INCONCLUSIVE}[verdict]
    if not args.quiet:
        print(f"{args.command}: {verdict} (exit {code}); report in {os.path.join(args.out, 'report.json')}")
    return code


if __name__ == "__main__":
    sys.exit(main())
