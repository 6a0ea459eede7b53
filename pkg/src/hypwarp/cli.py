"""Command-line entry point: ``hypwarp <subcommand> [flags]``.

Every run writes one JSON report (stdout by default) holding the resolved
config, the seed and the result.  Wall-clock data lives only under the
``timestamp`` key so reports are reproducible byte for byte without it.

Exit codes: 0 pass, 1 verification failure, 2 usage error, 3 numeric failure.
"""

from __future__ import annotations

import argparse
import csv
import datetime as _dt
import json
import math
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from contextlib import contextmanager
from dataclasses import dataclass

import numpy as np

from . import __version__
from . import constants as K
from .errors import (CenterOutOfRange, ConfigParse, HypothesisViolated, HypwarpError, InputOutOfRange, NotBounded,
                     RadiusTooSmall)

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2, 3
THREADS_ENV = "HYPWARP_THREADS"


def _float_list(text) -> list[float]:
    if isinstance(text, (list, tuple)):
        return [float(v) for v in text]
    return [float(v) for v in str(text).split(",") if v.strip()]


def _region(text) -> tuple[float, float]:
    vals = _float_list(text)
    if len(vals) != 2 or not vals[0] < vals[1]:
        raise ValueError("expected t0,t1 with t0 < t1")
    return vals[0], vals[1]


def _metric_spec(text) -> str:
    from .metric_model import parse_metric_spec

    parse_metric_spec(str(text))
    return str(text)


def _bool(v) -> bool:
    if isinstance(v, bool):
        return v
    s = str(v).strip().lower()
    if s in {"1", "true", "yes", "on"}:
        return True
    if s in {"0", "false", "no", "off"}:
        return False
    raise ValueError(f"not a boolean: {v!r}")


@dataclass(frozen=True)
class Opt:
    type: object
    default: object
    help: str
    flag: bool = False


COMMON = {
    "seed": Opt(int, 0, "random seed"),
    "out": Opt(str, None, "JSON report path (default stdout)"),
    "csv": Opt(str, None, "CSV data path"),
    "per_axis": Opt(int, None, "grid points per space axis"),
    "nt": Opt(int, None, "grid points in t"),
    "fd_step": Opt(float, None, "use central differences with this step instead of analytic derivatives"),
}

METRIC = {"metric": Opt(_metric_spec, "ellipsoid:1,1,2", "metric spec: round, ellipsoid:1,1,2, bumpy:0.2,3")}

COMMANDS = {
    "constants": {
        "n": Opt(int, 2, "sphere dimension n"),
        "c": Opt(float, 2.0, "boundedness constant c > 1"),
        "xi": Opt(float, 0.0, "block half-length offset xi >= 0"),
        "eps": Opt(float, 0.0, "slowness eps >= 0"),
        "t0": Opt(float, 1.0, "center t0 > 0"),
        "eps_g": Opt(float, None, "slowness of the segment family (default A(n, c))"),
        "c_sphere": Opt(float, None, "bound for the round metric (default built-in)"),
    },
    "bounded": {**METRIC, "c": Opt(float, None, "also test c-boundedness against this c")},
    "slowness": {
        **METRIC,
        "a": Opt(float, 6.0, "deformation start a"),
        "d": Opt(float, 16.0, "deformation width d"),
        "family": Opt(str, "deform", "deform (rho_{a,d} interpolation) or segment (s in [0, 1])"),
        "c": Opt(float, None, "boundedness constant (default: grid certificate)"),
        "t_range": Opt(_region, None, "t range as t0,t1"),
    },
    "verify-chart": {
        **METRIC,
        "t0": Opt(_float_list, [3.0, 5.0, 8.0], "comma-separated centers t0"),
        "xi": Opt(float, 0.0, "block offset xi"),
        "warp": Opt(str, "exp", "exp or sinh"),
        "c": Opt(float, None, "boundedness constant (default: 1.01 x grid certificate)"),
        "points": Opt(int, 4, "sphere points per t0"),
        "eps_hat": Opt(float, 0.0, "slowness of the family in the bound (0 for a constant family)"),
    },
    "deform": {
        **METRIC,
        "a": Opt(float, 6.0, "deformation start a"),
        "d": Opt(float, 16.0, "deformation width d"),
        "verify_ball_close": Opt(_bool, False, "run the (B_a, eps)-closeness verdict", flag=True),
        "eps": Opt(float, 0.5, "closeness eps"),
        "xi": Opt(float, 0.0, "block offset xi"),
        "c": Opt(float, None, "family bound (default c_g + c_sphere)"),
        "samples": Opt(int, 1000, "curvature samples in the core"),
    },
    "curvature": {
        **METRIC,
        "region": Opt(_region, (1.0, 10.0), "t region as t0,t1"),
        "planes": Opt(int, 1, "random planes per point"),
        "samples": Opt(int, 200, "sample points"),
        "warp": Opt(str, "sinh", "exp or sinh"),
        "a": Opt(float, None, "deform with this a (needs --d)"),
        "d": Opt(float, None, "deform with this d"),
        "eps": Opt(float, 1e-6, "pinching tolerance for the pass flag"),
        "bins": Opt(int, 20, "histogram bins"),
    },
    "suite": {
        "only": Opt(lambda v: [int(x) for x in _float_list(v)], None, "comma-separated criterion numbers"),
    },
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hypwarp", description="Warped-metric deformation verifier.")
    parser.add_argument("--version", action="version", version=f"hypwarp {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, opts in COMMANDS.items():
        p = sub.add_parser(name)
        p.add_argument("--config", default=None, help="JSON or key = value config file; flags win")
        for key, opt in {**COMMON, **opts}.items():
            flag = "--" + key.replace("_", "-")
            if opt.flag:
                p.add_argument(flag, dest=key, action="store_const", const=True, default=None, help=opt.help)
            else:
                p.add_argument(flag, dest=key, type=str, default=None, help=opt.help)
    return parser


def read_config(path: str) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigParse(f"cannot read config file: {exc}", key="config") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError:
        data = {}
        for lineno, line in enumerate(text.splitlines(), start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, value = line.partition("=")
            if not sep:
                raise ConfigParse(f"line {lineno} is not key = value", key=line)
            data[key.strip()] = value.strip()
    if not isinstance(data, dict):
        raise ConfigParse("config must be a JSON object", key="config")
    return data


def resolve(command: str, args: argparse.Namespace) -> dict:
    """Merge defaults, config file and flags (flags win), converting every value."""
    opts = {**COMMON, **COMMANDS[command]}
    raw = {}
    if args.config:
        for key, value in read_config(args.config).items():
            norm = key.replace("-", "_")
            if norm not in opts:
                raise ConfigParse(f"unknown config key {key!r} for {command}", key=key)
            raw[norm] = value
    for key in opts:
        value = getattr(args, key, None)
        if value is not None:
            raw[key] = value
    cfg = {}
    for key, opt in opts.items():
        if key in raw and raw[key] is not None:
            try:
                val = opt.type(raw[key])
            except (TypeError, ValueError) as exc:
                raise ConfigParse(f"bad value for {key}: {raw[key]!r} ({exc})", key=key) from exc
        else:
            val = opt.default
        cfg[key] = list(val) if isinstance(val, tuple) else val
    for key in ("warp",):
        if key in cfg and cfg[key] not in {"exp", "sinh"}:
            raise ConfigParse(f"{key} must be exp or sinh, got {cfg[key]!r}", key=key)
    if command == "slowness" and cfg["family"] not in {"deform", "segment"}:
        raise ConfigParse(f"family must be deform or segment, got {cfg['family']!r}", key="family")
    return cfg


def thread_count() -> int:
    raw = os.environ.get(THREADS_ENV, "1")
    try:
        k = int(raw)
    except ValueError as exc:
        raise ConfigParse(f"{THREADS_ENV} must be an integer, got {raw!r}", key=THREADS_ENV) from exc
    if k < 1:
        raise ConfigParse(f"{THREADS_ENV} must be positive, got {k}", key=THREADS_ENV)
    return k


@contextmanager
def worker_pool():
    """A thread pool capped by HYPWARP_THREADS, or None for serial runs; map keeps input order."""
    k = thread_count()
    if k == 1:
        yield None
        return
    with ThreadPoolExecutor(max_workers=k) as pool:
        yield pool


# ---------------------------------------------------------------------------
# helpers shared by the subcommands


def _grid_kwargs(cfg, per_axis_default, nt_default=None) -> dict:
    out = {"per_axis": cfg["per_axis"] or per_axis_default}
    if nt_default is not None:
        out["nt"] = cfg["nt"] or nt_default
    return out


def _metric(cfg):
    from .metric_model import builtin_metric, make_sphere_atlas

    g = builtin_metric(cfg["metric"], make_sphere_atlas(2))
    return g.with_fd(cfg["fd_step"]) if cfg["fd_step"] else g


def _round(g):
    from .metric_model import builtin_metric

    return builtin_metric("round", g.atlas)


def _certified(g, per_axis=17) -> float:
    from .regularity import check_bounded

    return 1.01 * check_bounded(g, per_axis=per_axis).c_hat


def _write_csv(path, header, rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else str(v)
    return obj


# ---------------------------------------------------------------------------
# subcommands: each returns (passed, result, extra timestamp data)


def cmd_constants(cfg):
    led = K.ledger(cfg["n"], cfg["c"], cfg["xi"], cfg["eps"], cfg["t0"], cfg["eps_g"], cfg["c_sphere"])
    return True, led.to_dict(), {}


def cmd_bounded(cfg):
    from .regularity import check_bounded

    g = _metric(cfg)
    rep = check_bounded(g, **_grid_kwargs(cfg, 17)).to_dict()
    ok = True
    if cfg["c"] is not None:
        ok = rep["c_hat"] < cfg["c"]
        rep["c"] = cfg["c"]
        rep["pass"] = ok
    if cfg["csv"]:
        _write_csv(cfg["csv"], ["chart", "sup_c2", "inf_det", "c"],
                   [[r["chart"], r["sup_c2"], r["inf_det"], r["c"]] for r in rep["per_chart"]])
    return ok, rep, {}


def cmd_slowness(cfg):
    from .regularity import measure_slowness
    from .warp_deform import DeformationParams, deformation_family, segment_family

    g = _metric(cfg)
    if cfg["family"] == "deform":
        params = DeformationParams(cfg["a"], cfg["d"])
        fam = deformation_family(g, params)
        t_range = cfg["t_range"] or [params.a, params.outer]
    else:
        fam = segment_family(g)
        t_range = cfg["t_range"] or [0.0, 1.0]
    rep = measure_slowness(fam, c=cfg["c"], t_range=tuple(t_range), seed=cfg["seed"], **_grid_kwargs(cfg, 9, 17))
    if cfg["csv"]:
        _write_csv(cfg["csv"], ["quantity", "value"],
                   [[k, getattr(rep, k)] for k in ("eps1", "eps2", "eps3", "direct_eps", "direct_i", "direct_ii")])
    return True, rep.to_dict(), {}


def cmd_verify_chart(cfg):
    from .chart_builder import eta_bound_check
    from .hyperbolic_model import ModelBlock
    from .metric_model import ConstantFamily
    from .warp_deform import sphere_centers

    g = _metric(cfg)
    c = cfg["c"] or _certified(g)
    block = ModelBlock(2, cfg["xi"], **{k: v for k, v in
                                        (("per_axis", cfg["per_axis"]), ("nt", cfg["nt"])) if v})
    centers = [(p, t0) for t0 in cfg["t0"] for p in sphere_centers(2, cfg["points"], cfg["seed"])]
    with worker_pool() as pool:
        rep = eta_bound_check(ConstantFamily(g), c, cfg["xi"], centers, warp=cfg["warp"],
                              eps_hat=cfg["eps_hat"], block=block, executor=pool)
    rep["c"] = c
    per_t0 = {}
    for row in rep["centers"]:
        per_t0[row["t0"]] = max(per_t0.get(row["t0"], 0.0), row["deviation"])
    rep["measured_eta_by_t0"] = [[t, v] for t, v in sorted(per_t0.items())]
    if cfg["csv"]:
        _write_csv(cfg["csv"], ["t0", "measured_eta"], rep["measured_eta_by_t0"])
    return rep["pass"], rep, {}


def cmd_deform(cfg):
    from .curvature import pinching_report
    from .hyperbolic_model import ModelBlock, hyperbolic_threshold
    from .warp_deform import DeformationParams, ball_close_verdict, deform

    g = _metric(cfg)
    params = DeformationParams(cfg["a"], cfg["d"])
    h = deform(g, params)
    core = pinching_report(h, (0.5, params.a), 1e-6, samples=cfg["samples"], seed=cfg["seed"])
    result = {"a": params.a, "d": params.d, "outer": params.outer, "metric": g.name,
              "core_curvature": {k: core[k] for k in ("sup_abs_K_plus_1", "eps", "pass", "samples", "t_range",
                                                      "attained_at", "histogram")}}
    ok = core["pass"]
    if cfg["verify_ball_close"]:
        c = cfg["c"] or _certified(g) + K.sphere_bound(2)
        radius = hyperbolic_threshold(cfg["eps"], 3, cfg["xi"])
        radius_ok = bool(params.a > radius + 1.0 + cfg["xi"])
        block = ModelBlock(2, cfg["xi"], **{k: v for k, v in
                                            (("per_axis", cfg["per_axis"]), ("nt", cfg["nt"])) if v})
        with worker_pool() as pool:
            v = ball_close_verdict(h, params.a, cfg["eps"], cfg["xi"], c, check_radius=False, seed=cfg["seed"],
                                   block=block, executor=pool)
        v["radius_ok"] = radius_ok
        v["verdict"] = bool(v["verdict"] and radius_ok)
        result["ball_close"] = v
        ok = ok and v["verdict"]
    if cfg["csv"]:
        _write_csv(cfg["csv"], ["t", "abs_K_plus_1"], zip(core["series"]["t"], core["series"]["abs_K_plus_1"]))
    return ok, result, {}


def cmd_curvature(cfg):
    from .curvature import pinching_report
    from .metric_model import ConstantFamily, VariableMetric
    from .warp_deform import DeformationParams, deform

    g = _metric(cfg)
    if (cfg["a"] is None) != (cfg["d"] is None):
        raise ConfigParse("a and d must be given together", key="a" if cfg["a"] is None else "d")
    if cfg["a"] is not None:
        h = deform(g, DeformationParams(cfg["a"], cfg["d"]))
    else:
        h = VariableMetric(ConstantFamily(g), cfg["warp"])
    rep = pinching_report(h, tuple(cfg["region"]), cfg["eps"], samples=cfg["samples"], planes=cfg["planes"],
                          seed=cfg["seed"], bins=cfg["bins"])
    if cfg["csv"]:
        edges, counts = rep["histogram"]["edges"], rep["histogram"]["counts"]
        _write_csv(cfg["csv"], ["bin_lo", "bin_hi", "count"], zip(edges[:-1], edges[1:], counts))
    summary = {k: v for k, v in rep.items() if k != "series"}
    summary["warp"] = h.warp
    return rep["pass"], summary, {}


def cmd_suite(cfg):
    from .acceptance import run_suite, suite_report

    results = run_suite(seed=cfg["seed"], only=cfg["only"])
    rep = suite_report(results)
    runtimes = rep.pop("runtimes")
    if cfg["csv"]:
        _write_csv(cfg["csv"], ["criterion", "pass"], [[r.number, int(r.passed)] for r in results])
    for r in results:
        print(r.line(), file=sys.stderr)
    return rep["all_pass"], rep, {"runtimes": runtimes}


HANDLERS = {
    "constants": cmd_constants, "bounded": cmd_bounded, "slowness": cmd_slowness,
    "verify-chart": cmd_verify_chart, "deform": cmd_deform, "curvature": cmd_curvature, "suite": cmd_suite,
}

USAGE_ERRORS = (ConfigParse, InputOutOfRange, CenterOutOfRange, RadiusTooSmall, HypothesisViolated, NotBounded)


def render(report: dict) -> str:
    return json.dumps(_jsonable(report), sort_keys=True, indent=2) + "\n"


def run(command: str, cfg: dict) -> tuple[int, dict]:
    """Execute one subcommand on a resolved config and return ``(exit code, report)``."""
    started = _dt.datetime.now(_dt.timezone.utc).isoformat()
    tic = time.perf_counter()
    passed, result, stamp = HANDLERS[command](cfg)
    report = {
        "command": command,
        "version": __version__,
        "config": cfg,
        "seed": cfg["seed"],
        "pass": bool(passed),
        "result": result,
        "timestamp": {"started": started, "elapsed_s": time.perf_counter() - tic, **stamp},
    }
    return (EXIT_OK if passed else EXIT_FAIL), report


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code else EXIT_OK
    try:
        cfg = resolve(args.command, args)
        thread_count()
        code, report = run(args.command, cfg)
    except USAGE_ERRORS as exc:
        key = getattr(exc, "key", "")
        print(f"hypwarp: usage error{f' [{key}]' if key else ''}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (HypwarpError, ArithmeticError) as exc:
        loc = getattr(exc, "location", None)
        print(f"hypwarp: numeric failure: {type(exc).__name__}: {exc}"
              f"{f' at {loc}' if loc else ''}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"hypwarp: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    text = render(report)
    if cfg["out"]:
        with open(cfg["out"], "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
