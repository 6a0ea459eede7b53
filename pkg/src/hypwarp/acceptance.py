"""Acceptance criteria as callable checks.

Each ``criterion_k`` returns a :class:`CriterionResult` whose ``details`` are
deterministic for a fixed seed; wall-clock runtimes are kept apart in
``runtime`` so reports can exclude them from comparisons.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import mpmath as mp
import numpy as np

from . import constants as K
from .chart_builder import chart_for, pullback
from .curvature import pinching_report, sample_region, sectional_curvature_arrays
from .hyperbolic_model import ModelBlock, deviation
from .linalg_spd import quadratic_form_sandwich, spd_factor
from .metric_model import (ConstantFamily, ScaledFamily, VariableMetric, builtin_metric, constant_field,
                           linear_schedule, make_ball_atlas, make_sphere_atlas)
from .regularity import check_bounded, check_slow_implies_components, check_components_imply_slow, measure_slowness
from .warp_deform import (DeformationParams, ball_close_verdict, bump, deform, deformation_family,
                          k_bounds_check, sphere_centers)

ELLIPSOID = "ellipsoid:1,1,2"
BOUND_MARGIN = 1.01


@dataclass
class CriterionResult:
    number: int
    name: str
    passed: bool
    details: dict
    runtime: float = 0.0
    limit: float | None = None

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"[{status}] criterion {self.number:2d}: {self.name}"


@dataclass
class _Ctx:
    """Shared, lazily built geometry so repeated criteria do not recompile metrics."""

    cache: dict = field(default_factory=dict)

    def get(self, key, make):
        if key not in self.cache:
            self.cache[key] = make()
        return self.cache[key]


_CTX = _Ctx()


def _atlas():
    return _CTX.get("atlas", lambda: make_sphere_atlas(2))


def _metric(spec):
    return _CTX.get(("metric", spec), lambda: builtin_metric(spec, _atlas()))


def certified_c(spec: str) -> float:
    """Grid certificate of a built-in metric with a 1% margin."""
    return _CTX.get(("c", spec), lambda: BOUND_MARGIN * check_bounded(_metric(spec)).c_hat)


def _timed(fn):
    def wrapper(*args, **kwargs):
        start = time.perf_counter()
        res = fn(*args, **kwargs)
        res.runtime = time.perf_counter() - start
        if res.limit is not None and res.runtime >= res.limit:
            res.passed = False
            res.details["runtime_exceeded"] = True
        return res
    wrapper.__name__ = fn.__name__
    wrapper.__doc__ = fn.__doc__
    return wrapper


@_timed
def criterion_1(seed: int = 0) -> CriterionResult:
    """Curvature of the two hyperbolic warps is -1."""
    rng = np.random.default_rng(seed)
    sph = VariableMetric(ConstantFamily(_metric("round")), "sinh")
    ball = make_ball_atlas(2)
    flat = VariableMetric(ConstantFamily(constant_field(np.eye(2), ball, "flat")), "exp")
    charts, xs, ts = sample_region(sph.atlas, 200, (1.0, 10.0), rng)
    worst_s = 0.0
    for ch in np.unique(charts):
        sel = charts == ch
        K_, _, _ = sectional_curvature_arrays(sph, int(ch), xs[sel], ts[sel], planes=1, seed=seed + 1)
        worst_s = max(worst_s, float(np.abs(K_ + 1).max()))
    x = rng.uniform(-0.7, 0.7, (200, 2))
    t = rng.uniform(1.0, 10.0, 200)
    K_, _, _ = sectional_curvature_arrays(flat, 0, x, t, planes=1, seed=seed + 2)
    worst_f = float(np.abs(K_ + 1).max())
    return CriterionResult(1, "hyperbolic warps have K = -1", bool(max(worst_s, worst_f) < 1e-6),
                           {"sinh_sup_abs_K_plus_1": worst_s, "exp_sup_abs_K_plus_1": worst_f, "tol": 1e-6},
                           limit=5.0)


def _random_points(atlas, count, t_lo, t_hi, rng):
    charts, xs, ts = sample_region(atlas, count, (t_lo, t_hi), rng)
    return charts, xs, ts


def _jet_diff(h1, h2, charts, xs, ts) -> float:
    worst = 0.0
    for ch in np.unique(charts):
        sel = charts == ch
        a = h1.jet(xs[sel], ts[sel], int(ch))
        b = h2.jet(xs[sel], ts[sel], int(ch))
        for p, q in zip(a, b):
            scale = np.maximum(1.0, np.abs(q))
            worst = max(worst, float((np.abs(p - q) / scale).max()))
    return worst


@_timed
def criterion_2(seed: int = 0) -> CriterionResult:
    """T_{6,16}(ellipsoid) equals the hyperbolic warp for t < 6 and the target warp for t > 14."""
    rng = np.random.default_rng(seed)
    h = deform(_metric(ELLIPSOID), DeformationParams(6.0, 16.0))
    hyp = VariableMetric(ConstantFamily(_metric("round")), "sinh")
    tgt = VariableMetric(ConstantFamily(_metric(ELLIPSOID)), "sinh")
    inner = _jet_diff(h, hyp, *_random_points(h.atlas, 1000, 0.05, 6.0, rng))
    outer = _jet_diff(h, tgt, *_random_points(h.atlas, 1000, 14.0, 20.0, rng))
    return CriterionResult(2, "deformation is piecewise exact", bool(inner <= 1e-14 and outer <= 1e-14),
                           {"inner_max_rel_diff": inner, "outer_max_rel_diff": outer, "tol": 1e-14}, limit=5.0)


@_timed
def criterion_3(seed: int = 0) -> CriterionResult:
    """Hyperbolic core of the deformed ellipsoid."""
    h = deform(_metric(ELLIPSOID), DeformationParams(6.0, 16.0))
    rep = pinching_report(h, (0.5, 6.0), 1e-6, samples=1000, planes=1, seed=seed)
    return CriterionResult(3, "deformed ellipsoid is hyperbolic for t < a", rep["pass"],
                           {"sup_abs_K_plus_1": rep["sup_abs_K_plus_1"], "samples": rep["samples"],
                            "t_range": rep["t_range"], "tol": 1e-6})


def _worst_deviation(h, centers_t0, c, xi=0.0, count=4, seed=0):
    block = ModelBlock(h.family.dim, xi)
    pts = sphere_centers(h.family.dim, count, seed)
    out = []
    for t0 in centers_t0:
        out.append(max(deviation(pullback(h, chart_for(h, p, t0, c, xi)), block).c2_norm for p in pts))
    return out


@_timed
def criterion_4(seed: int = 0) -> CriterionResult:
    """Chart deviation of the constant round family decays like e^{-t0}."""
    h = VariableMetric(ConstantFamily(_metric("round")), "exp")
    t0s = list(range(3, 11))
    devs = _worst_deviation(h, t0s, 4.5, seed=seed)
    slope = float(np.polyfit(t0s, np.log(devs), 1)[0])
    return CriterionResult(4, "deviation decays like e^-t0", bool(-1.2 <= slope <= -0.8),
                           {"t0": t0s, "deviation": devs, "slope": slope, "c": 4.5, "window": [-1.2, -0.8]},
                           limit=60.0)


def _deformed_excess(d: float, a: float, c: float, seed: int) -> tuple[float, float, float]:
    """Worst chart deviation at the midpoint t0 = a + d/4 minus the round-metric floor there."""
    params = DeformationParams(a, d)
    t0 = a + d / 4.0
    h = deform(_metric(ELLIPSOID), params)
    hr = deform(_metric("round"), params)
    dev = np.array(_worst_deviation_each(h, t0, c, seed))
    floor = np.array(_worst_deviation_each(hr, t0, c, seed))
    k = int(np.argmax(dev - floor))
    return float((dev - floor)[k]), float(dev[k]), float(floor[k])


def _worst_deviation_each(h, t0, c, seed, count=6):
    block = ModelBlock(h.family.dim, 0.0)
    return [deviation(pullback(h, chart_for(h, p, t0, c, 0.0)), block).c2_norm
            for p in sphere_centers(h.family.dim, count, seed)]


@_timed
def criterion_5(seed: int = 0) -> CriterionResult:
    """Doubling d halves the slowness and the chart deviation beyond the floor."""
    a = 6.0
    c = certified_c(ELLIPSOID) + K.sphere_bound(2)
    slow, excess = {}, {}
    for d in (16.0, 32.0):
        fam = deformation_family(_metric(ELLIPSOID), DeformationParams(a, d))
        rep = measure_slowness(fam, t_grid=np.linspace(a, a + d / 2, 33), seed=seed)
        slow[d] = {"eps1": rep.eps1, "direct_eps": rep.direct_eps}
        ex, dev, floor = _deformed_excess(d, a, c, seed)
        excess[d] = {"t0": a + d / 4, "excess": ex, "deviation": dev, "floor": floor}
    r_slow = slow[32.0]["direct_eps"] / slow[16.0]["direct_eps"]
    r_eps1 = slow[32.0]["eps1"] / slow[16.0]["eps1"]
    r_dev = excess[32.0]["excess"] / excess[16.0]["excess"]
    ok = 0.4 <= r_slow <= 0.6 and 0.4 <= r_eps1 <= 0.6 and 0.35 <= r_dev <= 0.65
    return CriterionResult(5, "slowness and deviation scale like 1/d", bool(ok),
                           {"slowness": {str(k): v for k, v in slow.items()}, "ratio_direct_eps": r_slow,
                            "ratio_eps1": r_eps1, "deviation": {str(k): v for k, v in excess.items()},
                            "ratio_deviation_excess": r_dev})


def ledger_dominance(samples: int = 10_000, seed: int = 0) -> dict:
    """max{c9..c13} <= C (e^{-t0} + eps) over random valid inputs."""
    rng = np.random.default_rng(seed)
    worst = mp.mpf(0)
    fails = 0
    with mp.workdps(K.PRECISION):
        for _ in range(samples):
            n = int(rng.integers(2, 7))
            c = float(1.0 + 10 ** rng.uniform(-3, 2))
            xi = float(rng.uniform(0, 3))
            eps = float(0.0 if rng.random() < 0.1 else 10 ** rng.uniform(-8, 1))
            t0 = float(10 ** rng.uniform(-2, 1.5))
            lhs = K.max_deviation_bound(n, c, xi, eps, t0)
            rhs = K.big_c(n, c, xi) * (mp.exp(-t0) + eps)
            ratio = lhs / rhs
            worst = max(worst, ratio)
            fails += int(lhs > rhs)
    return {"samples": samples, "max_ratio": float(worst), "failures": fails, "pass": fails == 0}


@_timed
def criterion_6(seed: int = 0) -> CriterionResult:
    """Measured chart deviations never exceed the constant-times-(e^{-T} + eps) bound."""
    from .chart_builder import eta_bound_check

    rows = {}
    c_round = K.sphere_bound(2)
    fam_round = ConstantFamily(_metric("round"))
    centers = [(p, t0) for t0 in (3.0, 5.0, 8.0, 10.0) for p in sphere_centers(2, 3, seed)]
    rows["round_exp"] = eta_bound_check(fam_round, c_round, 0.0, centers, warp="exp", eps_hat=0.0)
    rows["round_sinh"] = eta_bound_check(fam_round, c_round, 0.0, centers, warp="sinh", eps_hat=0.0)
    c_def = certified_c(ELLIPSOID) + c_round
    for d in (16.0, 32.0):
        fam = deformation_family(_metric(ELLIPSOID), DeformationParams(6.0, d))
        cts = [(p, t0) for t0 in (6.0 + d / 8, 6.0 + d / 4, 6.0 + d / 2) for p in sphere_centers(2, 3, seed)]
        rows[f"ellipsoid_d{int(d)}_sinh"] = eta_bound_check(fam, c_def, 0.0, cts, warp="sinh",
                                                           slowness_kwargs={"seed": seed})
    dom = ledger_dominance(seed=seed)
    summary = {k: {key: v[key] for key in ("measured_eta", "bound_eta", "T", "eps_hat", "pass")} for k, v in rows.items()}
    ok = all(v["pass"] for v in rows.values()) and dom["pass"]
    return CriterionResult(6, "measured deviation below the explicit bound", bool(ok),
                           {"families": summary, "ledger_dominance": dom})


def random_bounded_spd(rng, n: int) -> tuple[np.ndarray, float]:
    """Random SPD matrix and a constant c satisfying the factorization hypotheses."""
    q, _ = np.linalg.qr(rng.standard_normal((n, n)))
    mu = 10 ** rng.uniform(-1.5, 1.0, n)
    G = (q * mu) @ q.T
    G = 0.5 * (G + G.T)
    need = max(float(np.abs(G).max()), 1.0 / float(np.linalg.det(G)), 1.0)
    return G, need * (1.0 + rng.uniform(1e-6, 1.0))


@_timed
def criterion_7(seed: int = 0, samples: int = 1000) -> CriterionResult:
    """Bounded factorization and quadratic-form sandwich on random SPD matrices."""
    rng = np.random.default_rng(seed)
    stats = {"reconstruction": 0.0, "entry_ratio": 0.0, "inverse_ratio": 0.0, "sandwich_ok": 0, "eigen_ok": 0}
    for _ in range(samples):
        n = int(rng.integers(2, 7))
        G, c = random_bounded_spd(rng, n)
        fac = spd_factor(G, c)
        stats["reconstruction"] = max(stats["reconstruction"],
                                      float(np.abs(fac.F.T @ fac.F - G).max() / np.abs(G).max()))
        stats["entry_ratio"] = max(stats["entry_ratio"], float(np.abs(fac.F).max() / fac.entry_bound))
        stats["inverse_ratio"] = max(stats["inverse_ratio"], float(np.abs(fac.F_inv).max() / fac.inverse_entry_bound))
        lo, hi = fac.eigen_window
        stats["eigen_ok"] += int(np.all((lo < fac.eigenvalues) & (fac.eigenvalues < hi)))
        lo_q, hi_q, val = quadratic_form_sandwich(G, c, rng.standard_normal(n))
        stats["sandwich_ok"] += int(lo_q < abs(val) < hi_q)
    ok = (stats["reconstruction"] < 1e-10 and stats["entry_ratio"] < 1 and stats["inverse_ratio"] < 1
          and stats["eigen_ok"] == samples and stats["sandwich_ok"] == samples)
    return CriterionResult(7, "bounded factorization suite", bool(ok), {"samples": samples, **stats})


@_timed
def criterion_8(seed: int = 0) -> CriterionResult:
    """Quintic bump knots and derivative sups, and the k bounds."""
    rho = bump()
    knots = {
        "rho(0)": float(rho.value(0.0)), "rho(1)": float(rho.value(1.0)), "rho(1/2)": float(rho.value(0.5)),
        "rho'(0)": float(rho.d1(0.0)), "rho'(1)": float(rho.d1(1.0)),
        "rho''(0)": float(rho.d2(0.0)), "rho''(1)": float(rho.d2(1.0)),
    }
    knots_ok = knots["rho(0)"] == 0 and knots["rho(1)"] == 1 and knots["rho(1/2)"] == 0.5 and all(
        knots[k] == 0 for k in knots if "'" in k)
    t = np.linspace(0.0, 1.0, 200_001)
    d1 = float(np.abs(rho.d1(t)).max())
    d2 = float(np.abs(rho.d2(t)).max())
    kb = k_bounds_check((1.0, 20.0), 10_000)
    ok = knots_ok and abs(d1 - 1.875) <= 1e-9 and abs(d2 - 5.7735) <= 1e-4 and kb["pass"]
    return CriterionResult(8, "bump and k bounds", bool(ok),
                           {"knots": knots, "sup_d1": d1, "sup_d2": d2, "k_bounds": kb})


def bridge_families():
    """Three built-in families used by the component/intrinsic consistency check."""
    atlas = _atlas()
    rnd = _metric("round")
    return {
        "ellipsoid_rho_6_16": (deformation_family(_metric(ELLIPSOID), DeformationParams(6.0, 16.0)), (6.0, 14.0)),
        "bumpy_rho_4_12": (deformation_family(_metric("bumpy:0.2,3"), DeformationParams(4.0, 12.0)), (4.0, 10.0)),
        "round_linear": (ScaledFamily(ConstantFamily(rnd, (0.0, 1.0)), linear_schedule(0.1, 1.0)), (0.0, 1.0)),
    }, atlas


@_timed
def criterion_9(seed: int = 0) -> CriterionResult:
    """Component bounds and intrinsic slowness imply each other on built-in families."""
    fams, _ = bridge_families()
    out = {}
    ok = True
    for name, (fam, tr) in fams.items():
        rep = measure_slowness(fam, t_range=tr, seed=seed)
        to_slow = check_components_imply_slow(rep)
        to_components = check_slow_implies_components(rep, fam.dim)
        out[name] = {"c_hat": rep.c_hat, "eps1": rep.eps1, "eps2": rep.eps2, "direct_eps": rep.direct_eps,
                     "eps3": rep.eps3, "components_imply_slow": to_slow["pass"], "slow_implies_components": to_components["pass"],
                     "eps1_bound": to_components["eps1_bound"], "eps2_bound": to_components["eps2_bound"]}
        ok = ok and to_slow["pass"] and to_components["pass"]
    return CriterionResult(9, "component and intrinsic slowness agree", bool(ok), out)


@_timed
def criterion_10(seed: int = 0) -> CriterionResult:
    """(B_a, eps)-closeness at the ledger thresholds, plus an informative run at a = 8, d = 32."""
    eps, xi = 0.5, 0.0
    c = certified_c(ELLIPSOID) + K.sphere_bound(2)
    led = K.ledger(2, c, xi, eps, 1.0)
    a = led.float("a_threshold") * (1 + 1e-3) + 1.0
    d = led.float("d_threshold") * (1 + 1e-3)
    h = deform(_metric(ELLIPSOID), DeformationParams(a, d))
    main = ball_close_verdict(h, a, eps, xi, c, seed=seed)
    h8 = deform(_metric(ELLIPSOID), DeformationParams(8.0, 32.0))
    info = ball_close_verdict(h8, 8.0, eps, xi, c, check_radius=False, seed=seed)
    keep = ("verdict", "core_exact", "radial_verdict", "measured_eps", "worst_center", "hyperbolic_radius")
    return CriterionResult(10, "deformation is (B_a, eps)-close at the thresholds", bool(main["verdict"]),
                           {"c": c, "a": a, "d": d, "a_threshold": led.float("a_threshold"),
                            "d_threshold": led.float("d_threshold"),
                            "threshold_run": {k: main[k] for k in keep},
                            "informative_a8_d32": {k: info[k] for k in keep}})


CRITERIA = [criterion_1, criterion_2, criterion_3, criterion_4, criterion_5, criterion_6, criterion_7,
            criterion_8, criterion_9, criterion_10]


def run_suite(seed: int = 42, only=None) -> list[CriterionResult]:
    out = []
    for k, fn in enumerate(CRITERIA, start=1):
        if only and k not in only:
            continue
        out.append(fn(seed=seed + k))
    return out


def _json_safe(obj):
    if isinstance(obj, dict):
        return {str(k): _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_safe(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else str(v)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.ndarray):
        return _json_safe(obj.tolist())
    return obj


def suite_report(results: list[CriterionResult]) -> dict:
    return {
        "criteria": [{"number": r.number, "name": r.name, "pass": r.passed, "details": _json_safe(r.details)}
                     for r in results],
        "all_pass": all(r.passed for r in results),
        "runtimes": {str(r.number): r.runtime for r in results},
    }
