"""The two-variable warping deformation sinh^2(t) (sigma + rho_{a,d}(t) (g - sigma)) + dt^2.

The bump rho is the quintic smoothstep 6t^5 - 15t^4 + 10t^3 clamped to [0, 1];
rho_{a,d}(t) = rho(2 (t - a) / d) switches from the round metric at t = a to
the target metric at t = a + d/2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import mpmath as mp
import numpy as np

from . import constants as K
from .chart_builder import k_schedule
from .errors import RadiusTooSmall
from .hyperbolic_model import ModelBlock, hyperbolic_threshold, radially_close_verdict
from .metric_model import (InterpolatedFamily, MetricField, Schedule, VariableMetric, builtin_metric,
                           family_from_interpolation, linear_schedule)

RHO_D1_SUP = 15.0 / 8.0
RHO_D2_SUP = 10.0 / math.sqrt(3.0)


@dataclass(frozen=True)
class BumpFunction:
    """Quintic smoothstep with closed-form first and second derivatives."""

    d1_sup: float = RHO_D1_SUP
    d2_sup: float = RHO_D2_SUP

    @staticmethod
    def value(t):
        s = np.clip(np.asarray(t, dtype=float), 0.0, 1.0)
        return s**3 * (10.0 + s * (-15.0 + 6.0 * s))

    @staticmethod
    def d1(t):
        s = np.clip(np.asarray(t, dtype=float), 0.0, 1.0)
        return 30.0 * s**2 * (1.0 - s) ** 2

    @staticmethod
    def d2(t):
        s = np.clip(np.asarray(t, dtype=float), 0.0, 1.0)
        return 60.0 * s * (1.0 - s) * (1.0 - 2.0 * s)

    def __call__(self, t):
        return self.value(t)


def bump() -> BumpFunction:
    return BumpFunction()


@dataclass(frozen=True)
class DeformationParams:
    a: float
    d: float

    def __post_init__(self):
        if not (self.a > 0 and self.d > 0):
            raise ValueError(f"need a, d > 0, got a={self.a}, d={self.d}")

    @property
    def d1_bound(self) -> float:
        return 6.0 / self.d

    @property
    def d2_bound(self) -> float:
        return 48.0 / self.d**2

    @property
    def outer(self) -> float:
        return self.a + self.d / 2.0


def rho_ad(params: DeformationParams) -> Schedule:
    """rho(2 (t - a) / d) with chain-rule derivatives."""
    rho = bump()
    a, d = params.a, params.d

    def u(t):
        return 2.0 * (np.asarray(t, dtype=float) - a) / d

    return Schedule(lambda t: rho.value(u(t)), lambda t: (2.0 / d) * rho.d1(u(t)),
                    lambda t: (4.0 / d**2) * rho.d2(u(t)), name=f"rho[{a:g},{d:g}]")


def k_eval(t):
    """``(k, k', k'')`` for k = (1 - e^{-2t})^2 / 4."""
    sch = k_schedule()
    return sch.value(t), sch.d1(t), sch.d2(t)


def k_bounds_check(t_range=(1.0, 20.0), points: int = 10_000) -> dict:
    """Sweep the bounds 1/6 < k < 1/4, 0 < k' < e^{-2t} < 1/2 and |k''| < 2 e^{-2t} < 1.

    The sweep runs at the ledger precision: in doubles k rounds to exactly
    1/4 once e^{-2t} drops below machine epsilon and the strict bounds blur.
    """
    lo, hi = t_range
    if lo < 1.0:
        raise ValueError("the k bounds are stated for t >= 1")
    ok = {"k_window": True, "k1_window": True, "k2_window": True}
    with mp.workdps(K.PRECISION):
        for t in np.linspace(lo, hi, points):
            q = mp.exp(-2 * mp.mpf(float(t)))
            k, k1, k2 = (1 - q) ** 2 / 4, q - q * q, -2 * q + 4 * q * q
            ok["k_window"] &= bool(mp.mpf(1) / 6 < k < mp.mpf(1) / 4)
            ok["k1_window"] &= bool(0 < k1 < q < mp.mpf(1) / 2)
            ok["k2_window"] &= bool(0 < abs(k2) < 2 * q < 1)
    return {"t_range": [lo, hi], "points": points, **ok, "pass": all(ok.values())}


def deformation_family(g: MetricField, params: DeformationParams, sigma: MetricField | None = None) -> InterpolatedFamily:
    sigma = sigma or builtin_metric("round", g.atlas)
    return family_from_interpolation(sigma, g, rho_ad(params), t_interval=(0.0, math.inf))


def deform(g: MetricField, params: DeformationParams, sigma: MetricField | None = None) -> VariableMetric:
    """T_{a,d} g as a sinh-warped variable metric."""
    fam = deformation_family(g, params, sigma)
    return VariableMetric(fam, "sinh", meta={"a": params.a, "d": params.d, "target": g.name})


def segment_family(g: MetricField, sigma: MetricField | None = None) -> InterpolatedFamily:
    """The family sigma + s (g - sigma), s in [0, 1]."""
    sigma = sigma or builtin_metric("round", g.atlas)
    return family_from_interpolation(sigma, g, linear_schedule(1.0), t_interval=(0.0, 1.0))


def measured_eps_g(g: MetricField, sigma: MetricField | None = None, per_axis: int = 9, ns: int = 17,
                   seed: int = 0) -> float:
    from .regularity import measure_slowness

    return measure_slowness(segment_family(g, sigma), per_axis=per_axis, nt=ns, seed=seed).direct_eps


def deformation_slowness_bound(g: MetricField, params: DeformationParams, eps_g: float | None = None,
                               per_axis: int = 9, nt: int = 33, seed: int = 0, tol: float = 1e-9) -> dict:
    """Measured slowness of the t-family against (12/d) eps_g."""
    from .regularity import measure_slowness

    if eps_g is None:
        eps_g = measured_eps_g(g, per_axis=per_axis, seed=seed)
    fam = deformation_family(g, params)
    ts = np.linspace(params.a, params.outer, nt)
    rep = measure_slowness(fam, per_axis=per_axis, t_grid=ts, seed=seed)
    bound = 12.0 / params.d * eps_g
    return {"a": params.a, "d": params.d, "eps_g": eps_g, "measured": rep.direct_eps, "eps1": rep.eps1,
            "eps2": rep.eps2, "bound": bound, "pass": bool(rep.direct_eps <= bound + tol)}


def eps_g_bound(c_g: float, n: int, c_sphere: float | None = None) -> float:
    """A(n, c_g + c_sphere), finite as long as it fits a double."""
    return float(K.eps_g_bound(c_g, n, c_sphere))


def sphere_centers(n: int, count: int, seed: int = 0) -> np.ndarray:
    """Deterministic sphere sample: the equatorial basis directions followed by random points."""
    eye = np.eye(n + 1)
    base = [eye[i] for i in range(n)]
    rng = np.random.default_rng(seed)
    extra = rng.standard_normal((max(count - len(base), 0), n + 1))
    extra /= np.linalg.norm(extra, axis=1, keepdims=True)
    pts = np.array(base + list(extra))
    return pts[:count]


def _core_matches(h: VariableMetric, a: float, samples: int, seed: int) -> tuple[bool, float]:
    """Exact equality of h with sinh^2 t sigma + dt^2 at sampled points with t < a."""
    if h.warp != "sinh":
        return False, math.inf
    sigma = builtin_metric("round", h.atlas)
    rng = np.random.default_rng(seed)
    worst = 0.0
    for chart in range(len(h.atlas.charts)):
        r = h.atlas.charts[chart].radius
        x = rng.uniform(-1, 1, (samples, h.family.dim))
        x *= (r * rng.uniform(0, 1, (samples, 1))) / np.maximum(np.linalg.norm(x, axis=1, keepdims=True), 1e-300)
        t = rng.uniform(0.0, a, samples)
        fj = h.family.jet(x, t, chart)
        sj = sigma.jet(x, chart)
        parts = [fj.g - sj.g, fj.gx - sj.dg, fj.gxx - sj.ddg, fj.gt, fj.gtt, fj.gtx]
        worst = max(worst, max(float(np.abs(p).max()) for p in parts))
    return worst == 0.0, worst


def ball_close_verdict(h: VariableMetric, a: float, eps: float, xi: float, c: float, centers=None,
                       check_radius: bool = True, samples: int = 200, seed: int = 0,
                       block: ModelBlock | None = None, executor=None) -> dict:
    """(B_a, eps)-closeness: exactly hyperbolic for t < a, radially eps-close outside B_{a-1-xi}.

    ``c`` bounds the family (c_g + c_sphere for a deformation).  Centers
    default to six sphere points times t0 spread from a - 1 - xi to past the
    outer knot a + d/2.
    """
    n = h.family.dim
    floor = hyperbolic_threshold(eps, n + 1, xi) if eps > 0 else math.inf
    if check_radius and not a > floor + 1 + xi:
        raise RadiusTooSmall(f"a = {a:g} is not above the hyperbolic radius {floor:.6g} + 1 + xi")
    core_ok, core_dev = _core_matches(h, a, samples, seed)
    b = a - 1.0 - xi
    if centers is None:
        d = h.meta.get("d", 0.0)
        t0s = sorted(set([max(b, 1.0 + xi), a, a + d / 8, a + d / 4, a + 3 * d / 8, a + d / 2, a + d / 2 + 2.0]))
        centers = [(p, t0) for t0 in t0s for p in sphere_centers(n, 6, seed)]
    radial = radially_close_verdict(h, centers, xi, eps, c, block=block, executor=executor)
    return {"a": a, "eps": eps, "xi": xi, "c": c, "hyperbolic_radius": floor,
            "core_exact": core_ok, "core_max_abs_diff": core_dev,
            "radial_verdict": radial.verdict, "measured_eps": radial.worst.c2_norm,
            "worst_center": radial.worst_center, "verdict": bool(core_ok and radial.verdict)}
