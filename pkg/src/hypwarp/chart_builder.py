"""Product charts (x, t) -> (psi(e^{lam - t0} A x), t + t0) and their pullbacks.

For a c-bounded family g_t the chart at (p, t0) uses A = F^-1 where
g_t0(p) = F^T F is the bounded factorization, and the correction
lam = min{0, t0 - ln(n c4)} keeps the image of the unit ball inside the
unit ball.  With h = e^{2t} g_t + dt^2 the pullback is e^{2t} f_t + dt^2 with
f_t(x) = e^{2 lam} A^T g_{t+t0}(e^{lam - t0} A x) A.

A sinh warp sinh^2(t) g_t is rewritten as e^{2t} k(t) g_t with
k = (1 - e^{-2t})^2 / 4, and the chart is the one for the family k g_t,
which is 6^n c bounded.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import constants as K
from .errors import ChartConstructionFailure, DomainEscape
from .hyperbolic_model import ModelBlock, check_center, deviation
from .linalg_spd import spd_factor
from .metric_model import (Atlas, FamilyJet, MetricFamily, ScaledFamily, Schedule, VariableMetric,
                           make_ball_atlas)

MARGIN_TOL = 1e-9


def k_schedule() -> Schedule:
    """k(t) = sinh^2(t) / e^{2t} = (1 - e^{-2t})^2 / 4 with closed-form derivatives."""

    def value(t):
        q = np.exp(-2.0 * np.asarray(t, dtype=float))
        return 0.25 * (1.0 - q) ** 2

    def d1(t):
        q = np.exp(-2.0 * np.asarray(t, dtype=float))
        return q - q * q

    def d2(t):
        q = np.exp(-2.0 * np.asarray(t, dtype=float))
        return -2.0 * q + 4.0 * q * q

    return Schedule(value, d1, d2, name="k")


def k_family(fam: MetricFamily) -> ScaledFamily:
    return ScaledFamily(fam, k_schedule())


@dataclass
class HypChart:
    chart: int
    x_p: np.ndarray
    t0: float
    A: np.ndarray
    lam: float
    c: float
    c4: float
    xi: float
    warp: str = "exp"

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def scale(self) -> float:
        return math.exp(self.lam - self.t0)

    @property
    def flagged(self) -> bool:
        """Centers with a negative correction lie outside the large-t0 regime."""
        return self.lam < 0.0

    def image_radius(self) -> float:
        """sup over the unit ball of |e^{lam - t0} A x|."""
        return self.scale * float(np.linalg.norm(self.A, 2))

    def to_dict(self) -> dict:
        return {"chart": self.chart, "x_p": self.x_p.tolist(), "t0": self.t0, "A": self.A.tolist(),
                "lambda": self.lam, "c": self.c, "c4": self.c4, "xi": self.xi, "warp": self.warp,
                "flagged": self.flagged, "image_radius": self.image_radius()}


def correction(t0: float, n: int, c: float) -> tuple[float, float]:
    """``(lam, c4)`` with c4 = sqrt(n n! c^n) and lam = min{0, t0 - ln(n c4)}."""
    c4 = float(K.c4(n, c))
    return min(0.0, t0 - math.log(n * c4)), c4


def _resolve_center(atlas: Atlas, p) -> tuple[int, np.ndarray]:
    if isinstance(p, tuple) and len(p) == 2 and np.ndim(p[1]) == 1 and isinstance(p[0], (int, np.integer)):
        chart, x = int(p[0]), np.asarray(p[1], dtype=float)
        margin = float(atlas.chart_margin(chart, x))
    else:
        chart, x, margin = atlas.locate(np.asarray(p, dtype=float))
    if margin < 1.0 - MARGIN_TOL:
        raise ChartConstructionFailure(f"niceness margin {margin:.6g} < 1 at the center")
    return chart, x


def build_chart(fam: MetricFamily, atlas: Atlas, p, t0: float, c: float, xi: float = 0.0,
                warp: str = "exp") -> HypChart:
    """Chart at ``(p, t0)`` for the c-bounded family ``fam``.

    ``p`` is a manifold point (the chart with the largest margin is used,
    ties to the lowest index) or a ``(chart, coords)`` pair.
    """
    check_center(t0, fam.t_interval, xi)
    chart, x = _resolve_center(atlas, p)
    G = fam.eval(x[None], np.array([t0]), chart)[0]
    fac = spd_factor(G, c)
    n = G.shape[0]
    lam, c4 = correction(t0, n, c)
    hc = HypChart(chart=chart, x_p=x, t0=float(t0), A=fac.F_inv, lam=lam, c=float(c), c4=c4, xi=float(xi), warp=warp)
    if not hc.image_radius() < 1.0:
        raise ChartConstructionFailure(f"chart image radius {hc.image_radius():.6g} is not below 1")
    return hc


def effective_family(h: VariableMetric) -> tuple[MetricFamily, float]:
    """Family and constant multiplier on c for the exp form e^{2t} f_t of ``h``."""
    if h.warp == "exp":
        return h.family, 1.0
    if h.warp == "sinh":
        return k_family(h.family), 6.0**h.family.dim
    raise ValueError(f"charts need an exp or sinh warp, got {h.warp!r}")


def chart_for(h: VariableMetric, p, t0: float, c: float, xi: float = 0.0) -> HypChart:
    fam, mult = effective_family(h)
    return build_chart(fam, h.atlas, p, t0, mult * c, xi, warp=h.warp)


class PulledBackFamily(MetricFamily):
    """f_t(x) = e^{2 lam} A^T g_{t+t0}(x_p + e^{lam - t0} A x) A on the unit ball."""

    def __init__(self, base: MetricFamily, chart: HypChart):
        self.base = base
        self.hc = chart
        self.dim = base.dim
        self.atlas = make_ball_atlas(base.dim)
        self.t_interval = (-(1.0 + chart.xi), 1.0 + chart.xi)
        self._radius = base.atlas.charts[chart.chart].radius

    def jet(self, x, t, chart=0):
        hc = self.hc
        x = np.asarray(x, dtype=float)
        t = np.broadcast_to(np.asarray(t, dtype=float), x.shape[:-1])
        s = hc.scale
        y = hc.x_p + s * x @ hc.A.T
        if np.any(np.linalg.norm(y, axis=-1) >= self._radius):
            raise DomainEscape("chart image leaves the base chart domain")
        lo, hi = self.base.t_interval
        if np.any(t + hc.t0 < lo) or np.any(t + hc.t0 > hi):
            raise DomainEscape("chart image leaves the family's t interval")
        j = self.base.jet(y, t + hc.t0, hc.chart)
        A, w = hc.A, math.exp(2.0 * hc.lam)
        g = w * np.einsum("ai,...ab,bj->...ij", A, j.g, A)
        gx = w * s * np.einsum("ai,...abm,bj,mk->...ijk", A, j.gx, A, A, optimize=True)
        gxx = w * s * s * np.einsum("ai,...abmq,bj,mk,ql->...ijkl", A, j.gxx, A, A, A, optimize=True)
        gt = w * np.einsum("ai,...ab,bj->...ij", A, j.gt, A)
        gtt = w * np.einsum("ai,...ab,bj->...ij", A, j.gtt, A)
        gtx = w * s * np.einsum("ai,...abm,bj,mk->...ijk", A, j.gtx, A, A, optimize=True)
        return FamilyJet(g, gx, gxx, gt, gtt, gtx)


def pullback(h: VariableMetric, chart: HypChart) -> VariableMetric:
    """The pulled-back metric e^{2t} f_t + dt^2 on the model block."""
    fam, _ = effective_family(h)
    return VariableMetric(PulledBackFamily(fam, chart), "exp", meta={"chart": chart.to_dict()})


def eta_bound_check(fam: MetricFamily, c: float, xi: float, centers, warp: str = "exp",
                    eps_hat: float | None = None, block: ModelBlock | None = None,
                    slowness_kwargs: dict | None = None, executor=None) -> dict:
    """Worst measured chart deviation against C (e^{-T} + eps_hat), or C1 (...) for the sinh warp.

    ``T`` is the smallest center; ``eps_hat`` defaults to the direct slowness of
    ``fam`` measured on the t range the charts see.
    """
    from .regularity import measure_slowness

    h = VariableMetric(fam, warp)
    n = fam.dim
    block = block or ModelBlock(n, xi)
    centers = list(centers)
    t0s = [float(t0) for _, t0 in centers]
    T = min(t0s)
    if eps_hat is None:
        kw = {"per_axis": 9, "nt": 17}
        kw.update(slowness_kwargs or {})
        eps_hat = measure_slowness(fam, t_range=(T - 1 - xi, max(t0s) + 1 + xi), **kw).direct_eps

    def one(center):
        p, t0 = center
        hc = chart_for(h, p, t0, c, xi)
        rep = deviation(pullback(h, hc), block)
        return {"t0": float(t0), "chart": hc.chart, "x": hc.x_p.tolist(), "lambda": hc.lam,
                "flagged": hc.flagged, "deviation": rep.c2_norm}

    rows = list(executor.map(one, centers)) if executor is not None else [one(ctr) for ctr in centers]
    constant = K.big_c(n, c, xi) if warp == "exp" else K.big_c1(n, c, xi)
    bound_eta = float(constant * (math.exp(-T) + eps_hat))
    measured = max(r["deviation"] for r in rows)
    return {"measured_eta": measured, "bound_eta": bound_eta, "T": T, "eps_hat": float(eps_hat),
            "constant": float(constant), "warp": warp, "pass": bool(measured <= bound_eta), "centers": rows}
