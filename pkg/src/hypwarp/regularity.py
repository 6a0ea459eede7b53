"""Boundedness and slowness checkers for metrics and metric families.

A metric is c-bounded when every C^2 component sup stays below c and the
determinant stays above 1/c.  A family is eps-slow when, for every t,

(i)  |d^k/dt^k g_t(u, u)| <= eps g_t(u, u) for k = 1, 2, and
(ii) |d/dt v g_t(u, u)| <= eps (g(u,u) g(v,v)^1/2 + g(u,u)^1/2 g(D_v u, D_v u)^1/2)

for tangent vectors v and vector fields u.  Condition (i) is evaluated
exactly through generalized eigenvalues; condition (ii) is sampled over
coordinate fields, sums of coordinate fields, random constant fields and
random linear fields.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from . import constants as K
from .curvature import christoffel_from_jet
from .errors import EvaluationFailure, NotBounded
from .metric_model import (Atlas, FamilyJet, FieldJet, MetricFamily, ReparametrizedFamily, chart_grid,
                           linear_schedule, shifted_family)

C_FLOOR = 1.0 + 1e-9


@dataclass
class BoundednessReport:
    c_hat: float
    per_chart: list
    grid: dict
    attained_at: dict

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class SlownessReport:
    eps1: float
    eps2: float
    eps3: float
    direct_eps: float
    direct_i: float
    direct_ii: float
    c: float
    c_hat: float
    grid: dict
    details: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)


def _finite(arr, what, chart, where):
    if not np.all(np.isfinite(arr)):
        bad = np.argwhere(~np.isfinite(arr.reshape(arr.shape[0], -1)))[0, 0]
        raise EvaluationFailure(f"non-finite {what} on chart {chart}", location={"chart": chart, "point": where[bad].tolist()})


def _t_grid(fam: MetricFamily, t_range, nt: int) -> np.ndarray:
    lo, hi = fam.t_interval if t_range is None else t_range
    if not (math.isfinite(lo) and math.isfinite(hi)):
        raise ValueError("a finite t range is required for an unbounded family")
    return np.linspace(lo, hi, nt)


def _chart_points(atlas: Atlas, chart: int, per_axis: int) -> np.ndarray:
    return chart_grid(atlas.n, atlas.charts[chart].radius, per_axis)


def _field_sups(g, dg, ddg) -> tuple[float, float, int]:
    flat = np.concatenate([np.abs(g).reshape(g.shape[0], -1), np.abs(dg).reshape(g.shape[0], -1),
                           np.abs(ddg).reshape(g.shape[0], -1)], axis=1).max(axis=1)
    det = np.abs(np.linalg.det(g))
    return flat, det


def check_bounded(g, atlas: Atlas | None = None, per_axis: int = 17, t_range=None, nt: int = 33,
                  t_grid=None) -> BoundednessReport:
    """Grid certificate for c-boundedness of a field or a family (space derivatives only)."""
    atlas = atlas or g.atlas
    is_family = isinstance(g, MetricFamily)
    ts = None
    if is_family:
        ts = np.asarray(t_grid, dtype=float) if t_grid is not None else _t_grid(g, t_range, nt)
    per_chart = []
    best = (-math.inf, None)
    for chart in range(len(atlas.charts)):
        pts = _chart_points(atlas, chart, per_axis)
        if is_family:
            xs = np.repeat(pts, len(ts), axis=0)
            tt = np.tile(ts, len(pts))
            j = g.jet(xs, tt, chart)
            jet = FieldJet(j.g, j.gx, j.gxx)
            where = np.column_stack([xs, tt])
        else:
            jet = g.jet(pts, chart)
            where = pts
        for arr, what in ((jet.g, "metric"), (jet.dg, "first derivative"), (jet.ddg, "second derivative")):
            _finite(arr, what, chart, where)
        sup, det = _field_sups(*jet)
        inv_det = 1.0 / det
        c_pts = np.maximum(sup, inv_det)
        k = int(np.argmax(c_pts))
        entry = {"chart": chart, "sup_c2": float(sup.max()), "inf_det": float(det.min()),
                 "c": float(c_pts[k]), "attained_at": where[k].tolist()}
        per_chart.append(entry)
        if c_pts[k] > best[0]:
            best = (float(c_pts[k]), {"chart": chart, "point": where[k].tolist()})
    grid = {"per_axis": per_axis, "nt": 0 if ts is None else len(ts),
            "t_range": None if ts is None else [float(ts[0]), float(ts[-1])]}
    return BoundednessReport(c_hat=max(best[0], C_FLOOR), per_chart=per_chart, grid=grid, attained_at=best[1])


# ---------------------------------------------------------------------------
# slowness


@dataclass(frozen=True)
class ProbeField:
    """A vector field u = u0 + L (x - x0) near the evaluation point and a tangent vector v."""

    u: np.ndarray
    v: np.ndarray
    L: np.ndarray
    kind: str


def probe_fields(n: int, samples: int = 32, linear: int = 8, seed: int = 0) -> list[ProbeField]:
    eye = np.eye(n)
    zero = np.zeros((n, n))
    out = []
    for i in range(n):
        for l in range(n):
            out.append(ProbeField(eye[i], eye[l], zero, "coordinate"))
    for i in range(n):
        for j in range(i + 1, n):
            for l in range(n):
                out.append(ProbeField(eye[i] + eye[j], eye[l], zero, "coordinate-sum"))
    rng = np.random.default_rng(seed)
    for _ in range(samples):
        out.append(ProbeField(rng.standard_normal(n), rng.standard_normal(n), zero, "constant"))
    for _ in range(linear):
        out.append(ProbeField(rng.standard_normal(n), rng.standard_normal(n), rng.standard_normal((n, n)), "linear"))
    return out


def ratio_i(j: FamilyJet) -> np.ndarray:
    """Per-point sup over u of |d^k g(u,u)| / g(u,u), k = 1, 2 (generalized eigenvalues)."""
    L = np.linalg.cholesky(j.g)
    Linv = np.linalg.inv(L)
    out = np.zeros(j.g.shape[:-2])
    for gk in (j.gt, j.gtt):
        m = Linv @ gk @ np.swapaxes(Linv, -1, -2)
        m = 0.5 * (m + np.swapaxes(m, -1, -2))
        out = np.maximum(out, np.abs(np.linalg.eigvalsh(m)).max(axis=-1))
    return out


def ratio_ii(j: FamilyJet, fields: list[ProbeField]) -> np.ndarray:
    """Per-point max over the test fields of the ratio in condition (ii)."""
    gam = christoffel_from_jet(FieldJet(j.g, j.gx, j.gxx))
    out = np.zeros(j.g.shape[:-2])
    for f in fields:
        u, v, Lm = f.u, f.v, f.L
        lv = Lm @ v
        lhs = np.einsum("...jkl,l,j,k->...", j.gtx, v, u, u) + 2 * np.einsum("...jk,j,k->...", j.gt, u, lv)
        nab = lv + np.einsum("...skl,k,l->...s", gam, u, v)
        guu = np.einsum("...jk,j,k->...", j.g, u, u)
        gvv = np.einsum("...jk,j,k->...", j.g, v, v)
        gnn = np.einsum("...jk,...j,...k->...", j.g, nab, nab)
        rhs = guu * np.sqrt(gvv) + np.sqrt(guu) * np.sqrt(np.maximum(gnn, 0.0))
        out = np.maximum(out, np.abs(lhs) / rhs)
    return out


def eps3_formula(n: int, c: float, eps1: float, eps2: float) -> float:
    return float(K.eps3(n, c, eps1, eps2))


def measure_slowness(fam: MetricFamily, atlas: Atlas | None = None, c: float | None = None, per_axis: int = 9,
                     nt: int = 17, t_range=None, t_grid=None, samples: int = 32, linear: int = 8,
                     seed: int = 0) -> SlownessReport:
    """Component sups eps1, eps2, the bridge bound eps3 and the direct slowness estimate.

    ``c`` defaults to the grid certificate c_hat; an explicit ``c`` must
    exceed c_hat or :class:`NotBounded` is raised.
    """
    atlas = atlas or fam.atlas
    ts = np.asarray(t_grid, dtype=float) if t_grid is not None else _t_grid(fam, t_range, nt)
    c_hat = check_bounded(fam, atlas, per_axis=per_axis, t_grid=ts).c_hat
    if c is None:
        c = c_hat
    elif not c > c_hat:
        raise NotBounded(f"family is not {c:g}-bounded on the grid (c_hat = {c_hat:.6g})")
    n = fam.dim
    fields = probe_fields(n, samples, linear, seed)
    eps1 = eps2 = d_i = d_ii = 0.0
    worst = {}
    for chart in range(len(atlas.charts)):
        pts = _chart_points(atlas, chart, per_axis)
        xs = np.repeat(pts, len(ts), axis=0)
        tt = np.tile(ts, len(pts))
        j = fam.jet(xs, tt, chart)
        where = np.column_stack([xs, tt])
        for arr, what in ((j.gt, "t-derivative"), (j.gtt, "second t-derivative"), (j.gtx, "mixed derivative")):
            _finite(arr, what, chart, where)
        e1 = np.maximum(np.abs(j.gt).reshape(len(xs), -1).max(1), np.abs(j.gtt).reshape(len(xs), -1).max(1))
        e2 = np.abs(j.gtx).reshape(len(xs), -1).max(1)
        ri, rii = ratio_i(j), ratio_ii(j, fields)
        eps1, eps2 = max(eps1, float(e1.max())), max(eps2, float(e2.max()))
        if ri.max() > d_i:
            d_i = float(ri.max())
            worst["i"] = {"chart": chart, "point": where[int(np.argmax(ri))].tolist()}
        if rii.max() > d_ii:
            d_ii = float(rii.max())
            worst["ii"] = {"chart": chart, "point": where[int(np.argmax(rii))].tolist()}
    grid = {"per_axis": per_axis, "nt": len(ts), "t_range": [float(ts[0]), float(ts[-1])],
            "fields": len(fields), "seed": seed}
    return SlownessReport(eps1=eps1, eps2=eps2, eps3=eps3_formula(n, c, eps1, eps2), direct_eps=max(d_i, d_ii),
                          direct_i=d_i, direct_ii=d_ii, c=float(c), c_hat=c_hat, grid=grid, details={"worst": worst})


# ---------------------------------------------------------------------------
# bridges between the intrinsic and the component formulations


def component_bounds_from_slowness(eps: float, c: float, n: int) -> tuple[float, float]:
    """Component bounds implied by eps-slowness: (3 eps c, eps c3(c, n))."""
    return 3.0 * eps * c, eps * float(K.c3(n, c))


def check_slow_implies_components(rep: SlownessReport, n: int, c: float | None = None) -> dict:
    c = rep.c_hat if c is None else c
    b1, b2 = component_bounds_from_slowness(rep.direct_eps, c, n)
    return {"eps1": rep.eps1, "eps1_bound": b1, "eps2": rep.eps2, "eps2_bound": b2,
            "pass": bool(rep.eps1 <= b1 * (1 + 1e-12) and rep.eps2 <= b2 * (1 + 1e-12))}


def check_components_imply_slow(rep: SlownessReport) -> dict:
    return {"direct_eps": rep.direct_eps, "eps3": rep.eps3, "pass": bool(rep.direct_eps <= rep.eps3)}


def verify_slowness_stability(fam: MetricFamily, t_range, b: float = 1.0, scale: float = 2.0,
                   rotated: MetricFamily | None = None, per_axis: int = 9, nt: int = 17, seed: int = 0,
                   rtol: float = 1e-9) -> dict:
    """Shift, reparametrization and pullback stability of the measured slowness.

    The reparametrization is s -> scale * s, so ``a = scale`` bounds its
    derivatives; ``rotated`` is the same family pulled back by an isometry
    of the base, when available.
    """
    lo, hi = t_range
    ts = np.linspace(lo, hi, nt)
    base = measure_slowness(fam, per_axis=per_axis, t_grid=ts, seed=seed)
    shifted = measure_slowness(shifted_family(fam, b), per_axis=per_axis, t_grid=ts - b, seed=seed)
    shift_ok = all(abs(getattr(shifted, k) - getattr(base, k)) <= rtol * max(abs(getattr(base, k)), 1e-300)
                   for k in ("eps1", "eps2", "direct_eps"))
    a = abs(scale)
    phi = linear_schedule(scale)
    s_grid = ts / scale
    rep = measure_slowness(ReparametrizedFamily(fam, phi, (min(s_grid), max(s_grid))), per_axis=per_axis,
                           t_grid=s_grid, seed=seed)
    bound = (a + a * a) * base.direct_eps
    out = {
        "shift": {"b": b, "eps1": [base.eps1, shifted.eps1], "direct_eps": [base.direct_eps, shifted.direct_eps],
                  "pass": bool(shift_ok)},
        "reparam": {"a": a, "direct_eps": rep.direct_eps, "bound": bound,
                    "ratio": rep.direct_eps / base.direct_eps if base.direct_eps else 0.0,
                    "pass": bool(rep.direct_eps <= bound * (1 + rtol) + 1e-300)},
    }
    if rotated is not None:
        rot = measure_slowness(rotated, per_axis=per_axis, t_grid=ts, seed=seed)
        out["pullback"] = {"direct_eps": [base.direct_eps, rot.direct_eps],
                           "pass": bool(abs(rot.direct_eps - base.direct_eps) <= 1e-8)}
    out["pass"] = all(v["pass"] for v in out.values() if isinstance(v, dict))
    return out


def converse_close_implies_slow(g_block, eps: float, xi: float, per_axis: int = 9, nt: int = 17,
                                seed: int = 0, strict: bool = False) -> dict:
    """Closeness to the model block implies a'eps-slowness and, below a threshold, 2-boundedness.

    ``g_block`` is an exp-warp variable metric on the unit ball atlas.
    """
    from .errors import ThresholdNotMet
    from .hyperbolic_model import ModelBlock, deviation

    n = g_block.family.dim
    block = ModelBlock(n, xi)
    dev = deviation(g_block, block)
    if not dev.c2_norm < eps:
        raise ValueError(f"block metric is not {eps:g}-close (measured {dev.c2_norm:.6g})")
    rep = measure_slowness(g_block.family, per_axis=per_axis, nt=nt, t_range=(-(1 + xi), 1 + xi), seed=seed)
    ap = float(K.a_prime(n, xi))
    thr = float(K.two_bounded_threshold(n, xi))
    out = {"closeness": dev.c2_norm, "a_prime": ap, "a_prime_eps": ap * eps, "measured": rep.direct_eps,
           "eps1": rep.eps1, "eps2": rep.eps2, "slow_pass": bool(rep.direct_eps <= ap * eps),
           "two_bounded_threshold": thr, "threshold_met": bool(eps < thr), "two_bounded": None}
    if eps < thr:
        out["two_bounded"] = bool(rep.c_hat < 2.0)
    elif strict:
        raise ThresholdNotMet(f"eps = {eps:g} is not below {thr:.6g}; 2-boundedness not asserted")
    out["pass"] = out["slow_pass"] and out["two_bounded"] is not False
    return out
