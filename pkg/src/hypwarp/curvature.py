"""Christoffel symbols, Riemann tensor and sectional curvature from metric jets.

All routines take a :class:`~hypwarp.metric_model.FieldJet` (metric plus
first and second coordinate derivatives) and are batched over any leading
axes.  ``Gamma[..., k, i, j]`` is the Levi-Civita symbol Gamma^k_ij and
``R[..., a, b, c, d]`` the (0,4) tensor with ``K(u, v) = R(u, v, u, v) / |u ^ v|^2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegeneratePlane, NotSpd
from .metric_model import FieldJet, MetricField, VariableMetric, _fd_jet

H_CURV = 1e-3


@dataclass(frozen=True)
class CurvatureSample:
    point: tuple
    plane: tuple[tuple[float, ...], tuple[float, ...]]
    K: float
    method: str


def christoffel_from_jet(jet: FieldJet) -> np.ndarray:
    g, dg = jet.g, jet.dg
    # first kind: G1[l, i, j] = (d_i g_jl + d_j g_il - d_l g_ij) / 2
    first = 0.5 * (np.einsum("...jli->...lij", dg) + np.einsum("...ilj->...lij", dg) - np.einsum("...ijl->...lij", dg))
    try:
        ginv = np.linalg.inv(g)
    except np.linalg.LinAlgError as exc:
        raise NotSpd("metric is singular") from exc
    return np.einsum("...kl,...lij->...kij", ginv, first)


def christoffel(metric: MetricField, x, chart: int = 0) -> np.ndarray:
    jet = metric.jet(x, chart)
    if np.any(np.linalg.eigvalsh(jet.g) <= 0):
        raise NotSpd("metric is not positive definite at the requested point")
    return christoffel_from_jet(jet)


def christoffel_bound(c: float, n: int) -> float:
    """Entry bound for Gamma^k_ij of a c-bounded metric in dimension n."""
    return 1.5 * math.factorial(n - 1) * c ** (n + 1)


def riemann_from_jet(jet: FieldJet) -> np.ndarray:
    g, ddg = jet.g, jet.ddg
    gam = christoffel_from_jet(jet)
    # ddg[a, d, b, c] = d_b d_c g_ad
    second = 0.5 * (
        np.einsum("...adbc->...abcd", ddg)
        + np.einsum("...bcad->...abcd", ddg)
        - np.einsum("...bdac->...abcd", ddg)
        - np.einsum("...acbd->...abcd", ddg)
    )
    quad = (np.einsum("...pq,...pbc,...qad->...abcd", g, gam, gam, optimize=True)
            - np.einsum("...pq,...pbd,...qac->...abcd", g, gam, gam, optimize=True))
    return second + quad


def sectional_from_tensor(R: np.ndarray, g: np.ndarray, u: np.ndarray, v: np.ndarray) -> np.ndarray:
    num = np.einsum("...abcd,...a,...b,...c,...d->...", R, u, v, u, v, optimize=True)
    guu = np.einsum("...ab,...a,...b->...", g, u, u)
    gvv = np.einsum("...ab,...a,...b->...", g, v, v)
    guv = np.einsum("...ab,...a,...b->...", g, u, v)
    area = guu * gvv - guv**2
    return num / area


def _jet_at(metric, chart: int, x: np.ndarray, t: np.ndarray | None) -> tuple[FieldJet, str]:
    if isinstance(metric, VariableMetric):
        return metric.jet(x, t, chart), "analytic-derivative"
    if getattr(metric, "mode", "analytic") == "fd":
        return _fd_jet(lambda y: metric.eval(y, chart), x, metric.dim, H_CURV), "finite-difference"
    if t is not None:
        return metric.jet(x, t, chart), "analytic-derivative"
    return metric.jet(x, chart), "analytic-derivative"


def sectional_curvature_arrays(metric, chart: int, x, t=None, planes: int = 1, seed: int = 0,
                               coordinate_planes: bool = True, max_retries: int = 10):
    """Sectional curvatures at points ``x`` (and ``t`` for variable metrics).

    Returns ``(K, U, V)`` with ``K`` of shape ``(points, planes')`` where the
    random planes come first, followed by every coordinate plane.
    """
    x = np.atleast_2d(np.asarray(x, dtype=float))
    if t is not None:
        t = np.broadcast_to(np.asarray(t, dtype=float), x.shape[:-1])
    jet, _ = _jet_at(metric, chart, x, t)
    R = riemann_from_jet(jet)
    g = jet.g
    m = g.shape[-1]
    rng = np.random.default_rng(seed)
    npts = x.shape[0]
    U = rng.standard_normal((npts, planes, m))
    V = rng.standard_normal((npts, planes, m))
    for _ in range(max_retries):
        gram = np.abs(np.einsum("...ab,...a,...b->...", g[:, None], U, U) * np.einsum("...ab,...a,...b->...", g[:, None], V, V)
                      - np.einsum("...ab,...a,...b->...", g[:, None], U, V) ** 2)
        bad = gram < 1e-10
        if not np.any(bad):
            break
        V[bad] = rng.standard_normal((int(bad.sum()), m))
    else:
        raise DegeneratePlane("could not draw a non-degenerate plane")
    if coordinate_planes:
        eye = np.eye(m)
        pairs = [(i, j) for i in range(m) for j in range(i + 1, m)]
        cu = np.broadcast_to(np.array([eye[i] for i, _ in pairs]), (npts, len(pairs), m))
        cv = np.broadcast_to(np.array([eye[j] for _, j in pairs]), (npts, len(pairs), m))
        U = np.concatenate([U, cu], axis=1)
        V = np.concatenate([V, cv], axis=1)
    K = sectional_from_tensor(R[:, None], g[:, None], U, V)
    return K, U, V


def sectional_curvatures(metric, points, planes_per_point: int = 4, seed: int = 0) -> list[CurvatureSample]:
    """Curvature samples at ``points``, a list of ``(chart, x)`` or ``(chart, x, t)`` tuples."""
    out = []
    for idx, pt in enumerate(points):
        chart, x = pt[0], np.asarray(pt[1], dtype=float)
        t = pt[2] if len(pt) > 2 else None
        _, method = _jet_at(metric, chart, x[None], None if t is None else np.array([t]))
        K, U, V = sectional_curvature_arrays(metric, chart, x[None], None if t is None else np.array([t]),
                                             planes=planes_per_point, seed=seed + idx)
        for k in range(K.shape[1]):
            out.append(CurvatureSample(point=tuple(pt), plane=(tuple(U[0, k]), tuple(V[0, k])),
                                       K=float(K[0, k]), method=method))
    return out


def sample_region(atlas, count: int, t_range: tuple[float, float], rng: np.random.Generator, inner: float = 1.0):
    """Random ``(chart, x, t)`` samples: manifold points located in their best chart."""
    pts = atlas.sample_points(count, rng)
    charts, coords = [], []
    for p in pts:
        ch, x, _ = atlas.locate(p)
        charts.append(ch)
        coords.append(x)
    t = rng.uniform(t_range[0], t_range[1], size=count)
    return np.array(charts), np.array(coords), t


def pinching_report(metric: VariableMetric, t_range: tuple[float, float], eps: float, samples: int = 1000,
                    planes: int = 1, seed: int = 0, bins: int = 20) -> dict:
    """Sampled sup of |K + 1| over ``S^n x t_range`` with a histogram of |K + 1|."""
    rng = np.random.default_rng(seed)
    charts, xs, ts = sample_region(metric.atlas, samples, t_range, rng)
    devs, where = [], []
    for ch in np.unique(charts):
        sel = charts == ch
        K, _, _ = sectional_curvature_arrays(metric, int(ch), xs[sel], ts[sel], planes=planes,
                                             seed=seed + int(ch), coordinate_planes=True)
        dk = np.abs(K + 1.0).max(axis=1)
        devs.append(dk)
        where.append(np.column_stack([np.full(sel.sum(), ch), xs[sel], ts[sel]]))
    dev = np.concatenate(devs)
    loc = np.concatenate(where)
    if not np.all(np.isfinite(dev)):
        raise ArithmeticError("non-finite curvature sample")
    top = float(dev.max())
    edges = np.linspace(0.0, max(top, 1e-300), bins + 1)
    counts, _ = np.histogram(dev, bins=edges)
    order = np.argsort(loc[:, -1])
    return {
        "sup_abs_K_plus_1": top,
        "eps": eps,
        "pass": bool(top < eps),
        "samples": int(dev.size),
        "t_range": [float(t_range[0]), float(t_range[1])],
        "histogram": {"edges": edges.tolist(), "counts": counts.tolist()},
        "series": {"t": loc[order, -1].tolist(), "abs_K_plus_1": dev[order].tolist()},
        "attained_at": loc[int(np.argmax(dev))].tolist(),
    }
