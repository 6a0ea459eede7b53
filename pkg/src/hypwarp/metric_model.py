"""Metrics, metric families, atlases and the built-in test geometries.

Conventions used throughout the package:

* points in a chart are arrays of shape ``(..., n)``;
* a field jet is ``(g, dg, ddg)`` with ``dg[..., i, j, k] = d_k g_ij`` and
  ``ddg[..., i, j, k, l] = d_k d_l g_ij``;
* a family jet adds the t-derivatives ``gt``, ``gtt`` and the mixed
  ``gtx[..., i, j, l] = d_t d_l g_ij``;
* the variable metric ``w(t) g_t + dt^2`` lives on ``(chart) x I`` with the
  t coordinate stored last.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Sequence

import numpy as np

from ._immersion import immersion_jet, induced_metric_jet
from .errors import NotPositiveDefinite

DEFAULT_FD_STEP = 1e-4
SPHERE_CHART_RADIUS = 2.0


class FieldJet(NamedTuple):
    g: np.ndarray
    dg: np.ndarray
    ddg: np.ndarray


class FamilyJet(NamedTuple):
    g: np.ndarray
    gx: np.ndarray
    gxx: np.ndarray
    gt: np.ndarray
    gtt: np.ndarray
    gtx: np.ndarray


# ---------------------------------------------------------------------------
# atlases


@dataclass(frozen=True)
class Chart:
    index: int
    radius: float
    sign: int = 0
    center: tuple[float, ...] = ()


@dataclass
class Atlas:
    """A finite atlas whose charts are balls of radius ``chart.radius``.

    ``kind`` is ``"sphere"`` (two stereographic charts, manifold points are
    unit vectors in R^(n+1)), ``"torus"`` (translates on R^n / (period Z)^n)
    or ``"ball"`` (the single identity chart on the unit ball).
    """

    n: int
    kind: str
    charts: list[Chart]
    period: float = 0.0
    margin: float = math.nan

    def to_manifold(self, chart: int, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        ch = self.charts[chart]
        if self.kind == "sphere":
            r2 = np.sum(x * x, axis=-1, keepdims=True)
            last = ch.sign * (r2 - 1.0)
            return np.concatenate([2.0 * x, last], axis=-1) / (1.0 + r2)
        if self.kind == "torus":
            return np.mod(x + np.asarray(ch.center), self.period)
        return x

    def from_manifold(self, chart: int, p) -> np.ndarray:
        p = np.asarray(p, dtype=float)
        ch = self.charts[chart]
        if self.kind == "sphere":
            return p[..., :-1] / (1.0 - ch.sign * p[..., -1:])
        if self.kind == "torus":
            d = np.mod(p - np.asarray(ch.center) + 0.5 * self.period, self.period)
            return d - 0.5 * self.period
        return p

    def chart_margin(self, chart: int, x) -> np.ndarray:
        return self.charts[chart].radius - np.linalg.norm(np.asarray(x, dtype=float), axis=-1)

    def locate(self, p) -> tuple[int, np.ndarray, float]:
        """Chart with the largest niceness margin at ``p`` (ties: lowest index)."""
        best = None
        for ch in self.charts:
            with np.errstate(divide="ignore", invalid="ignore"):
                x = self.from_manifold(ch.index, p)
            if not np.all(np.isfinite(x)):
                continue
            m = float(self.chart_margin(ch.index, x))
            if best is None or m > best[2]:
                best = (ch.index, x, m)
        if best is None:
            raise ValueError(f"point {p} is not covered by the atlas")
        return best

    def transition(self, i: int, j: int, x) -> np.ndarray:
        return self.from_manifold(j, self.to_manifold(i, x))

    def transition_jacobian(self, i: int, j: int, x) -> np.ndarray:
        """Jacobian ``d(x_j)/d(x_i)`` of the transition map at ``x``."""
        x = np.asarray(x, dtype=float)
        n = self.n
        if self.kind == "sphere" and self.charts[i].sign != self.charts[j].sign:
            r2 = np.sum(x * x, axis=-1)[..., None, None]
            outer = x[..., :, None] * x[..., None, :]
            return (np.eye(n) - 2.0 * outer / r2) / r2
        return np.broadcast_to(np.eye(n), x.shape[:-1] + (n, n)).copy()

    def sample_points(self, count: int, rng: np.random.Generator) -> np.ndarray:
        if self.kind == "sphere":
            v = rng.standard_normal((count, self.n + 1))
            return v / np.linalg.norm(v, axis=1, keepdims=True)
        if self.kind == "torus":
            return rng.uniform(0.0, self.period, size=(count, self.n))
        v = rng.standard_normal((count, self.n))
        v /= np.linalg.norm(v, axis=1, keepdims=True)
        return v * rng.uniform(0, 1, (count, 1)) ** (1.0 / self.n)

    def best_margins(self, points) -> np.ndarray:
        return np.array([self.locate(p)[2] for p in np.asarray(points)])


def make_sphere_atlas(n: int, radius: float = SPHERE_CHART_RADIUS, samples: int = 10_000, seed: int = 0) -> Atlas:
    """Two stereographic charts on S^n restricted to balls of ``radius``.

    Every point lies in the closed unit ball of one chart, so a radius of 2
    gives niceness margin 1.  The margin is measured over ``samples`` random
    points and stored on the atlas.
    """
    if n < 2:
        raise ValueError("sphere atlas needs n >= 2")
    atlas = Atlas(n=n, kind="sphere", charts=[Chart(0, radius, sign=1), Chart(1, radius, sign=-1)])
    rng = np.random.default_rng(seed)
    pts = atlas.sample_points(samples, rng)
    # vectorised best-margin scan: the chart with the smaller |x| wins
    r0 = np.linalg.norm(atlas.from_manifold(0, pts), axis=1)
    with np.errstate(divide="ignore"):
        r1 = np.linalg.norm(atlas.from_manifold(1, pts), axis=1)
    atlas.margin = float(np.min(radius - np.minimum(r0, r1)))
    return atlas


def make_torus_atlas(n: int, period: float = 4.0) -> Atlas:
    """Flat torus R^n/(period Z)^n covered by translates of one ball chart."""
    spacing = period / 2.0
    radius = 1.0 + math.sqrt(n) * spacing / 2.0
    centers = np.stack(np.meshgrid(*[np.arange(2) * spacing] * n, indexing="ij"), -1).reshape(-1, n)
    charts = [Chart(i, radius, center=tuple(float(v) for v in c)) for i, c in enumerate(centers)]
    return Atlas(n=n, kind="torus", charts=charts, period=period, margin=radius - math.sqrt(n) * spacing / 2.0)


def make_ball_atlas(n: int, radius: float = 1.0) -> Atlas:
    return Atlas(n=n, kind="ball", charts=[Chart(0, radius)], margin=radius)


def chart_grid(n: int, radius: float, per_axis: int) -> np.ndarray:
    """Points of a ``per_axis``-per-axis cube lattice lying in the closed ball."""
    axis = np.linspace(-radius, radius, per_axis)
    pts = np.stack(np.meshgrid(*[axis] * n, indexing="ij"), -1).reshape(-1, n)
    keep = np.linalg.norm(pts, axis=1) <= radius * (1 + 1e-12)
    return pts[keep]


# ---------------------------------------------------------------------------
# metric fields


class MetricField:
    """A metric on a manifold presented chart by chart, with a jet oracle."""

    def __init__(self, dim: int, jet_fns: Sequence[Callable], atlas: Atlas | None = None,
                 mode: str = "analytic", name: str = "", eval_fns: Sequence[Callable] | None = None,
                 fd_step: float = DEFAULT_FD_STEP):
        self.dim = dim
        self._jets = list(jet_fns)
        self._evals = list(eval_fns) if eval_fns is not None else None
        self.atlas = atlas
        self.mode = mode
        self.name = name
        self.fd_step = fd_step

    @property
    def n_charts(self) -> int:
        return len(self._jets)

    def jet(self, x, chart: int = 0) -> FieldJet:
        return self._jets[chart](np.asarray(x, dtype=float))

    def eval(self, x, chart: int = 0) -> np.ndarray:
        if self._evals is not None:
            return self._evals[chart](np.asarray(x, dtype=float))
        return self.jet(x, chart).g

    def deriv(self, x, J: tuple[int, ...] = (), chart: int = 0) -> np.ndarray:
        """Matrix of ``d_J g_ij`` for a multi-index given as a tuple of axes, ``|J| <= 2``."""
        jet = self.jet(x, chart)
        if len(J) == 0:
            return jet.g
        if len(J) == 1:
            return jet.dg[..., J[0]]
        if len(J) == 2:
            return jet.ddg[..., J[0], J[1]]
        raise ValueError("derivative oracle only covers |J| <= 2")

    def with_fd(self, h: float = DEFAULT_FD_STEP) -> "MetricField":
        """The same metric with derivatives replaced by central differences."""
        evals = [(lambda x, c=c: self.eval(x, c)) for c in range(self.n_charts)]
        return fd_field(self.dim, evals, self.atlas, h=h, name=self.name)

    def check_spd(self, per_axis: int = 9) -> None:
        for chart in range(self.n_charts):
            radius = self.atlas.charts[chart].radius if self.atlas else 1.0
            pts = chart_grid(self.dim, radius, per_axis)
            g = self.eval(pts, chart)
            if np.any(np.linalg.eigvalsh(g) <= 0.0):
                raise NotPositiveDefinite(f"{self.name or 'metric'} is not SPD on chart {chart}")


def _fd_jet(fn: Callable, x: np.ndarray, n: int, h: float) -> FieldJet:
    g = fn(x)
    eye = np.eye(n) * h
    plus = [fn(x + eye[k]) for k in range(n)]
    minus = [fn(x - eye[k]) for k in range(n)]
    dg = np.stack([(plus[k] - minus[k]) / (2 * h) for k in range(n)], axis=-1)
    ddg = np.empty(g.shape + (n, n))
    for k in range(n):
        ddg[..., k, k] = (plus[k] - 2 * g + minus[k]) / h**2
        for l in range(k + 1, n):
            val = (fn(x + eye[k] + eye[l]) - fn(x + eye[k] - eye[l])
                   - fn(x - eye[k] + eye[l]) + fn(x - eye[k] - eye[l])) / (4 * h * h)
            ddg[..., k, l] = val
            ddg[..., l, k] = val
    return FieldJet(g, dg, ddg)


def fd_field(dim: int, eval_fns: Sequence[Callable], atlas: Atlas | None = None,
             h: float = DEFAULT_FD_STEP, name: str = "") -> MetricField:
    jets = [(lambda x, f=f: _fd_jet(f, x, dim, h)) for f in eval_fns]
    return MetricField(dim, jets, atlas, mode="fd", name=name, eval_fns=eval_fns, fd_step=h)


def constant_field(matrix, atlas: Atlas, name: str = "constant") -> MetricField:
    mat = np.asarray(matrix, dtype=float)
    n = mat.shape[0]

    def jet(x):
        lead = x.shape[:-1]
        return FieldJet(np.broadcast_to(mat, lead + (n, n)).copy(),
                        np.zeros(lead + (n, n, n)), np.zeros(lead + (n, n, n, n)))

    return MetricField(n, [jet] * len(atlas.charts), atlas, name=name)


def parse_metric_spec(spec: str) -> tuple[str, tuple[float, ...]]:
    """Parse ``round``, ``flat``, ``ellipsoid:1,1,2`` or ``bumpy:0.2,3``."""
    name, _, rest = spec.strip().partition(":")
    name = name.strip().lower()
    params = tuple(float(v) for v in rest.split(",") if v.strip()) if rest else ()
    if name not in {"round", "flat", "ellipsoid", "bumpy"}:
        raise ValueError(f"unknown metric {name!r}")
    return name, params


def builtin_metric(name: str, atlas: Atlas, params: Sequence[float] = (), rotation=None) -> MetricField:
    """Built-in metric expressed in every chart of ``atlas`` with analytic derivatives.

    On the sphere the metric is induced by an immersion (identity, a diagonal
    stretch, or a radial bump), optionally precomposed with a rotation
    ``rotation`` of S^n, which realises the pullback by that isometry.
    """
    if ":" in name:
        name, params = parse_metric_spec(name)
    params = tuple(float(v) for v in params)
    n = atlas.n
    if name == "flat":
        return constant_field(np.eye(n), atlas, name="flat")
    if atlas.kind != "sphere":
        raise ValueError(f"metric {name!r} needs a sphere atlas")
    if name == "ellipsoid":
        if len(params) != n + 1 or min(params) <= 0:
            raise ValueError(f"ellipsoid needs {n + 1} positive semi-axes, got {params}")
    elif name == "bumpy":
        if len(params) != 2:
            raise ValueError("bumpy needs (amp, freq)")
        if not abs(params[0]) < 0.5:
            raise NotPositiveDefinite("bumpy amplitude must be below 0.5")
    elif name == "round":
        params = ()
    else:
        raise ValueError(f"unknown metric {name!r}")
    rot = None if rotation is None else tuple(tuple(float(v) for v in row) for row in np.asarray(rotation))

    def make(sign):
        def jet(x):
            _, d1, d2, d3 = immersion_jet(x, n, sign, name, params, rot)
            return FieldJet(*induced_metric_jet(d1, d2, d3))
        return jet

    label = name if not params else f"{name}:{','.join(f'{v:g}' for v in params)}"
    fld = MetricField(n, [make(ch.sign) for ch in atlas.charts], atlas, name=label)
    fld.check_spd()
    return fld


# ---------------------------------------------------------------------------
# schedules and families


@dataclass(frozen=True)
class Schedule:
    """A scalar function of t with closed-form first and second derivatives."""

    value: Callable
    d1: Callable
    d2: Callable
    name: str = ""

    def __call__(self, t):
        return self.value(t)


def constant_schedule(v: float) -> Schedule:
    return Schedule(lambda t: np.full(np.shape(t), float(v)), lambda t: np.zeros(np.shape(t)),
                    lambda t: np.zeros(np.shape(t)), name=f"const({v:g})")


def linear_schedule(slope: float, offset: float = 0.0) -> Schedule:
    return Schedule(lambda t: offset + slope * np.asarray(t, dtype=float),
                    lambda t: np.full(np.shape(t), float(slope)), lambda t: np.zeros(np.shape(t)),
                    name=f"linear({slope:g},{offset:g})")


def _tile_t(t, lead):
    return np.broadcast_to(np.asarray(t, dtype=float), lead)


class MetricFamily:
    """A t-indexed family of metrics on the charts of an atlas."""

    dim: int
    atlas: Atlas
    t_interval: tuple[float, float]

    def jet(self, x, t, chart: int = 0) -> FamilyJet:
        raise NotImplementedError

    def eval(self, x, t, chart: int = 0) -> np.ndarray:
        return self.jet(x, t, chart).g

    @property
    def n_charts(self) -> int:
        return len(self.atlas.charts)


class ConstantFamily(MetricFamily):
    def __init__(self, fld: MetricField, t_interval=(0.0, math.inf)):
        self.field = fld
        self.dim = fld.dim
        self.atlas = fld.atlas
        self.t_interval = tuple(t_interval)

    def jet(self, x, t, chart=0):
        j = self.field.jet(x, chart)
        return FamilyJet(j.g, j.dg, j.ddg, np.zeros_like(j.g), np.zeros_like(j.g), np.zeros_like(j.dg))


class InterpolatedFamily(MetricFamily):
    """``sigma + s(t) (g - sigma)`` with exact endpoints when ``s`` is 0 or 1."""

    def __init__(self, sigma: MetricField, target: MetricField, schedule: Schedule, t_interval=(0.0, math.inf)):
        self.sigma = sigma
        self.target = target
        self.schedule = schedule
        self.dim = sigma.dim
        self.atlas = sigma.atlas
        self.t_interval = tuple(t_interval)

    def jet(self, x, t, chart=0):
        x = np.asarray(x, dtype=float)
        lead = x.shape[:-1]
        t = _tile_t(t, lead)
        a = self.sigma.jet(x, chart)
        b = self.target.jet(x, chart)
        s, s1, s2 = self.schedule.value(t), self.schedule.d1(t), self.schedule.d2(t)

        def mix(p, q, k):
            sk = s.reshape(lead + (1,) * k)
            out = p + sk * (q - p)
            out = np.where(sk == 0.0, p, out)
            return np.where(sk == 1.0, q, out)

        def scale(v, k, arr):
            return v.reshape(lead + (1,) * k) * arr

        dg, dgx = b.g - a.g, b.dg - a.dg
        return FamilyJet(mix(a.g, b.g, 2), mix(a.dg, b.dg, 3), mix(a.ddg, b.ddg, 4),
                         scale(s1, 2, dg), scale(s2, 2, dg), scale(s1, 3, dgx))


def family_from_interpolation(sigma: MetricField, target: MetricField, schedule: Schedule,
                              t_interval=(0.0, math.inf), check_grid: int = 7) -> InterpolatedFamily:
    fam = InterpolatedFamily(sigma, target, schedule, t_interval)
    if check_grid:
        for chart in range(fam.n_charts):
            pts = chart_grid(fam.dim, fam.atlas.charts[chart].radius, check_grid)
            a, b = sigma.eval(pts, chart), target.eval(pts, chart)
            for s in np.linspace(0.0, 1.0, 5):
                if np.any(np.linalg.eigvalsh(a + s * (b - a)) <= 0.0):
                    raise NotPositiveDefinite(f"interpolant at s={s} not SPD on chart {chart}")
    return fam


class ScaledFamily(MetricFamily):
    """``w(t) g_t`` for a scalar schedule ``w``."""

    def __init__(self, base: MetricFamily, weight: Schedule):
        self.base = base
        self.weight = weight
        self.dim = base.dim
        self.atlas = base.atlas
        self.t_interval = base.t_interval

    def jet(self, x, t, chart=0):
        x = np.asarray(x, dtype=float)
        lead = x.shape[:-1]
        t = _tile_t(t, lead)
        j = self.base.jet(x, t, chart)
        w0, w1, w2 = (f(t) for f in (self.weight.value, self.weight.d1, self.weight.d2))
        e2 = lambda v: v.reshape(lead + (1, 1))
        e3 = lambda v: v.reshape(lead + (1, 1, 1))
        e4 = lambda v: v.reshape(lead + (1, 1, 1, 1))
        return FamilyJet(e2(w0) * j.g, e3(w0) * j.gx, e4(w0) * j.gxx,
                         e2(w1) * j.g + e2(w0) * j.gt,
                         e2(w2) * j.g + 2 * e2(w1) * j.gt + e2(w0) * j.gtt,
                         e3(w1) * j.gx + e3(w0) * j.gtx)


class ReparametrizedFamily(MetricFamily):
    """``g_{phi(s)}`` for a reparametrisation ``phi`` (a shift when ``phi(s) = s + b``)."""

    def __init__(self, base: MetricFamily, phi: Schedule, s_interval):
        self.base = base
        self.phi = phi
        self.dim = base.dim
        self.atlas = base.atlas
        self.t_interval = tuple(s_interval)

    def jet(self, x, s, chart=0):
        x = np.asarray(x, dtype=float)
        lead = x.shape[:-1]
        s = _tile_t(s, lead)
        t, p1, p2 = self.phi.value(s), self.phi.d1(s), self.phi.d2(s)
        j = self.base.jet(x, t, chart)
        e2 = lambda v: v.reshape(lead + (1, 1))
        e3 = lambda v: v.reshape(lead + (1, 1, 1))
        return FamilyJet(j.g, j.gx, j.gxx, e2(p1) * j.gt, e2(p1**2) * j.gtt + e2(p2) * j.gt, e3(p1) * j.gtx)


def shifted_family(base: MetricFamily, b: float) -> ReparametrizedFamily:
    lo, hi = base.t_interval
    return ReparametrizedFamily(base, linear_schedule(1.0, b), (lo - b, hi - b))


class CallableFamily(MetricFamily):
    """Family given directly by a jet function ``(x, t) -> FamilyJet`` on every chart."""

    def __init__(self, dim: int, jet_fn: Callable, atlas: Atlas, t_interval, name: str = ""):
        self.dim = dim
        self._fn = jet_fn
        self.atlas = atlas
        self.t_interval = tuple(t_interval)
        self.name = name

    def jet(self, x, t, chart=0):
        x = np.asarray(x, dtype=float)
        return self._fn(x, _tile_t(t, x.shape[:-1]), chart)


# ---------------------------------------------------------------------------
# variable metrics


def warp_jet(kind: str, t):
    """``(w, w', w'')`` for the warp factor multiplying ``g_t``."""
    t = np.asarray(t, dtype=float)
    if kind == "exp":
        e = np.exp(2 * t)
        return e, 2 * e, 4 * e
    if kind == "sinh":
        return np.sinh(t) ** 2, np.sinh(2 * t), 2 * np.cosh(2 * t)
    if kind == "none":
        return np.ones_like(t), np.zeros_like(t), np.zeros_like(t)
    raise ValueError(f"unknown warp {kind!r}")


def assemble_variable_jet(fj: FamilyJet, w, w1, w2) -> FieldJet:
    """Jet of ``w(t) g_t + dt^2`` in the coordinates ``(x_1..x_n, t)``."""
    n = fj.g.shape[-1]
    lead = fj.g.shape[:-2]
    m = n + 1
    e2 = lambda v: np.asarray(v).reshape(lead + (1, 1))
    e3 = lambda v: np.asarray(v).reshape(lead + (1, 1, 1))
    e4 = lambda v: np.asarray(v).reshape(lead + (1, 1, 1, 1))
    H = np.zeros(lead + (m, m))
    H[..., :n, :n] = e2(w) * fj.g
    H[..., n, n] = 1.0
    dH = np.zeros(lead + (m, m, m))
    dH[..., :n, :n, :n] = e3(w) * fj.gx
    dH[..., :n, :n, n] = e2(w1) * fj.g + e2(w) * fj.gt
    ddH = np.zeros(lead + (m, m, m, m))
    ddH[..., :n, :n, :n, :n] = e4(w) * fj.gxx
    mixed = e3(w1) * fj.gx + e3(w) * fj.gtx
    ddH[..., :n, :n, :n, n] = mixed
    ddH[..., :n, :n, n, :n] = mixed
    ddH[..., :n, :n, n, n] = e2(w2) * fj.g + 2 * e2(w1) * fj.gt + e2(w) * fj.gtt
    return FieldJet(H, dH, ddH)


@dataclass
class VariableMetric:
    """``warp(t) g_t + dt^2`` on (chart of M) x I; ``warp`` is exp (e^2t), sinh (sinh^2 t) or none."""

    family: MetricFamily
    warp: str = "sinh"
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.warp not in {"exp", "sinh", "none"}:
            raise ValueError(f"unknown warp {self.warp!r}")

    @property
    def dim(self) -> int:
        return self.family.dim + 1

    @property
    def atlas(self) -> Atlas:
        return self.family.atlas

    def jet(self, x, t, chart: int = 0) -> FieldJet:
        x = np.asarray(x, dtype=float)
        t = _tile_t(t, x.shape[:-1])
        return assemble_variable_jet(self.family.jet(x, t, chart), *warp_jet(self.warp, t))

    def eval(self, x, t, chart: int = 0) -> np.ndarray:
        return self.jet(x, t, chart).g
