"""The model block B^n x (-(1+xi), 1+xi) with sigma = e^{2t} I + dt^2, and C^2 deviation norms."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Callable

import numpy as np

from . import constants as K
from .errors import CenterOutOfRange, EvaluationFailure
from .metric_model import FieldJet, VariableMetric, chart_grid

GRID_PER_AXIS = 17
GRID_NT = 33


@dataclass(frozen=True)
class ModelBlock:
    n: int
    xi: float = 0.0
    per_axis: int = GRID_PER_AXIS
    nt: int = GRID_NT

    @property
    def half_length(self) -> float:
        return 1.0 + self.xi

    def points(self) -> tuple[np.ndarray, np.ndarray]:
        """Grid ``(x, t)``: ball lattice points times an evenly spaced t axis."""
        pts = chart_grid(self.n, 1.0, self.per_axis)
        ts = np.linspace(-self.half_length, self.half_length, self.nt)
        return np.repeat(pts, len(ts), axis=0), np.tile(ts, len(pts))

    def sigma_jet(self, x, t) -> FieldJet:
        n = self.n
        t = np.broadcast_to(np.asarray(t, dtype=float), np.shape(x)[:-1])
        lead = t.shape
        e = np.exp(2 * t)[..., None, None] * np.eye(n)
        H = np.zeros(lead + (n + 1, n + 1))
        H[..., :n, :n] = e
        H[..., n, n] = 1.0
        dH = np.zeros(lead + (n + 1,) * 3)
        dH[..., :n, :n, n] = 2 * e
        ddH = np.zeros(lead + (n + 1,) * 4)
        ddH[..., :n, :n, n, n] = 4 * e
        return FieldJet(H, dH, ddH)

    def sigma(self, x, t) -> np.ndarray:
        return self.sigma_jet(x, t).g

    def grid_info(self) -> dict:
        return {"per_axis": self.per_axis, "nt": self.nt, "xi": self.xi}


def derivative_classes(n: int) -> list[tuple[str, tuple[int, ...]]]:
    """Names and axis tuples of the 1 + (n+1) + (n+1)(n+2)/2 derivative classes."""
    names = [f"x{i}" for i in range(n)] + ["t"]
    out = [("c0", ())]
    out += [(f"d_{names[k]}", (k,)) for k in range(n + 1)]
    out += [(f"d_{names[k]}{names[l]}", (k, l)) for k in range(n + 1) for l in range(k, n + 1)]
    return out


@dataclass
class DeviationReport:
    c0: float
    sups: dict
    c2_norm: float
    grid: dict
    attaining_point: list
    attaining_class: str
    per_point: np.ndarray | None = field(default=None, repr=False)

    def to_dict(self) -> dict:
        d = asdict(self)
        d.pop("per_point")
        return d


def _block_jet(f, x, t) -> FieldJet:
    if isinstance(f, VariableMetric):
        return f.jet(x, t, 0)
    return f(x, t)


def deviation(f, block: ModelBlock, keep_points: bool = False) -> DeviationReport:
    """Sampled C^2 norm of ``f - sigma`` on the block grid.

    ``f`` is a :class:`VariableMetric` on the unit ball atlas or a callable
    ``(x, t) -> FieldJet`` in the coordinates ``(x_1..x_n, t)``.
    """
    x, t = block.points()
    jet = _block_jet(f, x, t)
    ref = block.sigma_jet(x, t)
    diffs = [jet.g - ref.g, jet.dg - ref.dg, jet.ddg - ref.ddg]
    for d, what in zip(diffs, ("value", "first derivative", "second derivative")):
        if not np.all(np.isfinite(d)):
            k = int(np.argwhere(~np.isfinite(d.reshape(len(x), -1)))[0, 0])
            raise EvaluationFailure(f"non-finite {what} of the pulled-back metric",
                                    location={"x": x[k].tolist(), "t": float(t[k])})
    sups, per_class = {}, []
    for name, J in derivative_classes(block.n):
        arr = diffs[len(J)]
        sl = arr[(Ellipsis,) + J] if J else arr
        per_pt = np.abs(sl).reshape(len(x), -1).max(axis=1)
        sups[name] = float(per_pt.max())
        per_class.append(per_pt)
    stack = np.stack(per_class, axis=1)
    per_point = stack.max(axis=1)
    k = int(np.argmax(per_point))
    names = [name for name, _ in derivative_classes(block.n)]
    return DeviationReport(c0=sups["c0"], sups=sups, c2_norm=float(per_point[k]), grid=block.grid_info(),
                           attaining_point=[*x[k].tolist(), float(t[k])], attaining_class=names[int(np.argmax(stack[k]))],
                           per_point=np.column_stack([x, t, per_point]) if keep_points else None)


def admissible_centers(t_interval, xi: float) -> tuple[float, float]:
    """The set I(xi) of centers t0 with t0 + (-(1+xi), 1+xi) inside ``t_interval``."""
    lo, hi = t_interval
    return lo + 1.0 + xi, hi - 1.0 - xi


def check_center(t0: float, t_interval, xi: float) -> None:
    lo, hi = admissible_centers(t_interval, xi)
    if not (lo <= t0 <= hi):
        raise CenterOutOfRange(f"t0 = {t0:g} is outside I(xi) = [{lo:g}, {hi:g}]")


@dataclass
class RadialVerdict:
    verdict: bool
    eps: float
    worst: DeviationReport
    worst_center: dict
    centers: list

    def to_dict(self) -> dict:
        return {"verdict": self.verdict, "eps": self.eps, "worst": self.worst.to_dict(),
                "worst_center": self.worst_center, "centers": self.centers}


def radially_close_verdict(h: VariableMetric, centers, xi: float, eps: float, c: float,
                           chart_supplier: Callable | None = None, block: ModelBlock | None = None,
                           executor=None) -> RadialVerdict:
    """Build a product chart at every ``(p, t0)`` center, pull ``h`` back and compare with sigma.

    ``p`` is a manifold point or a ``(chart, coords)`` pair.  The verdict is
    ``max deviation < eps``.
    """
    from .chart_builder import chart_for, pullback

    block = block or ModelBlock(h.family.dim, xi)
    supplier = chart_supplier or (lambda hh, p, t0: chart_for(hh, p, t0, c, xi))
    centers = list(centers)
    for _, t0 in centers:
        check_center(t0, h.family.t_interval, xi)

    def one(center):
        p, t0 = center
        chart = supplier(h, p, t0)
        rep = deviation(pullback(h, chart), block)
        return chart, rep

    results = list(executor.map(one, centers)) if executor is not None else [one(ctr) for ctr in centers]
    rows, worst, worst_center = [], None, None
    for (chart, rep), (p, t0) in zip(results, centers):
        row = {"chart": chart.chart, "x": chart.x_p.tolist(), "t0": float(t0), "lambda": chart.lam,
               "deviation": rep.c2_norm}
        rows.append(row)
        if worst is None or rep.c2_norm > worst.c2_norm:
            worst, worst_center = rep, row
    return RadialVerdict(verdict=bool(worst.c2_norm < eps), eps=float(eps), worst=worst,
                         worst_center=worst_center, centers=rows)


def hyperbolic_threshold(eps: float, n_plus_1: int, xi: float = 0.0, c_sphere: float | None = None) -> float:
    """Radius ln(C1(c_sphere, n, xi) / eps) beyond which hyperbolic space is radially eps-close."""
    if not eps > 0:
        raise ValueError("eps must be positive")
    val = K.hyperbolic_radius(eps, n_plus_1 - 1, xi, c_sphere)
    return float(val) if math.isfinite(float(val)) else math.inf
