"""Symbolic jets of sphere immersions, compiled to numpy.

Every built-in sphere metric is the metric induced by an immersion
Phi = E o P of a stereographic chart P into R^(n+1).  Its components and
their derivatives follow from the derivatives of Phi up to order three, so
only those are generated symbolically.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np
import sympy as sp


def _embedding(kind: str, params: tuple[float, ...], p: list) -> list:
    if kind == "round":
        return list(p)
    if kind == "ellipsoid":
        return [sp.Float(a) * q for a, q in zip(params, p)]
    if kind == "bumpy":
        amp, freq = params
        radial = 1 + sp.Float(amp) * sp.sin(sp.Float(freq) * p[0]) * sp.cos(sp.Float(freq) * p[1])
        return [radial * q for q in p]
    raise ValueError(f"unknown immersion kind {kind!r}")


def stereo_inverse_exprs(ys, sign: int) -> list:
    r2 = sum(y**2 for y in ys)
    return [2 * y / (1 + r2) for y in ys] + [sign * (r2 - 1) / (1 + r2)]


@lru_cache(maxsize=None)
def _compiled(n: int, sign: int, kind: str, params: tuple, rotation: tuple | None):
    ys = sp.symbols(f"y0:{n}", real=True)
    p = stereo_inverse_exprs(ys, sign)
    if rotation is not None:
        q = [sp.Float(v) for row in rotation for v in row]
        p = [sum(q[i * (n + 1) + j] * p[j] for j in range(n + 1)) for i in range(n + 1)]
    phi = _embedding(kind, params, p)
    m = n + 1
    d1 = [[sp.diff(phi[a], ys[i]) for i in range(n)] for a in range(m)]
    d2 = [[[sp.diff(d1[a][i], ys[j]) for j in range(n)] for i in range(n)] for a in range(m)]
    d3 = [[[[sp.diff(d2[a][i][j], ys[k]) for k in range(n)] for j in range(n)] for i in range(n)] for a in range(m)]
    flat = list(phi)
    flat += [e for a in d1 for e in a]
    flat += [e for a in d2 for r in a for e in r]
    flat += [e for a in d3 for r in a for s in r for e in s]
    return sp.lambdify(ys, flat, modules="numpy", cse=True)


def immersion_jet(x: np.ndarray, n: int, sign: int, kind: str, params: tuple = (), rotation: tuple | None = None):
    """Return ``(Phi, D1, D2, D3)`` at chart points ``x`` of shape ``(..., n)``."""
    x = np.asarray(x, dtype=float)
    fn = _compiled(n, sign, kind, tuple(float(v) for v in params), rotation)
    lead = x.shape[:-1]
    vals = fn(*[x[..., i] for i in range(n)])
    arr = np.stack([np.broadcast_to(np.asarray(v, dtype=float), lead) for v in vals], axis=-1)
    m = n + 1
    sizes = [m, m * n, m * n * n, m * n * n * n]
    cuts = np.cumsum(sizes)[:-1]
    phi, d1, d2, d3 = np.split(arr, cuts, axis=-1)
    return (
        phi,
        d1.reshape(lead + (m, n)),
        d2.reshape(lead + (m, n, n)),
        d3.reshape(lead + (m, n, n, n)),
    )


def induced_metric_jet(d1, d2, d3):
    """Metric g = D1^T D1 and its first and second derivatives (derivative axes last)."""
    g = np.einsum("...ai,...aj->...ij", d1, d1)
    dg = np.einsum("...aik,...aj->...ijk", d2, d1)
    dg = dg + np.swapaxes(dg, -3, -2)
    ddg = np.einsum("...aikl,...aj->...ijkl", d3, d1) + np.einsum("...aik,...ajl->...ijkl", d2, d2)
    ddg = ddg + np.swapaxes(ddg, -4, -3)
    return g, dg, ddg
