"""Bounded factorization of SPD matrices.

A c-bounded Gram matrix G (entries below c, determinant above 1/c) is split
as G = F^T F with F = sqrt(D) O taken from the eigendecomposition
G = O^T D O.  The entry bounds on F and F^-1, and the eigenvalue window
1/(n! c^n) < mu < n c, are checked on every call.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import HypothesisViolated, NotSpd, ZeroVector

SYM_TOL = 1e-12
JACOBI_TOL = 1e-14


@dataclass(frozen=True)
class BoundedFactorization:
    F: np.ndarray
    F_inv: np.ndarray
    eigenvalues: np.ndarray
    c: float

    @property
    def n(self) -> int:
        return self.F.shape[0]

    @property
    def entry_bound(self) -> float:
        return self.n * math.sqrt(self.c)

    @property
    def inverse_entry_bound(self) -> float:
        n = self.n
        return n * math.sqrt(math.factorial(n - 1) * self.c**n)

    @property
    def eigen_window(self) -> tuple[float, float]:
        n = self.n
        return 1.0 / (math.factorial(n) * self.c**n), n * self.c


def jacobi_eigh(G: np.ndarray, tol: float = JACOBI_TOL, max_sweeps: int = 100):
    """Cyclic Jacobi eigensolver for a small symmetric matrix.

    Returns ``(mu, V)`` with ``G = V diag(mu) V^T`` and orthonormal columns
    in ``V``.  Sweeps stop once the off-diagonal Frobenius mass drops below
    ``tol * ||G||_F``.
    """
    a = np.array(G, dtype=float, copy=True)
    n = a.shape[0]
    v = np.eye(n)
    scale = np.linalg.norm(a)
    if scale == 0.0:
        return np.zeros(n), v
    for _ in range(max_sweeps):
        off = float(np.linalg.norm(a - np.diag(np.diag(a))))
        if off < tol * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                if abs(apq) < 1e-18 * min(abs(a[p, p]), abs(a[q, q])):
                    a[p, q] = a[q, p] = 0.0
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                if abs(theta) > 1e150:
                    t = 0.5 / theta
                else:
                    t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1.0))
                cs = 1.0 / math.sqrt(t * t + 1.0)
                sn = t * cs
                rot = np.eye(n)
                rot[p, p] = cs
                rot[q, q] = cs
                rot[p, q] = sn
                rot[q, p] = -sn
                a = rot.T @ a @ rot
                v = v @ rot
    else:
        raise ArithmeticError("Jacobi iteration did not converge")
    mu = np.diag(a).copy()
    order = np.argsort(mu)
    return mu[order], v[:, order]


def check_symmetric(G: np.ndarray) -> np.ndarray:
    G = np.asarray(G, dtype=float)
    if G.ndim != 2 or G.shape[0] != G.shape[1]:
        raise NotSpd(f"expected a square matrix, got shape {G.shape}")
    scale = max(np.max(np.abs(G)), 1e-300)
    if np.max(np.abs(G - G.T)) > SYM_TOL * scale:
        raise NotSpd("matrix is not symmetric")
    return 0.5 * (G + G.T)


def check_hypotheses(G: np.ndarray, c: float) -> None:
    """Raise unless max|G_ij| < c and |det G| > 1/c."""
    if not c > 1.0:
        raise HypothesisViolated(f"boundedness constant must exceed 1, got {c}", which="c")
    big = float(np.max(np.abs(G)))
    if not big < c:
        raise HypothesisViolated(f"max|G_ij| = {big:.6g} is not below c = {c:.6g}", which="entry")
    det = float(np.linalg.det(G))
    if not abs(det) > 1.0 / c:
        raise HypothesisViolated(f"|det G| = {det:.6g} is not above 1/c = {1.0 / c:.6g}", which="determinant")


def spd_factor(G, c: float) -> BoundedFactorization:
    """Factor ``G = F^T F`` with ``F = sqrt(D) O`` and verify the bound chain."""
    G = check_symmetric(G)
    mu, V = jacobi_eigh(G)
    if np.any(mu <= 0.0):
        raise NotSpd(f"non-positive eigenvalue {mu.min():.6g}")
    check_hypotheses(G, c)
    root = np.sqrt(mu)
    F = root[:, None] * V.T
    F_inv = V / root[None, :]
    fac = BoundedFactorization(F=F, F_inv=F_inv, eigenvalues=mu, c=float(c))

    lo, hi = fac.eigen_window
    if not (np.all(mu > lo) and np.all(mu < hi)):
        raise ArithmeticError(f"eigenvalues {mu} escape ({lo:.3g}, {hi:.3g})")
    if not np.max(np.abs(F)) < fac.entry_bound:
        raise ArithmeticError("entry bound on F failed")
    if not np.max(np.abs(F_inv)) < fac.inverse_entry_bound:
        raise ArithmeticError("entry bound on F^-1 failed")
    recon = np.max(np.abs(F.T @ F - G)) / np.max(np.abs(G))
    if recon > 1e-10:
        raise ArithmeticError(f"reconstruction error {recon:.3g}")
    return fac


def quadratic_form_sandwich(G, c: float, u) -> tuple[float, float, float]:
    """Return ``(|u|^2/(n! c^n), n c |u|^2, u^T G u)`` after checking the strict sandwich."""
    G = check_symmetric(G)
    check_hypotheses(G, c)
    u = np.asarray(u, dtype=float)
    norm2 = float(u @ u)
    if norm2 == 0.0:
        raise ZeroVector("u must be nonzero")
    n = G.shape[0]
    lower = norm2 / (math.factorial(n) * c**n)
    upper = n * c * norm2
    value = float(u @ G @ u)
    if not lower < abs(value) < upper:
        raise ArithmeticError(f"sandwich failed: {lower} < {value} < {upper}")
    return lower, upper, value
