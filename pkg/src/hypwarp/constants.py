"""Closed-form constant chain behind the chart deviation estimates.

Everything is evaluated with mpmath at ``PRECISION`` decimal digits so that
large dimensions or boundedness constants never overflow or saturate.  The
individual constants are exposed as plain functions returning ``mpf`` values;
:func:`ledger` bundles them for one set of inputs.

Naming: ``c1`` .. ``c13`` follow the estimate chain of the chart construction,
``c14`` is the constant of the component-to-slowness bridge and
``max_deviation_bound`` is the maximum of ``c9`` .. ``c13``.
"""

from __future__ import annotations

import math
import sys
from dataclasses import dataclass, field

import mpmath as mp

from .errors import InputOutOfRange, Overflow

PRECISION = 40
FLOAT_MAX = mp.mpf(sys.float_info.max)


def _mpf(x) -> mp.mpf:
    return x if isinstance(x, mp.mpf) else mp.mpf(x)


def _fact(n: int) -> mp.mpf:
    return mp.factorial(n)


def _edge(xi) -> mp.mpf:
    return mp.exp(2 * (1 + _mpf(xi)))


def sphere_bound(n: int) -> float:
    """Declared boundedness constant of the round metric in the radius-2 stereographic atlas.

    The conformal factor 4/(1+r^2)^2 has C^2 entries at most 16 and
    determinant at least (4/25)^n on the chart, so every c above
    max(16, 6.25^n) works; a 1% margin keeps the inequalities strict.
    """
    return 1.01 * max(16.0, 6.25**n)


def c1(n: int, c) -> mp.mpf:
    c = _mpf(c)
    return mp.mpf(3) / 2 * _fact(n) * c ** (mp.mpf(2 * n + 3) / 2)


def c2(n: int, c) -> mp.mpf:
    c = _mpf(c)
    return c**1.5 + mp.mpf(3) / 2 * _fact(n) * c ** (n + 2)


def c3(n: int, c) -> mp.mpf:
    c = _mpf(c)
    return 3 * c**1.5 + mp.mpf(9) / 2 * _fact(n) * c ** (n + 2)


def c4(n: int, c) -> mp.mpf:
    return mp.sqrt(n * _fact(n) * _mpf(c) ** n)


def c5(n: int, c, eps) -> mp.mpf:
    return 3 * n**2 * c4(n, c) ** 2 * _mpf(c) * _mpf(eps)


def c6(n: int, c, eps, t0) -> mp.mpf:
    return _mpf(eps) * n**3 * c3(n, c) * c4(n, c) ** 3 * mp.exp(-_mpf(t0))


def c7(n: int, c, xi, eps, t0) -> mp.mpf:
    return n * c4(n, c) * mp.exp(-_mpf(t0)) + (1 + _mpf(xi)) * c5(n, c, eps)


def c8(n: int, c, t0) -> mp.mpf:
    return n**3 * c4(n, c) ** 3 * _mpf(c) * mp.exp(-_mpf(t0))


def c9(n: int, c, xi, eps, t0) -> mp.mpf:
    return _edge(xi) * (mp.sqrt(n) * c8(n, c, t0) + c7(n, c, xi, eps, t0))


def c10(n: int, c, xi, t0) -> mp.mpf:
    return _edge(xi) * n**4 * c4(n, c) ** 4 * _mpf(c) ** 2 * mp.exp(-_mpf(t0))


def c11(n: int, c, xi, eps, t0) -> mp.mpf:
    return 2 * c9(n, c, xi, eps, t0) + _edge(xi) * c5(n, c, eps)


def c12(n: int, c, xi, eps, t0) -> mp.mpf:
    return 4 * c9(n, c, xi, eps, t0) + 5 * _edge(xi) * c5(n, c, eps)


def c13(n: int, c, xi, eps, t0) -> mp.mpf:
    return 2 * c10(n, c, xi, t0) + _edge(xi) * c6(n, c, eps, t0)


def max_deviation_bound(n: int, c, xi, eps, t0) -> mp.mpf:
    return max(c9(n, c, xi, eps, t0), c10(n, c, xi, t0), c11(n, c, xi, eps, t0),
               c12(n, c, xi, eps, t0), c13(n, c, xi, eps, t0))


def big_c(n: int, c, xi) -> mp.mpf:
    """C(c, n, xi) = (27 + 4 xi) e^{2(1+xi)} n^4 c4^4 c3 c^2."""
    c = _mpf(c)
    return (27 + 4 * _mpf(xi)) * _edge(xi) * n**4 * c4(n, c) ** 4 * c3(n, c) * c**2


def big_c1(n: int, c, xi) -> mp.mpf:
    """Constant for the sinh warp: 30 C(6^n c, n, xi)."""
    return 30 * big_c(n, mp.mpf(6) ** n * _mpf(c), xi)


def c14(n: int, c) -> mp.mpf:
    return mp.mpf(3) / 2 * mp.mpf(n) ** 1.5 * _fact(n) * _mpf(c) ** (n + 2)


def eps3_coeffs(n: int, c) -> tuple[mp.mpf, mp.mpf]:
    """``(a, b)`` with eps3 = a eps1 + b eps2."""
    scale = n**2 * (_fact(n) * _mpf(c) ** n) ** 1.5
    return 2 * c14(n, c) * scale, n * scale


def eps3(n: int, c, eps1, eps2) -> mp.mpf:
    a, b = eps3_coeffs(n, c)
    return a * _mpf(eps1) + b * _mpf(eps2)


def a_prime(n: int, xi) -> mp.mpf:
    return 3 * _edge(xi) * (n + 6 * c14(n, 2)) * n**2 * (_fact(n) * mp.mpf(2) ** n) ** 1.5


def two_bounded_threshold(n: int, xi) -> mp.mpf:
    """Closeness below which the t-family of a close block metric is 2-bounded."""
    return 1 / (36 * _fact(n) * _edge(xi))


def interpolation_bound(n: int, x) -> mp.mpf:
    """x' = [n! x^(n+1)]^n, the boundedness constant of the segment between two x/2-bounded metrics."""
    return (_fact(n) * _mpf(x) ** (n + 1)) ** n


def slowness_function(n: int, x) -> mp.mpf:
    """A(n, x) = x (a(n, x') + b(n, x'))."""
    a, b = eps3_coeffs(n, interpolation_bound(n, x))
    return _mpf(x) * (a + b)


def eps_g_bound(c_g, n: int, c_sphere=None) -> mp.mpf:
    c_sphere = sphere_bound(n) if c_sphere is None else c_sphere
    return slowness_function(n, _mpf(c_g) + _mpf(c_sphere))


def big_c2(n: int, c, xi, eps_g) -> mp.mpf:
    return (1 + 12 * _mpf(eps_g)) * big_c1(n, c, xi)


def hyperbolic_radius(eps, n: int, xi, c_sphere=None) -> mp.mpf:
    """ln(C1(c_sphere, n, xi) / eps); ``+inf`` for eps = 0."""
    c_sphere = sphere_bound(n) if c_sphere is None else c_sphere
    eps = _mpf(eps)
    if eps <= 0:
        return mp.inf
    return mp.log(big_c1(n, c_sphere, xi) / eps)


@dataclass
class ConstantsLedger:
    inputs: dict
    values: dict
    overflow: list = field(default_factory=list)

    def __getitem__(self, key):
        return self.values[key]

    def float(self, key: str) -> float:
        v = self.values[key]
        if v != mp.inf and abs(v) > FLOAT_MAX:
            raise Overflow(f"{key} = {mp.nstr(v, 8)} exceeds double range")
        return float(v)

    def to_dict(self) -> dict:
        out = {}
        for key, v in self.values.items():
            if v == mp.inf:
                out[key] = "inf"
            elif key in self.overflow:
                out[key] = mp.nstr(v, 17)
            else:
                out[key] = float(v)
        return {"inputs": dict(self.inputs), "values": out, "overflow": list(self.overflow)}


def ledger(n: int, c, xi=0.0, eps=0.0, t0=1.0, eps_g=None, c_sphere=None) -> ConstantsLedger:
    """Evaluate every constant for one set of inputs.

    ``c`` is the boundedness constant entering C, C1 and C2.  For the
    deformation thresholds pass ``c = c_g + c_sphere``; ``eps_g`` then
    defaults to A(n, c), the bound for the interpolation family.
    """
    if not (isinstance(n, int) and n >= 2):
        raise InputOutOfRange(f"n must be an integer >= 2, got {n!r}")
    checks = {"c": (c, lambda v: v > 1), "xi": (xi, lambda v: v >= 0), "eps": (eps, lambda v: v >= 0),
              "t0": (t0, lambda v: v > 0)}
    for key, (v, ok) in checks.items():
        if not (math.isfinite(float(v)) and ok(float(v))):
            raise InputOutOfRange(f"{key} = {v!r} is out of range")
    c_sphere = sphere_bound(n) if c_sphere is None else float(c_sphere)
    with mp.workdps(PRECISION):
        g_eps = slowness_function(n, c) if eps_g is None else _mpf(eps_g)
        a, b = eps3_coeffs(n, c)
        v = {
            "c1": c1(n, c), "c2": c2(n, c), "c3": c3(n, c), "c4": c4(n, c),
            "c5": c5(n, c, eps), "c6": c6(n, c, eps, t0), "c7": c7(n, c, xi, eps, t0), "c8": c8(n, c, t0),
            "c9": c9(n, c, xi, eps, t0), "c10": c10(n, c, xi, t0), "c11": c11(n, c, xi, eps, t0),
            "c12": c12(n, c, xi, eps, t0), "c13": c13(n, c, xi, eps, t0),
        }
        v["max_deviation_bound"] = max(v[k] for k in ("c9", "c10", "c11", "c12", "c13"))
        v["C"] = big_c(n, c, xi)
        v["C1"] = big_c1(n, c, xi)
        v["eps_g"] = g_eps
        v["C2"] = big_c2(n, c, xi, g_eps)
        v["C2prime"] = mp.e * v["C2"]
        v["c14"] = c14(n, c)
        v["a_prime"] = a_prime(n, xi)
        v["two_bounded_threshold"] = two_bounded_threshold(n, xi)
        v["eps3_a"], v["eps3_b"] = a, b
        v["hyperbolic_radius"] = hyperbolic_radius(eps, n, xi, c_sphere)
        if eps > 0:
            v["a_threshold"] = mp.log(2 * v["C2"] / _mpf(eps)) + v["hyperbolic_radius"]
            v["d_threshold"] = 2 * v["C2"] / _mpf(eps)
        else:
            v["a_threshold"] = mp.inf
            v["d_threshold"] = mp.inf
        v["C_bound_at_t0"] = v["C"] * (mp.exp(-_mpf(t0)) + _mpf(eps))
    over = sorted(k for k, val in v.items() if val != mp.inf and abs(val) > FLOAT_MAX)
    inputs = {"n": n, "c": float(c), "xi": float(xi), "eps": float(eps), "t0": float(t0),
              "eps_g": None if eps_g is None else float(eps_g), "c_sphere": c_sphere}
    return ConstantsLedger(inputs=inputs, values=v, overflow=over)
