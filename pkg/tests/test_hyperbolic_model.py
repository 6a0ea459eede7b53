from __future__ import annotations

import numpy as np
import pytest

from hypwarp.errors import CenterOutOfRange
from hypwarp.hyperbolic_model import (ModelBlock, admissible_centers, check_center, derivative_classes, deviation,
                                      hyperbolic_threshold, radially_close_verdict)
from hypwarp.metric_model import ConstantFamily, FieldJet, VariableMetric, constant_field, make_torus_atlas

BLOCK = ModelBlock(2, 0.0, per_axis=9, nt=9)


def test_class_count():
    for n in (2, 3):
        assert len(derivative_classes(n)) == 1 + (n + 1) + (n + 1) * (n + 2) // 2


def test_sigma_zero_deviation():
    rep = deviation(lambda x, t: BLOCK.sigma_jet(x, t), BLOCK)
    assert rep.c2_norm == 0.0 and all(v == 0.0 for v in rep.sups.values())


def test_constant_dt_offset():
    delta = 1e-3

    def f(x, t):
        j = BLOCK.sigma_jet(x, t)
        g = j.g.copy()
        g[..., 2, 2] += delta
        return FieldJet(g, j.dg, j.ddg)

    rep = deviation(f, BLOCK)
    assert rep.c0 == pytest.approx(delta)
    assert all(v == 0.0 for k, v in rep.sups.items() if k != "c0")


def test_space_block_offset():
    delta = 1e-3

    def f(x, t):
        j = BLOCK.sigma_jet(x, t)
        g = j.g.copy()
        g[..., :2, :2] += delta * np.eye(2)
        return FieldJet(g, j.dg, j.ddg)

    rep = deviation(f, BLOCK)
    assert rep.c0 == pytest.approx(delta)
    assert rep.sups["d_t"] == 0.0 and rep.c2_norm == pytest.approx(delta)


def test_monotone_under_larger_perturbation():
    def bumped(scale):
        def f(x, t):
            j = BLOCK.sigma_jet(x, t)
            g = j.g.copy()
            g[..., 0, 0] += scale * np.sin(x[..., 0])
            dg = j.dg.copy()
            dg[..., 0, 0, 0] += scale * np.cos(x[..., 0])
            ddg = j.ddg.copy()
            ddg[..., 0, 0, 0, 0] -= scale * np.sin(x[..., 0])
            return FieldJet(g, dg, ddg)
        return f

    small, big = deviation(bumped(1e-3), BLOCK), deviation(bumped(2e-3), BLOCK)
    assert all(big.sups[k] >= small.sups[k] for k in small.sups)
    assert big.c2_norm > small.c2_norm


def test_centers():
    assert admissible_centers((0.0, 10.0), 0.5) == (1.5, 8.5)
    check_center(1.5, (0.0, 10.0), 0.5)
    with pytest.raises(CenterOutOfRange):
        check_center(1.0, (0.0, 10.0), 0.5)


def _flat_block():
    tor = make_torus_atlas(2)
    return VariableMetric(ConstantFamily(constant_field(np.eye(2), tor, "flat")), "exp")


def test_exact_block_verdict():
    h = _flat_block()
    centers = [((0, np.array([0.1, 0.2])), 5.0), ((1, np.array([0.0, 0.0])), 5.0)]
    assert radially_close_verdict(h, centers, 0.0, 1e-2, 1 + 1e-9).verdict
    assert not radially_close_verdict(h, centers, 0.0, 0.0, 1 + 1e-9).verdict


def test_out_of_range_center():
    with pytest.raises(CenterOutOfRange):
        radially_close_verdict(_flat_block(), [((0, np.zeros(2)), 0.5)], 0.0, 1e-2, 1 + 1e-9)


def test_threshold_laws():
    a1 = hyperbolic_threshold(0.01, 3, 0.0, 4.5)
    a2 = hyperbolic_threshold(0.02, 3, 0.0, 4.5)
    assert a1 - a2 == pytest.approx(np.log(2), abs=1e-12)
    with pytest.raises(ValueError):
        hyperbolic_threshold(0.0, 3)
