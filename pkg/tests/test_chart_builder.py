from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hypwarp import constants as K
from hypwarp.acceptance import random_bounded_spd
from hypwarp.chart_builder import (HypChart, PulledBackFamily, build_chart, chart_for, correction,
                                   eta_bound_check, pullback)
from hypwarp.errors import ChartConstructionFailure, DomainEscape
from hypwarp.hyperbolic_model import ModelBlock, deviation
from hypwarp.metric_model import ConstantFamily, VariableMetric, constant_field, make_torus_atlas
from hypwarp.warp_deform import sphere_centers


def test_round_chart_at_origin(round_metric):
    fam = ConstantFamily(round_metric)
    p = round_metric.atlas.to_manifold(0, np.zeros(2))
    hc = build_chart(fam, round_metric.atlas, p, 5.0, 4.5)
    assert hc.chart == 0
    assert np.allclose(np.abs(hc.A), 0.5 * np.eye(2))
    assert hc.c4 == pytest.approx(9.0)
    assert hc.lam == min(0.0, 5.0 - math.log(18.0)) == 0.0


def test_f00_exact(round_metric):
    h = VariableMetric(ConstantFamily(round_metric), "exp")
    for t0, c in ((5.0, 4.5), (2.0, 4.5), (3.0, 39.5)):
        hc = chart_for(h, np.array([0.6, 0.0, 0.8]), t0, c)
        g = pullback(h, hc).jet(np.zeros((1, 2)), np.zeros(1), 0).g[0]
        ref = np.eye(3)
        ref[:2, :2] *= math.exp(2 * hc.lam)
        assert np.allclose(g, ref, atol=1e-14)


def test_sinh_chart_uses_k_family(round_metric):
    h = VariableMetric(ConstantFamily(round_metric), "sinh")
    hc = chart_for(h, np.array([1.0, 0.0, 0.0]), 8.0, 4.5)
    assert hc.c == 36 * 4.5
    g = pullback(h, hc).jet(np.zeros((1, 2)), np.zeros(1), 0).g[0]
    assert np.allclose(g[:2, :2], math.exp(2 * hc.lam) * np.eye(2), atol=1e-13)


def test_flat_torus_chart():
    tor = make_torus_atlas(2)
    h = VariableMetric(ConstantFamily(constant_field(np.eye(2), tor, "flat")), "exp")
    hc = chart_for(h, (0, np.array([0.3, -0.4])), 6.0, 1 + 1e-9)
    assert np.allclose(np.abs(hc.A), np.eye(2)) and hc.lam == 0.0
    assert hc.scale == pytest.approx(math.exp(-6.0))
    assert deviation(pullback(h, hc), ModelBlock(2)).c2_norm < 1e-12


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), t0=st.floats(1.0, 6.0))
def test_image_ball_invariant(seed, t0):
    rng = np.random.default_rng(seed)
    G, c = random_bounded_spd(rng, 2)
    tor = make_torus_atlas(2)
    fam = ConstantFamily(constant_field(G, tor))
    hc = build_chart(fam, tor, (0, np.zeros(2)), t0, c)
    lam, _ = correction(t0, 2, c)
    assert hc.lam == lam <= 0.0
    assert hc.flagged == (lam < 0)
    assert hc.image_radius() < 1.0


def test_margin_failure(round_metric):
    with pytest.raises(ChartConstructionFailure):
        build_chart(ConstantFamily(round_metric), round_metric.atlas, (0, np.array([1.5, 0.0])), 5.0, 39.5)


def test_domain_escape(round_metric):
    hc = HypChart(chart=0, x_p=np.zeros(2), t0=1.0, A=10 * np.eye(2), lam=0.0, c=39.5, c4=1.0, xi=0.0)
    fam = PulledBackFamily(ConstantFamily(round_metric), hc)
    with pytest.raises(DomainEscape):
        fam.jet(np.array([[0.9, 0.0]]), np.zeros(1))


def test_eta_bound_round(round_metric):
    fam = ConstantFamily(round_metric)
    c = K.sphere_bound(2)
    centers = [(p, t0) for t0 in (3.0, 6.0, 10.0) for p in sphere_centers(2, 2)]
    out = eta_bound_check(fam, c, 0.0, centers, warp="exp", eps_hat=0.0)
    assert out["pass"] and out["T"] == 3.0
    assert out["bound_eta"] == pytest.approx(float(K.big_c(2, c, 0)) * math.exp(-3.0))
    sinh = eta_bound_check(fam, c, 0.0, centers, warp="sinh", eps_hat=0.0)
    assert sinh["constant"] == pytest.approx(float(30 * K.big_c(2, 36 * c, 0)))


def test_decay_in_t0(round_metric):
    h = VariableMetric(ConstantFamily(round_metric), "sinh")
    block = ModelBlock(2)
    p = np.array([0.0, 1.0, 0.0])
    devs = [deviation(pullback(h, chart_for(h, p, t0, K.sphere_bound(2))), block).c2_norm for t0 in (10, 12, 14)]
    assert devs[0] > devs[1] > devs[2]
    assert devs[1] / devs[0] == pytest.approx(math.exp(-2), rel=0.1)
