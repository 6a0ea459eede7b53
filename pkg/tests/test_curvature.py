from __future__ import annotations

import numpy as np

from hypwarp.curvature import (christoffel, christoffel_bound, pinching_report, sectional_curvature_arrays,
                               sectional_curvatures)
from hypwarp.metric_model import ConstantFamily, VariableMetric, constant_field, make_torus_atlas
from hypwarp.regularity import check_bounded


def test_flat_christoffel_zero():
    tor = make_torus_atlas(2)
    g = constant_field(np.eye(2), tor, "flat")
    assert np.all(christoffel(g, np.zeros((3, 2)), 0) == 0)


def test_round_christoffel_closed_form(round_metric):
    x = np.random.default_rng(0).uniform(-1, 1, (10, 2))
    gam = christoffel(round_metric, x, 0)
    dphi = -2 * x / (1 + np.sum(x * x, axis=1, keepdims=True))
    eye = np.eye(2)
    ref = (np.einsum("ik,pj->pkij", eye, dphi) + np.einsum("jk,pi->pkij", eye, dphi)
           - np.einsum("ij,pk->pkij", eye, dphi))
    assert np.allclose(gam, ref, atol=1e-12)
    assert np.allclose(christoffel(round_metric, np.zeros((1, 2)), 0), 0.0)


def test_christoffel_bound(ellipsoid):
    c = 1.01 * check_bounded(ellipsoid).c_hat
    x = np.random.default_rng(1).uniform(-1.4, 1.4, (200, 2))
    for chart in (0, 1):
        assert np.abs(christoffel(ellipsoid, x, chart)).max() < christoffel_bound(c, 2)


def test_hyperbolic_warps(round_metric):
    t = np.linspace(1, 10, 30)
    x = np.random.default_rng(2).uniform(-1, 1, (30, 2))
    for h in (VariableMetric(ConstantFamily(round_metric), "sinh"),
              VariableMetric(ConstantFamily(constant_field(np.eye(2), make_torus_atlas(2))), "exp")):
        K, _, _ = sectional_curvature_arrays(h, 0, x, t, planes=4, seed=0)
        assert np.abs(K + 1).max() < 1e-6


def test_product_metric(round_metric):
    h = VariableMetric(ConstantFamily(round_metric), "none")
    K, _, _ = sectional_curvature_arrays(h, 0, np.array([[0.3, -0.2]]), np.array([0.5]), planes=0)
    assert np.allclose(K[0], [1.0, 0.0, 0.0], atol=1e-12)


def test_fd_curvature_close(round_metric):
    g = round_metric.with_fd(1e-3)
    samples = sectional_curvatures(g, [(0, [0.2, 0.1])], planes_per_point=2, seed=1)
    assert all(s.method == "finite-difference" for s in samples)
    assert all(abs(s.K - 1.0) < 1e-4 for s in samples)


def test_pinching_report_round_deform(round_metric):
    from hypwarp.warp_deform import DeformationParams, deform

    rep = pinching_report(deform(round_metric, DeformationParams(3.0, 8.0)), (0.5, 12.0), 1e-6, samples=200)
    assert rep["pass"]
    assert sum(rep["histogram"]["counts"]) == rep["samples"]


def test_deformed_ellipsoid_core_and_transition(ellipsoid):
    from hypwarp.warp_deform import DeformationParams, deform

    h = deform(ellipsoid, DeformationParams(6.0, 16.0))
    assert pinching_report(h, (0.5, 6.0), 1e-6, samples=300)["pass"]
    outer = pinching_report(h, (8.0, 12.0), 1e-6, samples=300)
    assert outer["sup_abs_K_plus_1"] > 1e-3
