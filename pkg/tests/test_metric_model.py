from __future__ import annotations

import numpy as np
import pytest

from hypwarp.errors import NotPositiveDefinite
from hypwarp.metric_model import (ConstantFamily, VariableMetric, builtin_metric, constant_schedule,
                                  family_from_interpolation, make_sphere_atlas, make_torus_atlas,
                                  parse_metric_spec)
from hypwarp.warp_deform import DeformationParams, rho_ad


def test_atlas_margin(atlas):
    assert len(atlas.charts) == 2
    assert atlas.margin >= 1.0 - 1e-12
    for p in ([1.0, 0.0, 0.0], [0.0, 1.0, 0.0]):
        assert all(atlas.chart_margin(k, atlas.from_manifold(k, np.array(p))) >= 1.0 - 1e-12 for k in (0, 1))


def test_north_pole_at_origin(atlas):
    ch, x, margin = atlas.locate(np.array([0.0, 0.0, 1.0]))
    assert np.allclose(x, 0.0)
    assert margin == atlas.charts[ch].radius


def test_random_points_margin(atlas):
    rng = np.random.default_rng(3)
    assert atlas.best_margins(atlas.sample_points(500, rng)).min() >= 1.0


def test_transition_roundtrip(atlas):
    rng = np.random.default_rng(0)
    x = rng.uniform(-0.9, 0.9, (50, 2))
    y = atlas.transition(0, 1, x)
    assert np.allclose(atlas.transition(1, 0, y), x)
    assert np.all(np.abs(np.linalg.det(atlas.transition_jacobian(0, 1, x))) > 0.01)


def test_round_at_origin(round_metric):
    assert np.allclose(round_metric.eval(np.zeros((1, 2)), 0)[0], 4 * np.eye(2))


def test_ellipsoid_and_bumpy_reduce_to_round(atlas, round_metric):
    rng = np.random.default_rng(1)
    x = rng.uniform(-1, 1, (40, 2))
    for spec in ("ellipsoid:1,1,1", "bumpy:0,3"):
        g = builtin_metric(spec, atlas)
        for chart in (0, 1):
            a, b = g.jet(x, chart), round_metric.jet(x, chart)
            for p, q in zip(a, b):
                assert np.abs(p - q).max() < 1e-12


@pytest.mark.parametrize("spec", ["round", "ellipsoid:1,1,2", "bumpy:0.2,3"])
def test_derivatives_match_fd(atlas, spec):
    g = builtin_metric(spec, atlas)
    x = np.random.default_rng(2).uniform(-0.8, 0.8, (20, 2))
    an = g.jet(x, 1)
    e1, e2 = [], []
    for h in (1e-3, 5e-4):
        fd = g.with_fd(h).jet(x, 1)
        e1.append(np.abs(fd.dg - an.dg).max())
        e2.append(np.abs(fd.ddg - an.ddg).max())
    assert e1[1] < 1e-4 and e2[1] < 1e-3
    assert e1[0] / e1[1] == pytest.approx(4.0, rel=0.1)
    assert e2[0] / e2[1] == pytest.approx(4.0, rel=0.1)


def test_chart_independence(atlas, ellipsoid):
    from hypwarp.curvature import sectional_curvature_arrays

    h = VariableMetric(ConstantFamily(ellipsoid), "none")
    p = np.array([1.0, 0.0, 0.0])
    xs = [atlas.from_manifold(k, p)[None] for k in (0, 1)]
    ks = [sectional_curvature_arrays(h, k, xs[k], np.array([0.3]), planes=0)[0][0, 0] for k in (0, 1)]
    assert ks[0] == pytest.approx(ks[1], abs=1e-6)


def test_parse_spec():
    assert parse_metric_spec("ellipsoid:1,1,2") == ("ellipsoid", (1.0, 1.0, 2.0))
    assert parse_metric_spec("round") == ("round", ())
    with pytest.raises(ValueError):
        parse_metric_spec("torus")


def test_bumpy_amplitude_rejected(atlas):
    with pytest.raises(NotPositiveDefinite):
        builtin_metric("bumpy:0.6,3", atlas)


def test_schedules(atlas, round_metric, ellipsoid):
    x = np.random.default_rng(0).uniform(-1, 1, (10, 2))
    t = np.full(10, 2.0)
    zero = family_from_interpolation(round_metric, ellipsoid, constant_schedule(0.0))
    one = family_from_interpolation(round_metric, ellipsoid, constant_schedule(1.0))
    assert np.array_equal(zero.eval(x, t, 0), round_metric.eval(x, 0))
    assert np.array_equal(one.eval(x, t, 0), ellipsoid.eval(x, 0))
    fam = family_from_interpolation(round_metric, ellipsoid, rho_ad(DeformationParams(5.0, 10.0)))
    assert np.array_equal(fam.eval(x, np.full(10, 5.0), 0), round_metric.eval(x, 0))


def test_torus_atlas_covers():
    tor = make_torus_atlas(2)
    rng = np.random.default_rng(0)
    assert tor.best_margins(tor.sample_points(200, rng)).min() >= 1.0


def test_variable_metric_product_structure(ellipsoid):
    h = VariableMetric(ConstantFamily(ellipsoid), "sinh")
    j = h.jet(np.zeros((3, 2)), np.array([1.0, 2.0, 3.0]), 0)
    assert np.all(j.g[:, 2, 2] == 1.0)
    assert np.all(j.g[:, :2, 2] == 0.0)
    assert np.allclose(j.g[:, :2, :2], np.sinh([1.0, 2.0, 3.0])[:, None, None] ** 2 * ellipsoid.eval(np.zeros((3, 2)), 0))


def test_sphere_atlas_needs_n2():
    with pytest.raises(ValueError):
        make_sphere_atlas(1)
