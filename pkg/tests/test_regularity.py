from __future__ import annotations

import math

import numpy as np
import pytest

from hypwarp import constants as K
from hypwarp.errors import NotBounded
from hypwarp.metric_model import (CallableFamily, ConstantFamily, FamilyJet, ScaledFamily, VariableMetric,
                                  builtin_metric, chart_grid, constant_field, linear_schedule, make_ball_atlas,
                                  make_torus_atlas)
from hypwarp.regularity import (C_FLOOR, check_bounded, check_slow_implies_components, check_components_imply_slow, converse_close_implies_slow,
                                measure_slowness, probe_fields, verify_slowness_stability)
from hypwarp.warp_deform import DeformationParams, deformation_family


def test_round_bounded(round_metric):
    rep = check_bounded(round_metric)
    assert math.isfinite(rep.c_hat) and rep.c_hat >= 4
    assert rep.c_hat < K.sphere_bound(2)


def test_flat_torus_floor():
    g = constant_field(np.eye(2), make_torus_atlas(2))
    assert check_bounded(g).c_hat == C_FLOOR


def test_ellipsoid_above_round(round_metric, ellipsoid):
    assert check_bounded(ellipsoid).c_hat > check_bounded(round_metric).c_hat


def test_constant_family_slow(round_metric):
    rep = measure_slowness(ConstantFamily(round_metric, (0.0, 1.0)))
    assert rep.eps1 == rep.eps2 == rep.direct_eps == 0.0


def test_rho_family_scaling(round_metric, ellipsoid):
    pts = chart_grid(2, 2.0, 9)
    sup = max(float(np.abs(ellipsoid.eval(pts, k) - round_metric.eval(pts, k)).max()) for k in (0, 1))
    reps = {}
    for d in (16.0, 32.0):
        fam = deformation_family(ellipsoid, DeformationParams(6.0, d))
        reps[d] = measure_slowness(fam, t_grid=np.linspace(6.0, 6.0 + d / 2, 33))
        assert reps[d].eps1 <= 6 / d * sup
    assert 0.45 <= reps[32.0].direct_eps / reps[16.0].direct_eps <= 0.55


def test_linear_family(round_metric):
    fam = ScaledFamily(ConstantFamily(round_metric, (0.0, 1.0)), linear_schedule(0.1, 1.0))
    rep = measure_slowness(fam, t_range=(0.0, 1.0))
    assert rep.eps1 == pytest.approx(0.1 * 4.0)


def test_explicit_c_must_dominate(round_metric):
    with pytest.raises(NotBounded):
        measure_slowness(ConstantFamily(round_metric, (0.0, 1.0)), c=5.0)


def test_probe_fields_cover_coordinates():
    fields = probe_fields(2, samples=4, linear=2, seed=0)
    kinds = [f.kind for f in fields]
    assert kinds.count("coordinate") == 4 and kinds.count("coordinate-sum") == 2
    assert kinds.count("constant") == 4 and kinds.count("linear") == 2


def test_slowness_stability(atlas, ellipsoid):
    rot = np.array([[0.0, -1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 1.0]])
    params = DeformationParams(6.0, 16.0)
    fam = deformation_family(ellipsoid, params)
    rot_fam = deformation_family(builtin_metric("ellipsoid:1,1,2", atlas, rotation=rot), params)
    out = verify_slowness_stability(fam, (7.0, 13.0), b=1.0, scale=2.0, rotated=rot_fam)
    assert out["shift"]["pass"]
    assert out["reparam"]["ratio"] <= 6.0
    assert out["pullback"]["pass"]
    assert out["pass"]


def test_bridge_bounds(ellipsoid):
    rep = measure_slowness(deformation_family(ellipsoid, DeformationParams(6.0, 16.0)), t_range=(6.0, 14.0))
    assert check_components_imply_slow(rep)["pass"]
    assert check_slow_implies_components(rep, 2)["pass"]


def _tau_block(tau):
    ball = make_ball_atlas(2)

    def jet(x, t, chart):
        lead = x.shape[:-1]
        e = np.exp(-2 * t)[..., None, None]
        z3, z4 = np.zeros(lead + (2, 2, 2)), np.zeros(lead + (2, 2, 2, 2))
        return FamilyJet(np.eye(2) + e * tau, z3, z4, -2 * e * tau, 4 * e * tau, z3)

    return VariableMetric(CallableFamily(2, jet, ball, (-1.0, 1.0)), "exp")


def test_converse_tau_example():
    tau = np.array([[2e-5, 1e-5], [1e-5, -1e-5]])
    h = _tau_block(tau)
    out = converse_close_implies_slow(h, 1e-4, 0.0)
    assert out["closeness"] == pytest.approx(2e-5, rel=1e-9)
    assert out["threshold_met"] and out["two_bounded"] and out["slow_pass"]
    t = np.linspace(-1, 1, 17)
    j = h.family.jet(np.zeros((17, 2)), t)
    assert np.abs(j.gt).max() <= 3 * math.e**2 * 2e-5
    assert out["eps1"] == pytest.approx(4 * math.e**2 * 2e-5, rel=1e-9)


def test_exact_block_slow():
    out = converse_close_implies_slow(_tau_block(np.zeros((2, 2))), 1e-3, 0.0)
    assert out["measured"] == 0.0 and out["pass"]
