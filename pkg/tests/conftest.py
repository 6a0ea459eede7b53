from __future__ import annotations

import pytest

from hypwarp.metric_model import builtin_metric, make_sphere_atlas


@pytest.fixture(scope="session")
def atlas():
    return make_sphere_atlas(2)


@pytest.fixture(scope="session")
def round_metric(atlas):
    return builtin_metric("round", atlas)


@pytest.fixture(scope="session")
def ellipsoid(atlas):
    return builtin_metric("ellipsoid:1,1,2", atlas)
