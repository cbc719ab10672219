# tests/test_scurvature.py

import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from finslab import curvature, scurvature
from finslab.catalog import catalog_get, killing_hopf
from finslab.classifiers import SampleGrid
from finslab.errors import PreconditionError
from finslab.finsler import GenericMetric, f_value


def test_unit_ball_volume():
    assert scurvature.unit_ball_volume(2) == pytest.approx(math.pi)
    assert scurvature.unit_ball_volume(3) == pytest.approx(4.0 * math.pi / 3.0)


def test_sigma_of_euclidean_norm_is_one():
    M = catalog_get("euclid_parallel", {"phi": "randers:1,0,0"})
    sample = scurvature.bh_sigma(M, [0.1, 0.2])
    assert sample.sigma == pytest.approx(1.0, rel=1e-10)
    assert sample.error < 1e-10


def test_sigma_of_riemannian_metric_is_root_determinant():
    M = catalog_get("product_parallel", {"phi": "randers:1,0,0"})
    # det a = e^{2x¹}
    assert scurvature.bh_sigma(M, [0.3, 0.0, 0.0]).sigma == pytest.approx(math.exp(0.3), rel=1e-9)


def test_factorized_gradient_matches_quadrature(square_metric):
    x = [0.2, -0.1]
    fast = scurvature.log_sigma_gradient(square_metric, x, "factorized")
    slow = scurvature.log_sigma_gradient(square_metric, x, "quadrature")
    assert_allclose(fast, slow, atol=1e-5)


def test_factorized_gradient_needs_ab_metric(funk_metric):
    with pytest.raises(PreconditionError):
        scurvature.log_sigma_gradient(funk_metric, [0.0, 0.0], "factorized")
    with pytest.raises(PreconditionError):
        scurvature.log_sigma_gradient(funk_metric, [0.0, 0.0], "midpoint")


def test_sphere_rule_only_up_to_three_dimensions():
    M = GenericMetric("sqrt(y1^2 + y2^2 + y3^2 + y4^2)", 4)
    with pytest.raises(PreconditionError):
        scurvature.bh_sigma(M, [0.0] * 4)


def test_riemannian_metric_has_no_s_curvature():
    M = catalog_get("product_parallel", {"phi": "randers:1,0,0"})
    assert abs(scurvature.s_curvature(M, [0.3, 0.1, -0.2], [0.5, 0.4, -0.7])) < 1e-8


def test_killing_form_has_no_s_curvature():
    M = killing_hopf("square", scale=0.5)
    for y in ([0.3, 0.5, 0.7], [1.0, -0.2, 0.1]):
        S = scurvature.s_curvature(M, [0.8, 0.1, -0.2], y)
        assert abs(S) / f_value(M, [0.8, 0.1, -0.2], y) < 1e-8


def test_twodim_example_has_constant_s_curvature():
    M = catalog_get("twodim_constant_s", {"k": 0.1})
    x = np.array([0.1, -0.2])
    directions = SampleGrid._directions_at(M, x, 8, seed=3)
    profile = scurvature.isotropy_profile(M, x, directions)
    # S = (n + 1) k F com k = 0.1
    assert profile["c"] == pytest.approx(0.1, abs=1e-4)
    assert profile["spread"] < 1e-4
    assert len(profile["samples"]) == 8


def test_mean_berwald_from_s_matches_pack(square_metric):
    x, y = [0.1, 0.2], [1.0, 0.3]
    from_s = scurvature.e_from_s(square_metric, x, y).components
    from_pack = curvature.mean_berwald(square_metric, x, y).components
    assert_allclose(from_s, from_pack, rtol=1e-9, atol=1e-12)
