# tests/test_geometry.py

import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from finslab.catalog import killing_hopf
from finslab.errors import NotPositiveDefiniteError, PreconditionError
from finslab.geometry import (
    OneForm,
    RiemannMetric,
    alpha_b_derivatives,
    beta_invariants,
    levi_civita,
    spray_alpha,
)


def test_euclidean_christoffel_vanishes():
    gamma = levi_civita(RiemannMetric.euclidean(3), [0.1, 0.2, 0.3])
    assert gamma.norm == 0.0


def test_polar_christoffel():
    a = RiemannMetric.diagonal([1.0, "x1^2"])
    gamma = levi_civita(a, [2.0, 0.5]).components
    assert gamma[0, 1, 1] == pytest.approx(-2.0)
    assert gamma[1, 0, 1] == pytest.approx(0.5)
    assert gamma[1, 1, 0] == pytest.approx(0.5)
    assert gamma[0, 0, 0] == pytest.approx(0.0)


def test_spray_alpha_of_polar_metric():
    a = RiemannMetric.diagonal([1.0, "x1^2"])
    G = spray_alpha(a, [2.0, 0.0], [1.0, 1.0]).components
    # G^i = ½ Γ^i_jk y^j y^k
    assert_allclose(G, [-1.0, 0.5])


def test_spray_alpha_needs_nonzero_direction():
    with pytest.raises(PreconditionError):
        spray_alpha(RiemannMetric.euclidean(2), [0.0, 0.0], [0.0, 0.0])


def test_metric_must_be_positive_definite():
    a = RiemannMetric([[1.0, 2.0], [2.0, 1.0]])
    with pytest.raises(NotPositiveDefiniteError):
        a.at([0.0, 0.0])


def test_metric_rejects_y_dependence():
    with pytest.raises(PreconditionError):
        RiemannMetric.diagonal(["1 + y1^2", 1.0])
    with pytest.raises(PreconditionError):
        OneForm(["y1", 0.0])


def test_metric_uses_upper_triangle():
    a = RiemannMetric([[2.0, 0.5], [99.0, 3.0]])
    assert_allclose(a.at([0.0, 0.0]), [[2.0, 0.5], [0.5, 3.0]])


def test_invariants_of_twodim_example():
    a = RiemannMetric.diagonal([1.0, "exp(2*x1)"])
    beta = OneForm([1.0, 0.0])
    x, y = [0.3, -0.1], [0.4, 0.9]
    inv = beta_invariants(a, beta, x, y)
    A = a.at(x)
    # r_ij = a_ij − b_i b_j, s_ij = 0, b = 1
    assert_allclose(inv.r, A - np.outer(inv.b_lower, inv.b_lower), atol=1e-13)
    assert_allclose(inv.s, 0.0, atol=1e-13)
    assert_allclose(inv.s_j, 0.0, atol=1e-13)
    assert inv.b == pytest.approx(1.0)
    assert inv.r_00 == pytest.approx(float(np.asarray(y) @ inv.r @ np.asarray(y)))


def test_invariants_of_constant_form_on_flat_space():
    inv = beta_invariants(RiemannMetric.euclidean(2), OneForm([0.3, 0.4]), [0.1, 0.1], [1.0, 0.0])
    assert_allclose(inv.bij, 0.0)
    assert inv.b2 == pytest.approx(0.25)
    assert set(inv.as_dict()) >= {"r_ij", "s_ij", "s^i_j", "r_j", "s_j", "r_00", "s^i_0", "b2"}


def test_hopf_form_is_killing_and_unit():
    M = killing_hopf("square", scale=0.5)
    inv = beta_invariants(M.a, M.beta, [0.8, 0.1, -0.2], [0.3, 0.5, 0.7])
    assert_allclose(inv.r, 0.0, atol=1e-12)
    assert_allclose(inv.s_j, 0.0, atol=1e-12)
    assert inv.b == pytest.approx(0.5)
    assert np.max(np.abs(inv.s)) > 0.05


def test_alpha_derivatives_along_b():
    a = RiemannMetric.diagonal([1.0, "1 + x1^2"])
    beta = OneForm([0.2, 0.1])
    x, y = [0.5, 0.0], [0.6, -0.3]
    A = a.at(x)
    b = beta.vector(x)
    alpha = math.sqrt(float(np.asarray(y) @ A @ np.asarray(y)))
    b2 = float(b @ np.linalg.solve(A, b))
    s = float(b @ np.asarray(y)) / alpha
    d = alpha_b_derivatives(a, beta, x, y, order=3)
    assert d[0] == pytest.approx(alpha)
    assert d[1] == pytest.approx(s)
    assert d[2] == pytest.approx((b2 - s * s) / alpha)
    assert d[3] == pytest.approx(-3.0 * s * (b2 - s * s) / alpha ** 2)
