# tests/test_deriv.py

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from numpy.testing import assert_allclose

from finslab import deriv
from finslab.catalog import catalog_get
from finslab.deriv import Jet, JetSpace, MultiIndex, eval_jet, fd_oracle, jet_inverse, seed_variables
from finslab.errors import DomainError, PreconditionError
from finslab.expr import as_field


def test_polynomial_partials_are_exact():
    # f = x1 * y1^2 * y2
    f = lambda xs, ys: xs[0] * ys[0] ** 2 * ys[1]
    jet = eval_jet(f, [2.0, 0.0], [3.0, 5.0], 1, 3)
    assert jet.value == pytest.approx(2.0 * 9.0 * 5.0)
    assert jet.partial((1, 0, 0, 0)) == pytest.approx(45.0)
    assert jet.partial((0, 0, 2, 1)) == pytest.approx(4.0)
    assert jet.partial((1, 0, 2, 1)) == pytest.approx(2.0)
    assert jet.partial((0, 0, 3, 0)) == pytest.approx(0.0)


def test_elementary_functions_match_closed_forms():
    space, xs, _ = seed_variables([0.3], [1.0], 3, 0)
    u = xs[0]
    assert_allclose(deriv.exp(u).coef, [math.exp(0.3) / math.factorial(k) for k in range(4)])
    s = deriv.sin(u)
    assert s.partial((3, 0)) == pytest.approx(-math.cos(0.3))
    lg = deriv.log(u)
    assert lg.partial((2, 0)) == pytest.approx(-1.0 / 0.09)
    sq = deriv.sqrt(u)
    assert sq.partial((1, 0)) == pytest.approx(0.5 / math.sqrt(0.3))


def test_power_and_division_agree():
    space, xs, ys = seed_variables([0.4], [1.5], 2, 2)
    a = (xs[0] + ys[0]) ** -1
    b = 1.0 / (xs[0] + ys[0])
    assert_allclose(a.coef, b.coef, rtol=1e-14)


@pytest.mark.parametrize("x0", [2.0, -0.5])
def test_reciprocal_has_exact_taylor_coefficients(x0):
    space, xs, _ = seed_variables([x0], [1.0], 5, 0)
    inv = 1.0 / xs[0]
    assert np.all(np.isfinite(inv.coef))
    for k in range(6):
        expected = (-1) ** k * math.factorial(k) / x0 ** (k + 1)
        assert inv.partial((k, 0)) == pytest.approx(expected, rel=1e-13)


def test_negative_powers_stay_finite():
    space, xs, ys = seed_variables([0.4], [1.5], 3, 3)
    u = xs[0] + ys[0]
    for p in (-1, -2, -1.5):
        jet = u ** p
        assert np.all(np.isfinite(jet.coef))
        assert jet.partial((1, 2)) == pytest.approx(p * (p - 1) * (p - 2) * 1.9 ** (p - 3), rel=1e-12)


def test_domain_errors():
    space, xs, _ = seed_variables([-1.0], [1.0], 1, 0)
    with pytest.raises(DomainError):
        deriv.log(xs[0])
    with pytest.raises(DomainError):
        deriv.sqrt(xs[0])
    zero = Jet.variable(space, 0, 0.0)
    with pytest.raises(DomainError):
        deriv.sqrt(zero)
    with pytest.raises(DomainError):
        deriv.divide(1.0, 0.0)


def test_order_limits():
    with pytest.raises(PreconditionError):
        MultiIndex((-1, 0))
    with pytest.raises(PreconditionError):
        MultiIndex((5, 5))
    with pytest.raises(PreconditionError):
        deriv.point_space(2, 5, 5)


def test_multi_index_of():
    mi = MultiIndex.of(2, x=[0], y=[1, 1])
    assert mi.orders == (1, 0, 0, 2)
    assert mi.order_x == 1 and mi.order_y == 2
    assert mi.permuted_variables() == (0, 3, 3)


def test_jet_inverse_of_matrix_jet():
    space, xs, _ = seed_variables([0.2, -0.1], [0.0, 0.0], 3, 0)
    A = Jet.stack([
        Jet.stack([deriv.exp(xs[0]) + 1.0, xs[0] * xs[1]]),
        Jet.stack([xs[0] * xs[1], 2.0 + deriv.sin(xs[1])]),
    ])
    product = deriv.jeinsum("ij,jk->ik", A, jet_inverse(A))
    identity = Jet.constant(space, np.eye(2))
    assert_allclose(product.coef, identity.coef, atol=1e-12)


def test_grad_axes_come_last():
    f = lambda xs, ys: Jet.stack([xs[0] * ys[1], ys[0] * ys[0]])
    jet = eval_jet(f, [1.0, 2.0], [3.0, 4.0], 1, 1)
    gy = jet.grad_y()
    assert gy.shape == (2, 2)
    assert_allclose(gy.value, [[0.0, 1.0], [6.0, 0.0]])
    gx = jet.grad_x()
    assert_allclose(gx.value, [[4.0, 0.0], [0.0, 0.0]])


def test_homogeneous_field_rejects_zero_direction():
    M = catalog_get("funk_type", {"n": 2})
    with pytest.raises(DomainError):
        eval_jet(M, [0.0, 0.0], [0.0, 0.0], 1, 1)


def test_euler_residual_for_homogeneous_field():
    f = as_field("sqrt((1 + x1^2)*y1^2 + y2^2) + 0.3*y1", 2)
    assert deriv.euler_residual(f, [0.2, 0.1], [0.7, -0.4]) < 1e-14
    g = as_field("y1^2 + y2^2", 2)
    assert deriv.euler_residual(g, [0.0, 0.0], [1.0, 2.0], degree=2.0) < 1e-14


def test_fd_oracle_second_order():
    f = as_field("exp(x1)*y1^3", 1)
    # ∂x ∂y² = 6 e^x y
    assert fd_oracle(f, [0.3], [1.2], (1, 2)) == pytest.approx(6.0 * math.exp(0.3) * 1.2, rel=1e-6)


TEMPLATES = [
    "exp({a}*x1)*sqrt(1 + y1^2 + {b}*y2^2)",
    "sin({a}*x1 + x2)*y1*y2 + {b}*cos(x2)*y2^3",
    "log(2 + {a}*x1^2 + y1^2)*(1 + {b}*y2)",
]


@settings(max_examples=40, deadline=None)
@given(
    template=st.sampled_from(TEMPLATES),
    a=st.floats(0.2, 0.8),
    b=st.floats(0.2, 0.8),
    orders=st.tuples(*[st.integers(0, 1)] * 4).filter(lambda o: 1 <= sum(o) <= 3),
)
def test_jets_agree_with_finite_differences(template, a, b, orders):
    f = as_field(template.format(a=repr(a), b=repr(b)), 2)
    x, y = [0.1, -0.2], [0.7, 0.6]
    jet = eval_jet(f, x, y, orders[0] + orders[1], orders[2] + orders[3])
    exact = jet.partial(orders)
    approx = fd_oracle(f, x, y, orders)
    assert abs(exact - approx) <= 1e-6 * max(abs(exact), 1.0)


def test_mixed_spaces_project_to_common_box():
    big = JetSpace.of(1, 1, 2, 3)
    small = JetSpace.of(1, 1, 1, 2)
    a = Jet.variable(big, 0, 1.0)
    b = Jet.variable(small, 1, 2.0)
    c = a * b
    assert c.space.order_x == 1 and c.space.order_y == 2
    assert c.partial((1, 1)) == pytest.approx(1.0)
