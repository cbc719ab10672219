# tests/test_phi.py

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from finslab import settings as settings_module
from finslab.errors import DomainError, PreconditionError
from finslab.phi import (
    MatsumotoPhi,
    RandersTypePhi,
    SquarePhi,
    UniPhi,
    parse_phi_spec,
    q_series,
    q_theta_psi,
    randers_type_fit,
    regularity_check,
    solve_isotropic_ode,
)


def test_square_derivatives():
    phi = SquarePhi()
    assert list(phi.derivatives(0.3, 3)) == pytest.approx([1.69, 2.6, 2.0, 0.0])


def test_q_of_square_and_matsumoto():
    assert q_series(SquarePhi(), 0.2, 0)[0] == pytest.approx(2.0 / 0.8)
    assert q_series(MatsumotoPhi(), 0.2, 0)[0] == pytest.approx(1.0 / 0.6)


def test_outside_radius_is_domain_error():
    with pytest.raises(DomainError):
        SquarePhi()(1.5)
    with pytest.raises(DomainError):
        MatsumotoPhi().derivatives(-1.0, 2)


@settings(max_examples=30, deadline=None)
@given(s=st.floats(-0.9, 0.9), k=st.floats(-0.5, 0.5), q=st.floats(0.0, 1.0))
def test_uni_q_is_closed_form(s, k, q):
    phi = UniPhi(1.0, k, q, 1.0)
    qt = q_theta_psi(phi, s, 1.0)
    assert qt.Q == pytest.approx(phi.q_exact(s), rel=1e-8, abs=1e-9)
    # Q = ks + q√(1 − s²) satisfies (1 − s²)Q'' + Q − sQ' = 0
    assert abs((1.0 - s * s) * qt.Qpp + qt.Q - s * qt.Qp) < 1e-7


def test_uni_without_q_is_randers_type():
    fit = randers_type_fit(UniPhi(1.0, 0.5, 0.0, 1.0))
    assert fit.randers_type
    assert fit.c1 == pytest.approx(1.0, rel=1e-6)
    assert fit.c2 == pytest.approx(0.5, rel=1e-6)
    assert abs(fit.c3) < 1e-6


def test_square_is_not_randers_type():
    assert not randers_type_fit(SquarePhi()).randers_type
    assert randers_type_fit(RandersTypePhi(1.0, -0.3, 0.2)).randers_type


def test_uni_rejects_bad_parameters():
    with pytest.raises(PreconditionError):
        UniPhi(0.0, 0.5, 1.0, 1.0)
    with pytest.raises(PreconditionError):
        UniPhi(1.0, 0.5, -1.0, 1.0)


@pytest.mark.parametrize(
    "phi, b, label",
    [
        (SquarePhi(), 0.5, "regular"),
        (SquarePhi(), 1.0, "almost-regular"),
        (MatsumotoPhi(), 0.3, "regular"),
        (MatsumotoPhi(), 0.9, "irregular"),
    ],
)
def test_regularity_labels(phi, b, label):
    assert regularity_check(phi, b).label == label


def test_regularity_needs_b_inside_radius():
    with pytest.raises(PreconditionError):
        regularity_check(SquarePhi(), 1.5)


def test_regularity_reports_worst_s_as_scalar():
    report = regularity_check(SquarePhi(), 1.0)
    assert report.witness is None
    assert report.scalars["s"] == pytest.approx(-1.0)
    assert report.scalars["margin"] == pytest.approx(0.0, abs=1e-12)


@pytest.mark.parametrize("m", [0.2, 0.5, 1.0])
def test_ode_without_source_recovers_square_root(m):
    phi = solve_isotropic_ode(0.0, 2, 1.0, 0.0, m)
    for s in (-0.6, -0.1, 0.3, 0.8):
        assert phi(s) == pytest.approx(math.sqrt(1.0 + m * s * s), rel=1e-8)
        assert phi.state(s)[0] == pytest.approx(m * s, abs=1e-8)


def test_ode_truncates_domain_where_q_blows_up():
    phi = solve_isotropic_ode(0.1, 2, 1.0)
    assert 0.8 < phi.b0 < 0.95
    with pytest.raises(DomainError):
        phi(0.9)
    assert math.isfinite(phi(0.8))


def test_ode_residual_is_small():
    phi = solve_isotropic_ode(0.1, 2, 1.0)
    reach = settings_module.ODE_DOMAIN_FRACTION * phi.b0
    for s in np.linspace(-reach, reach, 9):
        assert phi.residual(float(s)) < settings_module.ODE_RESIDUAL_TOL


def test_ode_residual_detects_wrong_constant():
    phi = solve_isotropic_ode(0.1, 2, 1.0)
    phi.k = 0.2
    assert phi.residual(0.5) > 1e-3


def test_ode_taylor_matches_dense_output():
    phi = solve_isotropic_ode(0.1, 2, 1.0)
    h = 1e-3
    d = phi.derivatives(0.3, 1)
    Q = phi.state(0.3)[0]
    assert d[1] == pytest.approx(d[0] * Q / (1.0 + 0.3 * Q), rel=1e-10)
    assert d[1] == pytest.approx((phi(0.3 + h) - phi(0.3 - h)) / (2 * h), rel=1e-4)


@pytest.mark.parametrize("text", ["square", "matsumoto", "randers:1.0,0.5,0.2", "uni:1.0,0.5,1.0,1.0"])
def test_phi_text_round_trip(text):
    phi = parse_phi_spec(text)
    assert parse_phi_spec(phi.spec()).spec() == phi.spec()


def test_phi_text_radius_option():
    assert parse_phi_spec("square:b0=0.5").b0 == 0.5


@pytest.mark.parametrize("text", ["cubic", "randers:1,2", "odeP:0.1", "square:1", "square:x0=2"])
def test_bad_phi_text(text):
    with pytest.raises(PreconditionError):
        parse_phi_spec(text)
