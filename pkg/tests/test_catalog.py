# tests/test_catalog.py

import numpy as np
import pytest

from finslab.catalog import CATALOG, catalog_get, catalog_list, expected_verdicts, killing_hopf
from finslab.errors import CatalogError
from finslab.finsler import ABMetric, GenericMetric, f_value
from finslab.geometry import beta_invariants


def test_catalog_lists_every_entry():
    names = [entry["name"] for entry in catalog_list()]
    assert names == list(CATALOG)
    for name in ("euclid_parallel", "funk_type", "twodim_constant_s", "killing_hopf",
                 "square", "matsumoto", "randers", "uni", "product_parallel"):
        assert name in names


def test_unknown_entry():
    with pytest.raises(CatalogError):
        catalog_get("hilbert")
    with pytest.raises(CatalogError):
        expected_verdicts("hilbert")


def test_unknown_parameter():
    with pytest.raises(CatalogError, match="Parâmetros desconhecidos"):
        catalog_get("funk_type", {"k": 1.0})


def test_build_failure_becomes_catalog_error():
    with pytest.raises(CatalogError, match="Falha ao construir"):
        catalog_get("euclid_parallel", {"phi": "cubic"})


def test_funk_is_euclidean_at_origin(funk_metric):
    assert isinstance(funk_metric, GenericMetric)
    y = np.array([0.6, -0.8])
    assert f_value(funk_metric, np.zeros(2), y) == pytest.approx(1.0, rel=1e-12)


def test_parameters_reach_the_builder():
    M = catalog_get("euclid_parallel", {"n": 3, "phi": "matsumoto", "b": 0.3})
    assert isinstance(M, ABMetric)
    assert M.n == 3
    assert M.phi.kind == "matsumoto"
    assert M.b_norm([0.1, 0.2, 0.3]) == pytest.approx(0.3)


def test_killing_hopf_passes_self_check():
    M = killing_hopf("square", scale=0.5)
    inv = beta_invariants(M.a, M.beta, np.array([0.7, 0.0, 0.3]), np.array([1.0, 0.0, 0.0]))
    assert np.max(np.abs(inv.r)) < 1e-8
    assert np.max(np.abs(inv.s_j)) < 1e-8
    assert inv.b == pytest.approx(0.5)


def test_twodim_entry_has_constant_b():
    M = catalog_get("twodim_constant_s", {"k": 0.2})
    for x in ([0.0, 0.0], [0.3, -0.4]):
        assert M.b_norm(x) == pytest.approx(1.0)


def test_expected_verdicts():
    assert expected_verdicts("funk_type")["berwald"] == "fail"
    assert expected_verdicts("killing_hopf")["lemma_cs0"] == "b"
    assert expected_verdicts("product_parallel")["isotropic_s"] == "vanishing"
    assert expected_verdicts("square") == {}
    # cópia: alterar o resultado não mexe no catálogo
    expected_verdicts("funk_type")["berwald"] = "pass"
    assert expected_verdicts("funk_type")["berwald"] == "fail"


def test_twodim_default_builds_on_truncated_domain():
    M = catalog_get("twodim_constant_s")
    assert isinstance(M, ABMetric)
    assert 0.8 < M.phi.b0 < 0.95
    y = np.array([0.3, 1.0])
    assert f_value(M, np.array([0.1, 0.2]), y) > 0.0
