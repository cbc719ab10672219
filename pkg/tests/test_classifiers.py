# tests/test_classifiers.py

import numpy as np
import pytest
from numpy.testing import assert_allclose
from pydantic import ValidationError

from finslab import curvature, operations
from finslab.catalog import catalog_get, killing_hopf
from finslab.classifiers import (
    SampleGrid,
    _REDUCERS,
    classify,
    classify_berwald,
    gdw_projection,
    corollary1_check,
    implication_chain,
    lemma_cs0_check,
    theorem1_sweep,
)
from finslab.errors import PreconditionError
from finslab.schemas import ClassifierReport, GridSpec, Verdict, verdict_for


def test_verdict_bands():
    assert verdict_for(1e-7, 1e-6) == Verdict.PASS
    assert verdict_for(1e-5, 1e-6) == Verdict.INCONCLUSIVE
    assert verdict_for(1e-3, 1e-6) == Verdict.FAIL


def test_grid_directions_are_alpha_unit_and_regular(square_metric, small_grid):
    grid = small_grid(square_metric)
    assert grid.count == 64
    for _, x, y in grid:
        A = square_metric.a.at(x)
        b = square_metric.beta.vector(list(x))
        assert float(y @ A @ y) == pytest.approx(1.0)
        assert abs(float(b @ y)) <= 0.9 * square_metric.phi.b0


def test_grid_is_reproducible(square_metric, small_grid_spec):
    a = SampleGrid.build(square_metric, small_grid_spec)
    b = SampleGrid.build(square_metric, small_grid_spec)
    assert_allclose(np.array(a.points), np.array(b.points))
    assert_allclose(np.array(a.directions), np.array(b.directions))


def test_grid_spec_validation(square_metric):
    with pytest.raises(ValidationError):
        GridSpec(x_points=4)
    with pytest.raises(ValidationError):
        GridSpec(box=[(0.5, -0.5), (0.0, 1.0)])
    with pytest.raises(PreconditionError):
        SampleGrid.build(square_metric, GridSpec(points=[[0.0, 0.0, 0.0]]))


def _samples(values):
    x, y = np.zeros(2), np.array([1.0, 0.0])
    return [(i // 10, x, y, {"berwald": v}) for i, v in enumerate(values)]


def test_few_sample_errors_are_tolerated():
    values = [{"residual": 1e-9}] * 99 + ["Erro de avaliação"]
    report = _REDUCERS["berwald"](_samples(values), 1e-6)
    assert report.verdict == Verdict.PASS
    assert report.failures == 1


def test_many_sample_errors_fail_the_report():
    values = [{"residual": 1e-9}] * 98 + ["Erro de avaliação"] * 2
    report = _REDUCERS["berwald"](_samples(values), 1e-6)
    assert report.verdict == Verdict.FAIL
    assert report.failures == 2


def test_first_maximum_is_the_witness():
    x, y = np.zeros(2), np.array([1.0, 0.0])
    samples = [(0, x + k, y, {"berwald": {"residual": 1.0}}) for k in range(3)]
    report = _REDUCERS["berwald"](samples, 1e-6)
    assert report.witness.x == [0.0, 0.0]


def test_euclid_parallel_is_berwald(small_grid):
    M = catalog_get("euclid_parallel")
    grid = small_grid(M)
    reports = {r.predicate: r for r in classify(
        M, grid, ["berwald", "douglas", "gdw", "isotropic_s", "isotropic_e", "landsberg"])}
    for name in ("berwald", "douglas", "gdw", "landsberg", "isotropic_e"):
        assert reports[name].passed, name
    assert reports["isotropic_s"].label == "vanishing"
    assert reports["berwald"].samples == 64


def test_funk_classification(funk_metric, small_grid):
    grid = small_grid(funk_metric)
    r = {rep.predicate: rep for rep in classify(
        funk_metric, grid, ["berwald", "douglas", "gdw", "scalar_flag", "isotropic_s", "isotropic_e"])}
    assert r["berwald"].verdict == Verdict.FAIL
    assert r["berwald"].residual > 1e-2
    assert r["douglas"].passed
    assert r["gdw"].passed
    assert r["scalar_flag"].passed
    assert r["scalar_flag"].scalars["K_max_abs"] < 1e-6
    assert r["isotropic_s"].label != "vanishing"
    assert r["isotropic_s"].scalars["inf_abs_S_over_F"] > 0.05
    # E isotrópica com c ≠ 0: só o sinal da constante é afirmado
    assert max(abs(c) for c in r["isotropic_e"].scalars["c"]) > 1e-6


def test_single_predicate_wrappers(square_metric, small_grid):
    report = classify_berwald(square_metric, small_grid(square_metric), tol=1e-6)
    assert isinstance(report, ClassifierReport)
    assert report.predicate == "berwald"
    assert report.tolerance == 1e-6
    assert report.witness is not None


def test_parallel_jobs_give_same_reports(small_grid):
    M = catalog_get("euclid_parallel", {"phi": "matsumoto", "b": 0.3})
    grid = small_grid(M)
    serial = operations.dump_yaml(classify(M, grid, ["berwald", "douglas"], jobs=1))
    parallel = operations.dump_yaml(classify(M, grid, ["berwald", "douglas"], jobs=2))
    assert serial == parallel


def test_implication_chain():
    def report(name, verdict):
        return ClassifierReport(predicate=name, residual=0.0, tolerance=1e-6, verdict=verdict)

    ok, messages = implication_chain([report("berwald", Verdict.PASS), report("douglas", Verdict.PASS)])
    assert ok and not messages
    ok, messages = implication_chain([report("berwald", Verdict.PASS), report("douglas", Verdict.FAIL)])
    assert not ok
    assert messages == ["berwald passou mas douglas não"]


def test_constant_s_branches():
    twodim = catalog_get("twodim_constant_s")
    points = [np.array([0.1, 0.2]), np.array([-0.3, 0.4])]
    report = lemma_cs0_check(twodim.a, twodim.beta, points)
    assert report.label == "a"
    assert_allclose(report.scalars["epsilon"], 1.0, atol=1e-8)
    assert_allclose(report.scalars["b"], 1.0, atol=1e-12)

    hopf = killing_hopf("square", scale=0.5)
    report = lemma_cs0_check(hopf.a, hopf.beta, [np.array([0.8, 0.1, -0.2])])
    assert report.label == "b"
    assert report.passed


def test_constant_s_branches_need_ab_metric(funk_metric, small_grid):
    with pytest.raises(PreconditionError):
        classify(funk_metric, small_grid(funk_metric), ["lemma_cs0"])


def test_gdw_berwald_sweep_skips_out_of_scope_metrics(small_grid, funk_metric):
    configurations = []
    for label, name, params in [
        ("parallel", "euclid_parallel", {"phi": "square", "b": 0.5}),
        ("randers", "euclid_parallel", {"phi": "randers:1,0.5,0.2", "b": 0.5}),
        ("irregular", "euclid_parallel", {"phi": "matsumoto", "b": 0.9}),
    ]:
        M = catalog_get(name, params)
        configurations.append((label, M, small_grid(M)))
    configurations.append(("funk", funk_metric, small_grid(funk_metric)))
    results = {r["name"]: r for r in theorem1_sweep(configurations)}
    assert results["parallel"]["tested"] and results["parallel"]["agrees"]
    assert results["randers"]["reason"] == "tipo Randers"
    assert results["irregular"]["reason"] == "não regular"
    assert results["funk"]["reason"] == "não é (α, β)-métrica"


def test_square_gdw_isotropic_e_implies_berwald(small_grid, funk_metric):
    M = catalog_get("euclid_parallel", {"phi": "square", "b": 0.5})
    report = corollary1_check(M, small_grid(M))
    assert report.label == "consistent"
    assert report.passed
    with pytest.raises(PreconditionError):
        corollary1_check(funk_metric, small_grid(funk_metric))


@pytest.mark.slow
def test_killing_form_is_not_berwald_with_vanishing_s(small_grid):
    M = killing_hopf()
    r = {rep.predicate: rep for rep in classify(M, small_grid(M), ["berwald", "isotropic_s", "landsberg"])}
    assert r["berwald"].verdict == Verdict.FAIL
    assert r["isotropic_s"].label == "vanishing"
    assert r["landsberg"].verdict == Verdict.FAIL


@pytest.mark.slow
def test_killing_form_gdw_failure_belongs_to_the_metric():
    # a condição necessária vale, mas h·D|0 não se anula
    M = killing_hopf()
    x, y = [0.8, 0.1, -0.2], [1.0, 0.2, -0.1]
    assert curvature.q_contractions(M, x, y)["reduced_condition"] < 1e-8
    ab = gdw_projection(M, x, y, "ab")
    generic = gdw_projection(M, x, y, "generic")
    scale = np.max(np.abs(ab))
    assert scale > 1e-3
    # duas rotas independentes do spray
    assert np.max(np.abs(ab - generic)) < 1e-6 * scale
    # ξ¹, ξ² são direções de Killing: a grade não muda o valor
    shifted = gdw_projection(M, [0.8, 0.35, 0.2], y, "ab")
    assert_allclose(shifted, ab, rtol=1e-10, atol=1e-12 * scale)
