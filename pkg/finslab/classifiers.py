# finslab/classifiers.py

"""
Predicados por resíduo sobre uma grade de amostras (x, y).

Todos os resíduos são adimensionais: cada tensor é multiplicado pela potência
de F que zera o seu grau de homogeneidade em y. As direções da grade são
α-unitárias para (α, β)-métricas e euclidianas-unitárias nos demais casos.
"""

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import qmc

from . import settings
from .curvature import curvature_pack
from .errors import EvaluationError, PreconditionError
from .finsler import ABMetric, FinslerMetric, f_value
from .geometry import OneForm, RiemannMetric, beta_invariants
from .phi import randers_type_fit, regularity_check
from .schemas import ClassifierReport, GridSpec, Verdict, Witness, verdict_for
from .scurvature import s_curvature

logger = logging.getLogger(__name__)

GRID_PREDICATES = ("berwald", "douglas", "gdw", "scalar_flag", "isotropic_s", "isotropic_e", "landsberg")


# Grade

def _unit_directions(n: int, count: int, seed: int) -> np.ndarray:
    if n == 1:
        return np.array([[1.0], [-1.0]] * ((count + 1) // 2))[:count]
    if n == 2:
        h = qmc.Halton(d=1, scramble=True, seed=seed).random(count)[:, 0]
        theta = 2.0 * np.pi * h
        return np.stack([np.cos(theta), np.sin(theta)], axis=1)
    if n == 3:
        h = qmc.Halton(d=2, scramble=True, seed=seed).random(count)
        u = 2.0 * h[:, 0] - 1.0
        phi = 2.0 * np.pi * h[:, 1]
        r = np.sqrt(1.0 - u * u)
        return np.stack([r * np.cos(phi), r * np.sin(phi), u], axis=1)
    v = np.random.default_rng(seed).standard_normal((count, n))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


@dataclass
class SampleGrid:
    """Pontos x e, para cada um, direções y na esfera unitária de α."""

    points: list
    directions: list = field(default_factory=list)

    @property
    def count(self) -> int:
        return sum(len(d) for d in self.directions)

    def __iter__(self):
        for i, x in enumerate(self.points):
            for y in self.directions[i]:
                yield i, x, y

    @classmethod
    def build(cls, M: FinslerMetric, spec: GridSpec | None = None) -> "SampleGrid":
        spec = spec or GridSpec()
        n = M.n
        if spec.points is not None:
            points = [np.asarray(p, dtype=float) for p in spec.points]
            if any(len(p) != n for p in points):
                raise PreconditionError(f"Pontos da grade precisam ter dimensão {n}")
        else:
            box = spec.box or M.box
            if len(box) != n:
                raise PreconditionError(f"Caixa da grade com dimensão {len(box)}, métrica com {n}")
            lo = np.array([b[0] for b in box], dtype=float)
            hi = np.array([b[1] for b in box], dtype=float)
            raw = qmc.Halton(d=n, scramble=True, seed=spec.seed).random(spec.x_points)
            points = list(qmc.scale(raw, lo, hi))
        directions = [
            cls._directions_at(M, x, spec.y_directions, spec.seed + 1 + i) for i, x in enumerate(points)
        ]
        logger.info("Grade: %d pontos x %d direções", len(points), spec.y_directions)
        return cls(points, directions)

    @staticmethod
    def _directions_at(M: FinslerMetric, x, count: int, seed: int) -> list:
        if not isinstance(M, ABMetric):
            return list(_unit_directions(M.n, count, seed))
        A = M.a.at(x)
        b = M.beta.vector(list(x))
        L = np.linalg.cholesky(A)
        limit = settings.REGULAR_FRACTION * M.phi.b0
        chosen = []
        # α(y) = 1 para y = L^{-T} u; descarta direções perto das extremais
        for u in _unit_directions(M.n, 8 * count, seed):
            y = np.linalg.solve(L.T, u)
            if abs(float(b @ y)) <= limit:
                chosen.append(y)
                if len(chosen) == count:
                    break
        if len(chosen) < settings.MIN_GRID_COUNT:
            raise PreconditionError(f"Poucas direções regulares em x={list(x)} ({len(chosen)})")
        return chosen


# Amostras

def _max_abs(a) -> float:
    return float(np.max(np.abs(a), initial=0.0))


def sample_values(M: FinslerMetric, x, y, predicates) -> dict:
    """Valores crus de cada predicado em (x, y); erros viram texto."""
    pack = curvature_pack(M, x, y)
    out = {}
    for name in predicates:
        try:
            out[name] = _SAMPLERS[name](pack)
        except EvaluationError as exc:
            out[name] = str(exc)
    return out


def _sample_berwald(pack) -> dict:
    F = math.sqrt(pack.F2)
    return {"residual": _max_abs(pack.B_jet.value) * F}


def _sample_douglas(pack) -> dict:
    F = math.sqrt(pack.F2)
    return {"residual": _max_abs(pack.D_jet.value) * F}


def _gdw_parts(pack):
    fund = pack.fundamental
    Dh = pack.contract(pack.D_jet, 1).value
    projected = np.einsum("mi,ijkl->mjkl", fund.h_mixed, Dh)
    T = np.einsum("i,ijkl->jkl", fund.y_lower, Dh) / pack.F2
    return projected, T


def gdw_projection(M: FinslerMetric, x, y, method: str | None = None) -> np.ndarray:
    """h^m_i D^i_jkl|s y^s em (x, y); ``method`` escolhe a rota do spray."""
    return _gdw_parts(curvature_pack(M, x, y, method))[0]


def _sample_gdw(pack) -> dict:
    projected, T = _gdw_parts(pack)
    return {"residual": _max_abs(projected), "T": T.ravel().tolist()}


def _sample_scalar_flag(pack) -> dict:
    K = pack.flag_curvature
    R = pack.R_jet.value
    residual = _max_abs(R - K * pack.F2 * pack.fundamental.h_mixed) / pack.F2
    return {"residual": residual, "K": K}


def _sample_isotropic_s(pack) -> dict:
    F = math.sqrt(pack.F2)
    return {"S_over_F": s_curvature(pack.M, pack.x, pack.y) / F}


def _sample_isotropic_e(pack) -> dict:
    return {"E": pack.E_jet.value.tolist(), "F": math.sqrt(pack.F2), "h": pack.fundamental.h.tolist()}


def _sample_landsberg(pack) -> dict:
    return {"residual": _max_abs(pack.L.components)}


_SAMPLERS = {
    "berwald": _sample_berwald,
    "douglas": _sample_douglas,
    "gdw": _sample_gdw,
    "scalar_flag": _sample_scalar_flag,
    "isotropic_s": _sample_isotropic_s,
    "isotropic_e": _sample_isotropic_e,
    "landsberg": _sample_landsberg,
}


def _run_sample(task):
    i, M, x, y, predicates = task
    try:
        return i, x, y, sample_values(M, x, y, predicates)
    except EvaluationError as exc:
        return i, x, y, {name: str(exc) for name in predicates}


def collect_samples(M: FinslerMetric, grid: SampleGrid, predicates, jobs: int = 1) -> list:
    """(índice de x, x, y, valores) para cada amostra, na ordem da grade."""
    tasks = [(i, M, x, y, tuple(predicates)) for i, x, y in grid]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as executor:
            return list(executor.map(_run_sample, tasks, chunksize=max(1, len(tasks) // (4 * jobs))))
    return [_run_sample(task) for task in tasks]


# Redução

def _split(samples, name):
    good, errors = [], []
    for i, x, y, values in samples:
        value = values[name]
        if isinstance(value, str):
            errors.append(value)
        else:
            good.append((i, x, y, value))
    return good, errors


def _report(name, tol, residual, witness, samples, errors, label="", scalars=None, messages=None):
    messages = list(messages or [])
    verdict = verdict_for(residual, tol)
    if errors:
        messages.extend(errors[:5])
        if len(errors) > settings.MAX_ERROR_FRACTION * samples:
            messages.append(f"{len(errors)} de {samples} amostras falharam")
            verdict = Verdict.FAIL
    if verdict == Verdict.INCONCLUSIVE:
        logger.warning("%s inconclusivo: resíduo %.3g entre %.3g e %.3g", name, residual, tol,
                       settings.FAIL_FACTOR * tol)
    return ClassifierReport(
        predicate=name,
        residual=residual,
        tolerance=tol,
        verdict=verdict,
        label=label,
        witness=witness,
        scalars=scalars or {},
        samples=samples,
        failures=len(errors),
        messages=messages,
    )


def _witness(x, y) -> Witness:
    return Witness(x=[float(v) for v in x], y=[float(v) for v in y])


def _reduce_max(name, samples, tol, extra=None):
    good, errors = _split(samples, name)
    residual, witness, best = 0.0, None, None
    # o primeiro máximo vence: a redução não depende da ordem de chegada
    for i, x, y, value in good:
        if witness is None or value["residual"] > residual:
            residual, witness, best = value["residual"], _witness(x, y), value
    if not good:
        residual = math.inf
    scalars = extra(good, best) if extra and good else {}
    return _report(name, tol, residual, witness, len(samples), errors, scalars=scalars)


def _reduce_berwald(samples, tol):
    report = _reduce_max("berwald", samples, tol)
    report.label = "berwald" if report.passed else "not-berwald"
    return report


def _reduce_douglas(samples, tol):
    report = _reduce_max("douglas", samples, tol)
    report.label = "douglas" if report.passed else "not-douglas"
    return report


def _reduce_gdw(samples, tol):
    report = _reduce_max("gdw", samples, tol, extra=lambda good, best: {"T": best["T"]})
    report.label = "gdw" if report.passed else "not-gdw"
    return report


def _reduce_scalar_flag(samples, tol):
    def extra(good, best):
        K = [v["K"] for _, _, _, v in good]
        return {"K": K, "K_max_abs": float(np.max(np.abs(K)))}

    report = _reduce_max("scalar_flag", samples, tol, extra=extra)
    report.label = "scalar-flag" if report.passed else "not-scalar-flag"
    return report


def _reduce_landsberg(samples, tol):
    report = _reduce_max("landsberg", samples, tol)
    report.label = "landsberg" if report.passed else "not-landsberg"
    return report


def _by_point(good):
    groups = {}
    for i, x, y, value in good:
        groups.setdefault(i, []).append((x, y, value))
    return [groups[i] for i in sorted(groups)]


def _reduce_isotropic_s(samples, tol):
    """c(x) = média de S/((n+1)F); resíduo sup |S − (n+1)c F|/F."""
    good, errors = _split(samples, "isotropic_s")
    if not good:
        return _report("isotropic_s", tol, math.inf, None, len(samples), errors, label="none")
    n = len(good[0][2])
    residual, witness = 0.0, None
    c_values, sup_s, inf_s = [], 0.0, math.inf
    for group in _by_point(good):
        ratios = np.array([v["S_over_F"] for _, _, v in group])
        c = float(ratios.mean()) / (n + 1)
        c_values.append(c)
        sup_s = max(sup_s, float(np.max(np.abs(ratios))))
        inf_s = min(inf_s, float(np.min(np.abs(ratios))))
        dev = np.abs(ratios - (n + 1) * c)
        k = int(np.argmax(dev))
        if witness is None or dev[k] > residual:
            residual, witness = float(dev[k]), _witness(group[k][0], group[k][1])
    if sup_s < tol:
        label = "vanishing"
    elif residual < tol:
        label = "constant" if float(np.ptp(c_values)) < tol else "isotropic"
    else:
        label = "none"
    scalars = {"c": c_values, "sup_abs_S_over_F": sup_s, "inf_abs_S_over_F": inf_s}
    return _report("isotropic_s", tol, residual, witness, len(samples), errors, label, scalars)


def _fit_isotropic(samples_at_x, n, power):
    """Mínimos quadrados de E ≈ c (n+1)/2 F^power h sobre as direções em x."""
    num, den = 0.0, 0.0
    for _, _, v in samples_at_x:
        basis = 0.5 * (n + 1) * v["F"] ** power * np.asarray(v["h"])
        num += float(np.sum(basis * np.asarray(v["E"])))
        den += float(np.sum(basis * basis))
    c = num / den if den > 0 else 0.0
    worst, where = 0.0, 0
    for k, (_, _, v) in enumerate(samples_at_x):
        basis = 0.5 * (n + 1) * v["F"] ** power * np.asarray(v["h"])
        dev = _max_abs(np.asarray(v["E"]) - c * basis) * v["F"]
        if dev > worst:
            worst, where = dev, k
    return c, worst, where


def _reduce_isotropic_e(samples, tol):
    """E = ((n+1)/2) c F h decide o veredito; a variante com F⁻¹ vai como auxiliar."""
    good, errors = _split(samples, "isotropic_e")
    if not good:
        return _report("isotropic_e", tol, math.inf, None, len(samples), errors, label="none")
    n = len(good[0][2])
    residual, witness, c_values = 0.0, None, []
    aux_residual, aux_c = 0.0, []
    for group in _by_point(good):
        c, dev, k = _fit_isotropic(group, n, 1)
        c_values.append(c)
        if witness is None or dev > residual:
            residual, witness = dev, _witness(group[k][0], group[k][1])
        c_inv, dev_inv, _ = _fit_isotropic(group, n, -1)
        aux_c.append(c_inv)
        aux_residual = max(aux_residual, dev_inv)
    label = "isotropic-e" if residual < tol else "not-isotropic-e"
    scalars = {"c": c_values, "c_inverse_form": aux_c, "residual_inverse_form": aux_residual}
    return _report("isotropic_e", tol, residual, witness, len(samples), errors, label, scalars)


_REDUCERS = {
    "berwald": _reduce_berwald,
    "douglas": _reduce_douglas,
    "gdw": _reduce_gdw,
    "scalar_flag": _reduce_scalar_flag,
    "isotropic_s": _reduce_isotropic_s,
    "isotropic_e": _reduce_isotropic_e,
    "landsberg": _reduce_landsberg,
}


# Classificadores

def classify(M: FinslerMetric, grid: SampleGrid, predicates, tolerances: dict | None = None,
             jobs: int = 1) -> list:
    """Um ClassifierReport por predicado, com uma só passada pela grade."""
    tolerances = tolerances or {}
    on_grid = [p for p in predicates if p in GRID_PREDICATES]
    samples = collect_samples(M, grid, on_grid, jobs) if on_grid else []
    reports = []
    for name in predicates:
        tol = settings.tolerance_for(name, tolerances)
        if name == "lemma_cs0":
            if not isinstance(M, ABMetric):
                raise PreconditionError("lemma_cs0 exige uma (α, β)-métrica")
            reports.append(lemma_cs0_check(M.a, M.beta, grid.points, tol))
            continue
        reports.append(_REDUCERS[name](samples, tol))
    for report in reports:
        logger.info("%s: %s (resíduo %.3g, tol %.3g)", report.predicate, report.verdict.value,
                    report.residual, report.tolerance)
    return reports


def _single(name, M, grid, tol, jobs):
    return classify(M, grid, [name], {name: tol} if tol is not None else None, jobs)[0]


def classify_berwald(M, grid, tol=None, jobs=1) -> ClassifierReport:
    """sup ‖B‖·F."""
    return _single("berwald", M, grid, tol, jobs)


def classify_douglas(M, grid, tol=None, jobs=1) -> ClassifierReport:
    """sup ‖D‖·F."""
    return _single("douglas", M, grid, tol, jobs)


def classify_gdw(M, grid, tol=None, jobs=1) -> ClassifierReport:
    """sup ‖h^m_i D^i_jkl|s y^s‖; T_jkl = y_i D^i_jkl|s y^s / F² na testemunha."""
    return _single("gdw", M, grid, tol, jobs)


def classify_scalar_flag(M, grid, tol=None, jobs=1) -> ClassifierReport:
    """sup ‖R^i_k − K F² h^i_k‖/F² com K = R^m_m/((n−1)F²)."""
    return _single("scalar_flag", M, grid, tol, jobs)


def classify_isotropic_s(M, grid, tol=None, jobs=1) -> ClassifierReport:
    return _single("isotropic_s", M, grid, tol, jobs)


def isotropic_mean_berwald_check(M, grid, tol=None, jobs=1) -> ClassifierReport:
    return _single("isotropic_e", M, grid, tol, jobs)


def classify_landsberg(M, grid, tol=None, jobs=1) -> ClassifierReport:
    """sup ‖L‖ com L_jkl = −½ y_m B^m_jkl."""
    return _single("landsberg", M, grid, tol, jobs)


def lemma_cs0_check(a: RiemannMetric, beta: OneForm, points, tol: float | None = None) -> ClassifierReport:
    """Ramo (b): r_ij = 0 e s_j = 0; ramo (a): r_ij = ε(b² a_ij − b_i b_j) e s_j = 0."""
    tol = settings.tolerance_for("lemma_cs0", {"lemma_cs0": tol} if tol is not None else None)
    y = np.eye(a.n)[0]
    invariants = [beta_invariants(a, beta, x, y) for x in points]
    worst_b = max(max(_max_abs(inv.r), _max_abs(inv.s_j)) for inv in invariants)
    b_values = [inv.b for inv in invariants]
    if worst_b < tol:
        return ClassifierReport(
            predicate="lemma_cs0", residual=worst_b, tolerance=tol, verdict=Verdict.PASS,
            label="b", scalars={"b": b_values, "epsilon": [0.0] * len(points)}, samples=len(points),
        )
    residual, witness, eps_values = 0.0, None, []
    for x, inv in zip(points, invariants):
        A = a.at(x)
        target = inv.b2 * A - np.outer(inv.b_lower, inv.b_lower)
        den = float(np.sum(target * target))
        eps = float(np.sum(inv.r * target)) / den if den > 0 else 0.0
        eps_values.append(eps)
        dev = max(_max_abs(inv.r - eps * target), _max_abs(inv.s_j))
        if witness is None or dev > residual:
            residual, witness = dev, Witness(x=[float(v) for v in x])
    label = "a" if residual < tol else "none"
    return ClassifierReport(
        predicate="lemma_cs0", residual=residual, tolerance=tol, verdict=verdict_for(residual, tol),
        label=label, witness=witness, scalars={"b": b_values, "epsilon": eps_values}, samples=len(points),
    )


# Relações entre predicados

def implication_chain(reports) -> tuple:
    """Berwald ⇒ Douglas ⇒ GDW; devolve (ok, mensagens)."""
    by_name = {r.predicate: r for r in reports}
    messages = []
    chain = [("berwald", "douglas"), ("berwald", "gdw"), ("douglas", "gdw")]
    for strong, weak in chain:
        if strong in by_name and weak in by_name and by_name[strong].passed and not by_name[weak].passed:
            messages.append(f"{strong} passou mas {weak} não")
    return not messages, messages


def _max_b(M: ABMetric, points) -> float:
    return max(M.b_norm(x) for x in points)


def theorem1_sweep(configurations, tolerances: dict | None = None, jobs: int = 1) -> list:
    """GDW com S = 0 ⇔ Berwald, para (α, β)-métricas regulares fora do tipo Randers.

    ``configurations`` é uma lista de (nome, métrica, grade). Cada item do
    resultado diz se a configuração entrou no teste e, se entrou, se os dois
    veredictos coincidem.
    """
    results = []
    for name, M, grid in configurations:
        entry = {"name": name, "tested": False, "agrees": None, "reason": ""}
        if not isinstance(M, ABMetric):
            entry["reason"] = "não é (α, β)-métrica"
        elif randers_type_fit(M.phi).randers_type:
            entry["reason"] = "tipo Randers"
        elif regularity_check(M.phi, _max_b(M, grid.points)).label != "regular":
            entry["reason"] = "não regular"
        else:
            s_rep, gdw, berwald = classify(M, grid, ["isotropic_s", "gdw", "berwald"], tolerances, jobs)
            entry.update(isotropic_s=s_rep.label, gdw=gdw.verdict.value, berwald=berwald.verdict.value)
            if s_rep.label != "vanishing":
                entry["reason"] = f"S não se anula ({s_rep.label})"
            else:
                entry["tested"] = True
                entry["agrees"] = gdw.verdict == berwald.verdict
        logger.info("Varredura GDW ⇔ Berwald em %s: %s", name, entry)
        results.append(entry)
    return results


def corollary1_check(M: ABMetric, grid: SampleGrid, tolerances: dict | None = None,
                     jobs: int = 1) -> ClassifierReport:
    """Quadrada ou Matsumoto com GDW e E isotrópica (forma com F⁻¹) ⇒ Berwald."""
    if not isinstance(M, ABMetric) or M.phi.kind not in ("square", "matsumoto"):
        raise PreconditionError("corollary1_check vale para as métricas quadrada e de Matsumoto")
    gdw, iso_e, berwald = classify(M, grid, ["gdw", "isotropic_e", "berwald"], tolerances, jobs)
    tol = iso_e.tolerance
    hypothesis = gdw.passed and float(iso_e.scalars["residual_inverse_form"]) < tol
    if not hypothesis:
        label, verdict = "vacuous", Verdict.PASS
    elif berwald.passed:
        label, verdict = "consistent", Verdict.PASS
    else:
        label, verdict = "inconsistent", Verdict.FAIL
    return ClassifierReport(
        predicate="corollary1", residual=berwald.residual, tolerance=berwald.tolerance,
        verdict=verdict, label=label,
        scalars={"gdw": gdw.verdict.value, "isotropic_e_inverse_residual": iso_e.scalars["residual_inverse_form"],
                 "berwald": berwald.verdict.value},
        samples=berwald.samples,
    )
