# finslab/catalog.py

"""
Métricas de exemplo prontas, com caixa de amostragem e a tabela de
veredictos esperados de cada uma.

Entradas com condições de definição (killing_hopf) verificam essas condições
numericamente ao carregar.
"""

import logging
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.stats import qmc

from . import settings
from .errors import CatalogError, FinslabError
from .finsler import ABMetric, FinslerMetric, GenericMetric
from .geometry import OneForm, RiemannMetric, beta_invariants
from .phi import PhiFamily, parse_phi_spec, solve_isotropic_ode

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class CatalogEntry:
    name: str
    dim: int | None
    builder: Callable
    params: dict
    description: str
    expected: dict = field(default_factory=dict)
    provenance: str = ""


def _phi(spec) -> PhiFamily:
    return spec if isinstance(spec, PhiFamily) else parse_phi_spec(str(spec))


def _funk_expression(n: int) -> str:
    xx = "(" + " + ".join(f"x{i}^2" for i in range(1, n + 1)) + ")"
    yy = "(" + " + ".join(f"y{i}^2" for i in range(1, n + 1)) + ")"
    xy = "(" + " + ".join(f"x{i}*y{i}" for i in range(1, n + 1)) + ")"
    root = f"sqrt((1 - {xx})*{yy} + {xy}^2)"
    return f"({root} + {xy})^2/((1 - {xx})^2*{root})"


def euclid_parallel(n=2, phi="square", b=0.5) -> ABMetric:
    """α euclidiana e β = b dx¹ constante."""
    n = int(n)
    components = [float(b)] + [0.0] * (n - 1)
    return ABMetric(RiemannMetric.euclidean(n), OneForm(components), _phi(phi), name="euclid_parallel")


def funk_type(n=2) -> GenericMetric:
    """Métrica de Berwald na bola unitária: projetivamente plana com K = 0."""
    n = int(n)
    return GenericMetric(_funk_expression(n), n, name="funk_type", box=[(-0.5, 0.5)] * n)


def twodim_constant_s(k=settings.ODE_DEFAULT_K, Q0=0.0, Q0p=0.0) -> ABMetric:
    """α = √((y¹)² + e^{2x¹}(y²)²), β = y¹, φ da EDO com S = 3kF."""
    a = RiemannMetric.diagonal([1.0, "exp(2*x1)"])
    phi = solve_isotropic_ode(float(k), 2, 1.0, float(Q0), float(Q0p))
    return ABMetric(a, OneForm([1.0, 0.0]), phi, name="twodim_constant_s")


def killing_hopf(phi="uni:1,0.5,1,1", scale=1.0) -> ABMetric:
    """S³ redonda em coordenadas de Hopf (η, ξ¹, ξ²) com a forma de Hopf.

    a = dη² + sin²η dξ¹² + cos²η dξ², β = λ(sin²η dξ¹ + cos²η dξ²): campo de
    Killing unitário, logo r_ij = 0, s_j = 0 e b = λ.
    """
    lam = float(scale)
    a = RiemannMetric.diagonal([1.0, "sin(x1)^2", "cos(x1)^2"])
    beta = OneForm([0.0, f"{lam!r}*sin(x1)^2", f"{lam!r}*cos(x1)^2"])
    box = [(0.4, 1.2), (-0.5, 0.5), (-0.5, 0.5)]
    M = ABMetric(a, beta, _phi(phi), name="killing_hopf", box=box)
    _check_killing(M, lam)
    return M


def _check_killing(M: ABMetric, lam: float) -> None:
    lo = np.array([b[0] for b in M.box])
    hi = np.array([b[1] for b in M.box])
    points = qmc.scale(qmc.Halton(d=M.n, scramble=True, seed=0).random(settings.CATALOG_CHECK_POINTS), lo, hi)
    worst, weakest, b_error = 0.0, np.inf, 0.0
    for x in points:
        inv = beta_invariants(M.a, M.beta, x, np.eye(M.n)[0])
        worst = max(worst, float(np.max(np.abs(inv.r))), float(np.max(np.abs(inv.s_j))))
        weakest = min(weakest, float(np.max(np.abs(inv.s))))
        b_error = max(b_error, abs(inv.b - lam))
    tol = settings.CATALOG_CHECK_TOL
    logger.info("killing_hopf: max(|r|, |s_j|)=%.3g, min ‖s_ij‖=%.3g, |b − λ|=%.3g", worst, weakest, b_error)
    if worst > tol or b_error > tol or weakest < 0.1 * lam:
        raise CatalogError(
            f"killing_hopf falhou na auto-validação: max(|r_ij|, |s_j|)={worst:.3g}, "
            f"min ‖s_ij‖={weakest:.3g}, |b − λ|={b_error:.3g}"
        )


def _ab(name, a, b, phi, params=None) -> ABMetric:
    params = params or {}
    return ABMetric(RiemannMetric(a, params), OneForm(b, params), _phi(phi), name=name)


DEFAULT_A = [[1.0, 0.0], [0.0, "1 + 0.5*x1^2"]]
DEFAULT_B = ["0.2 + 0.1*x2", "0.1*x1"]


def square(a=None, b=None) -> ABMetric:
    """F = (α + β)²/α."""
    return _ab("square", a or DEFAULT_A, b or DEFAULT_B, "square")


def matsumoto(a=None, b=None) -> ABMetric:
    """F = α²/(α − β)."""
    return _ab("matsumoto", a or DEFAULT_A, b or DEFAULT_B, "matsumoto")


def randers(c1=1.0, c2=0.0, c3=1.0, a=None, b=None) -> ABMetric:
    """φ = c₁√(1 + c₂s²) + c₃s."""
    phi = f"randers:{float(c1)!r},{float(c2)!r},{float(c3)!r}"
    return _ab("randers", a or DEFAULT_A, b or DEFAULT_B, phi)


def uni(c=1.0, k=0.5, q=1.0, b=1.0, a=None, beta=None) -> ABMetric:
    """Família com Q = ks + q√(b² − s²) sobre α e β genéricos (b(x) < b)."""
    phi = f"uni:{float(c)!r},{float(k)!r},{float(q)!r},{float(b)!r}"
    return _ab("uni", a or DEFAULT_A, beta or DEFAULT_B, phi)


def product_parallel(phi="square", b=0.5) -> ABMetric:
    """α = diag(1, e^{2x¹}, 1) e β = b dx³ paralela: Berwald com α não plana."""
    a = RiemannMetric.diagonal([1.0, "exp(2*x1)", 1.0])
    return ABMetric(a, OneForm([0.0, 0.0, float(b)]), _phi(phi), name="product_parallel")


_BERWALD = {"berwald": "pass", "douglas": "pass", "gdw": "pass", "isotropic_s": "vanishing"}

CATALOG = {
    e.name: e
    for e in [
        CatalogEntry("euclid_parallel", None, euclid_parallel, {"n": 2, "phi": "square", "b": 0.5},
                     "α euclidiana, β constante", dict(_BERWALD), "trivial"),
        CatalogEntry("funk_type", None, funk_type, {"n": 2},
                     "métrica de Berwald na bola unitária",
                     {"berwald": "fail", "douglas": "pass", "gdw": "pass", "scalar_flag": "pass",
                      "isotropic_s": "not-vanishing"}, "exemplo clássico"),
        CatalogEntry("twodim_constant_s", 2, twodim_constant_s, {"k": settings.ODE_DEFAULT_K, "Q0": 0.0, "Q0p": 0.0},
                     "curvatura S constante 3kF em dimensão 2",
                     {"gdw": "pass", "scalar_flag": "pass", "isotropic_s": "constant", "lemma_cs0": "a"},
                     "solução numérica da EDO"),
        CatalogEntry("killing_hopf", 3, killing_hopf, {"phi": "uni:1,0.5,1,1", "scale": 1.0},
                     "S³ com a forma de Hopf (r = 0, s_j = 0)",
                     {"berwald": "fail", "douglas": "fail", "landsberg": "fail", "isotropic_s": "vanishing",
                      "lemma_cs0": "b"}, "verificado na carga"),
        CatalogEntry("square", 2, square, {"a": DEFAULT_A, "b": DEFAULT_B},
                     "F = (α + β)²/α", {}, "construtor"),
        CatalogEntry("matsumoto", 2, matsumoto, {"a": DEFAULT_A, "b": DEFAULT_B},
                     "F = α²/(α − β)", {}, "construtor"),
        CatalogEntry("randers", 2, randers, {"c1": 1.0, "c2": 0.0, "c3": 1.0, "a": DEFAULT_A, "b": DEFAULT_B},
                     "φ = c₁√(1 + c₂s²) + c₃s", {}, "construtor"),
        CatalogEntry("uni", 2, uni, {"c": 1.0, "k": 0.5, "q": 1.0, "b": 1.0, "a": DEFAULT_A, "beta": DEFAULT_B},
                     "família com Q = ks + q√(b² − s²)", {}, "construtor"),
        CatalogEntry("product_parallel", 3, product_parallel, {"phi": "square", "b": 0.5},
                     "α produto não plana, β paralela", dict(_BERWALD), "derivado"),
    ]
}


def catalog_list() -> list:
    """Nomes, parâmetros padrão e veredictos esperados."""
    return [
        {"name": e.name, "dim": e.dim, "params": e.params, "description": e.description,
         "expected": e.expected, "provenance": e.provenance}
        for e in CATALOG.values()
    ]


def catalog_get(name: str, params: dict | None = None) -> FinslerMetric:
    if name not in CATALOG:
        raise CatalogError(f"Entrada de catálogo desconhecida: '{name}' (conhecidas: {sorted(CATALOG)})")
    entry = CATALOG[name]
    params = dict(params or {})
    unknown = set(params) - set(entry.params)
    if unknown:
        raise CatalogError(f"Parâmetros desconhecidos para '{name}': {sorted(unknown)}")
    values = {**entry.params, **params}
    try:
        M = entry.builder(**values)
    except CatalogError:
        raise
    except FinslabError as exc:
        raise CatalogError(f"Falha ao construir '{name}': {exc}") from exc
    logger.info("Catálogo: %s com %s", name, values)
    return M


def expected_verdicts(name: str) -> dict:
    if name not in CATALOG:
        raise CatalogError(f"Entrada de catálogo desconhecida: '{name}'")
    return dict(CATALOG[name].expected)
