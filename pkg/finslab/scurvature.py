# finslab/scurvature.py

"""
Forma de volume de Busemann-Hausdorff e curvatura S.

    σ_F(x) = Vol(Bⁿ(1)) / Vol{y : F(x, y) < 1},
    Vol{F < 1} = (1/n) ∮ F(x, θ)^(−n) dθ,
    S = ∂G^i/∂y^i − y^i ∂_i ln σ_F.

Para (α, β)-métricas σ_F = √det(a)·f(b), o que dá ∂ ln σ_F exatamente a
partir dos jatos de a_ij e b_i; o caminho por quadratura fica disponível
para qualquer métrica.
"""

import logging
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import integrate, special

from . import settings
from .deriv import jcontract, jeinsum, jet_inverse, seed_variables
from .errors import DomainError, PreconditionError, QuadratureError
from .finsler import ABMetric, FinslerMetric, _point, f_value, spray_jet
from .geometry import TensorValue

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class VolumeSample:
    x: tuple
    sigma: float
    nodes: int
    error: float


def unit_ball_volume(n: int) -> float:
    return math.pi ** (n / 2) / special.gamma(n / 2 + 1)


def _sphere_rule(n: int, size):
    """Direções unitárias e pesos de área na esfera S^(n−1)."""
    if n == 2:
        theta = 2.0 * np.pi * np.arange(size) / size
        dirs = np.stack([np.cos(theta), np.sin(theta)], axis=1)
        return dirs, np.full(size, 2.0 * np.pi / size)
    if n == 3:
        n_polar, n_azimuth = size
        u, wu = np.polynomial.legendre.leggauss(n_polar)
        phi = 2.0 * np.pi * np.arange(n_azimuth) / n_azimuth
        r = np.sqrt(1.0 - u ** 2)
        dirs = np.stack(
            [np.outer(r, np.cos(phi)).ravel(), np.outer(r, np.sin(phi)).ravel(), np.repeat(u, n_azimuth)],
            axis=1,
        )
        weights = np.repeat(wu, n_azimuth) * (2.0 * np.pi / n_azimuth)
        return dirs, weights
    raise PreconditionError(f"Quadratura na esfera só para n = 1, 2, 3 (n={n})")


def _indicatrix_volume(M: FinslerMetric, x, size) -> tuple:
    """(1/n) Σ w F(x, θ)^(−n); direções onde F não está definida são cortadas."""
    n = M.n
    xs = [float(v) for v in x]
    if n == 1:
        dirs, weights = np.array([[1.0], [-1.0]]), np.array([1.0, 1.0])
    else:
        dirs, weights = _sphere_rule(n, size)
    total = 0.0
    clipped = 0
    for direction, w in zip(dirs, weights):
        try:
            F = float(M(xs, [float(v) for v in direction]))
        except DomainError:
            clipped += 1
            continue
        if not F > 0.0:
            raise DomainError(f"F não positiva na direção {direction.tolist()}", x, direction)
        total += w * F ** (-n)
    if clipped:
        logger.warning("%d direções cortadas na quadratura de σ_F em x=%s", clipped, list(xs))
    return total / n, len(weights)


def _halved(n: int, size):
    if n == 2:
        return size // 2
    return (size[0] // 2, size[1] // 2)


def _doubled(n: int, size):
    if n == 2:
        return size * 2
    return (size[0] * 2, size[1] * 2)


def bh_sigma(M: FinslerMetric, x, tol: float = settings.SIGMA_TOL) -> VolumeSample:
    """σ_F(x) por quadratura na esfera, com estimativa de erro pela grade metade."""
    x = np.asarray(x, dtype=float)
    n = M.n
    if n == 1:
        volume, nodes = _indicatrix_volume(M, x, None)
        return VolumeSample(tuple(x), unit_ball_volume(1) / volume, nodes, 0.0)
    size = settings.CIRCLE_NODES if n == 2 else settings.SPHERE_NODES
    for _ in range(settings.SIGMA_MAX_REFINE + 1):
        volume, nodes = _indicatrix_volume(M, x, size)
        coarse, _ = _indicatrix_volume(M, x, _halved(n, size))
        error = abs(volume - coarse) / abs(volume)
        if error < tol:
            return VolumeSample(tuple(x), unit_ball_volume(n) / volume, nodes, error)
        logger.info("σ_F em x=%s: erro %.3g com %s nós, refinando", x.tolist(), error, size)
        size = _doubled(n, size)
    raise QuadratureError(f"σ_F não convergiu (erro estimado {error:.3g} > {tol:.3g})", x)


def _log_sigma(M: FinslerMetric, x) -> float:
    return math.log(bh_sigma(M, x).sigma)


def _gradient_by_quadrature(M: FinslerMetric, x: np.ndarray) -> np.ndarray:
    """∂_i ln σ_F por diferenças centrais com extrapolação de Richardson."""
    levels = settings.FD_RICHARDSON_LEVELS
    grad = np.zeros(M.n)
    for i in range(M.n):
        h = settings.LOG_SIGMA_STEP * (1.0 + abs(x[i]))
        table = []
        for level in range(levels + 1):
            step = h / 2 ** level
            e = np.zeros(M.n)
            e[i] = step
            table.append((_log_sigma(M, x + e) - _log_sigma(M, x - e)) / (2.0 * step))
        for j in range(1, levels + 1):
            factor = 4.0 ** j
            table = [(factor * table[k + 1] - table[k]) / (factor - 1.0) for k in range(len(table) - 1)]
        grad[i] = table[0]
    return grad


def _volume_integral(phi, b: float, n: int, derivative: bool = False) -> float:
    """∫₀^π sin^(n−2)t φ(b cos t)^(−n) dt, ou a derivada em b."""

    def integrand(t):
        s = b * math.cos(t)
        weight = math.sin(t) ** (n - 2)
        value = phi(s)
        if not derivative:
            return weight * value ** (-n)
        dphi = phi.derivatives(s, 1)[1]
        return weight * (-n) * value ** (-n - 1) * dphi * math.cos(t)

    result, _ = integrate.quad(integrand, 0.0, math.pi, epsabs=settings.QUAD_TOL, epsrel=settings.QUAD_TOL)
    return result


def _gradient_factorized(M: ABMetric, x: np.ndarray) -> np.ndarray:
    """∂_i ln σ_F = ½ a^{kl} ∂_i a_lk + (f′/f)(b) ∂_i b."""
    space, xs, _ = seed_variables(x, np.zeros(M.n), 1, 0)
    A = M.a.matrix(xs, space)
    A_inv = jet_inverse(A)
    log_det = jeinsum("kl,lki->i", A_inv, A.grad_x()) * 0.5
    bvec = M.beta.vector(xs, space)
    b2 = jeinsum("i,i->", bvec, jeinsum("ij,j->i", A_inv, bvec))
    grad = np.asarray(log_det.value, dtype=float)
    db2 = np.asarray(b2.grad_x().value, dtype=float)
    if np.max(np.abs(db2)) == 0.0:
        return grad
    b = math.sqrt(float(b2.value))
    if b == 0.0:
        raise PreconditionError("∂b com b = 0: use o caminho por quadratura")
    db = db2 / (2.0 * b)
    n = M.n
    if n == 1:
        raise PreconditionError("Fatoração de σ_F exige n >= 2")
    I = _volume_integral(M.phi, b, n)
    dI = _volume_integral(M.phi, b, n, derivative=True)
    # f = Vol(Bⁿ) / (c_n I) => f′/f = −I′/I
    return grad - (dI / I) * db


@lru_cache(maxsize=1024)
def _cached_gradient(M, x: tuple, method: str) -> tuple:
    x = np.asarray(x, dtype=float)
    if method == "factorized":
        if not isinstance(M, ABMetric):
            raise PreconditionError("Fatoração de σ_F só vale para ABMetric")
        return tuple(_gradient_factorized(M, x))
    if method == "quadrature":
        return tuple(_gradient_by_quadrature(M, x))
    raise PreconditionError(f"Método de volume desconhecido: '{method}'")


def log_sigma_gradient(M: FinslerMetric, x, method: str | None = None) -> np.ndarray:
    """∂_i ln σ_F em x; depende só de x, então fica em cache por ponto."""
    if method is None:
        method = "factorized" if isinstance(M, ABMetric) else "quadrature"
    x = np.asarray(x, dtype=float)
    return np.asarray(_cached_gradient(M, tuple(float(v) for v in x), method))


def s_curvature(M: FinslerMetric, x, y, method: str | None = None) -> float:
    """S = ∂G^i/∂y^i − y^i ∂_i ln σ_F."""
    x, y = _point(x, y)
    G = spray_jet(M, x, y, 0, 1)
    divergence = float(jcontract("ii->", G.grad_y()).value)
    return divergence - float(y @ log_sigma_gradient(M, x, method))


def e_from_s(M: FinslerMetric, x, y) -> TensorValue:
    """E_jk = ½ ∂²S/∂y^j∂y^k; o termo de ln σ_F é linear em y e some."""
    x, y = _point(x, y)
    G = spray_jet(M, x, y, 0, 3)
    divergence = jcontract("ii->", G.grad_y())
    E = divergence.grad_y().grad_y().value * 0.5
    return TensorValue("E", "_jk", E, tuple(x), tuple(y))


def isotropy_profile(M: FinslerMetric, x, directions, method: str | None = None) -> dict:
    """Amostras de c(x, y) = S/((n+1)F) sobre as direções e sua dispersão."""
    x = np.asarray(x, dtype=float)
    samples = []
    for y in directions:
        S = s_curvature(M, x, y, method)
        samples.append(S / ((M.n + 1) * f_value(M, x, y)))
    samples = np.asarray(samples)
    return {
        "x": x.tolist(),
        "c": float(samples.mean()),
        "spread": float(samples.std()),
        "samples": samples.tolist(),
    }
