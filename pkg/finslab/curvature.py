# finslab/curvature.py

"""
Curvaturas de Berwald, Douglas, Riemann e Landsberg, derivadas h da conexão
de Berwald e as identidades de Bianchi usadas como verificação.

Tudo sai de um único jato de G^i por ponto, com ordem 1 em x e 5 em y:

    N^i_j   = ∂G^i/∂y^j                      (1, 4)
    G^i_jk  = ∂²G^i/∂y^j∂y^k                 (1, 3)
    B^i_jkl = ∂³G^i/∂y^j∂y^k∂y^l             (1, 2)
    D^i_jkl                                  (1, 1)
    R^i_k, R^i_jkl                           (0, 3), (0, 1)

Convenção: derivada h de Berwald com δ/δx^m = ∂/∂x^m − N^u_m ∂/∂y^u.
"""

import logging
from functools import cached_property, lru_cache

import numpy as np

from . import settings
from .deriv import Jet, JetSpace, jcontract, jeinsum, seed_variables, sqrt, stack_values
from .errors import PreconditionError
from .finsler import ABMetric, FinslerMetric, _point, f2_jet, fundamental_from_values, metric_jet, spray_jet
from .geometry import TensorValue, alpha_b_derivatives, beta_invariants
from .phi import q_series

logger = logging.getLogger(__name__)

# letras livres para os eixos de um tensor (evitam 'm', 'u' e o 'Z' de Taylor)
_AXES = "abcdefgh"


def _relative(a, b, floor: float = 1e-300) -> float:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    scale = max(float(np.max(np.abs(a), initial=0.0)), float(np.max(np.abs(b), initial=0.0)), floor)
    return float(np.max(np.abs(a - b), initial=0.0) / scale)


# Derivadas h

def contracted_hderiv(T: Jet, upper: int, G: Jet, N: Jet, Y: Jet) -> Jet:
    """T_|m y^m = y^m ∂_m T − 2G^u ∂T/∂y^u + termos de conexão com N.

    Os ``upper`` primeiros eixos de T são contravariantes. Perde uma ordem em x
    e uma em y.
    """
    rank = len(T.shape)
    idx = _AXES[:rank]
    out = jeinsum(f"{idx}m,m->{idx}", T.grad_x(), Y) - jeinsum(f"{idx}u,u->{idx}", T.grad_y(), G) * 2.0
    for p in range(rank):
        sub = idx[:p] + "u" + idx[p + 1:]
        if p < upper:
            out = out + jeinsum(f"{sub},{idx[p]}u->{idx}", T, N)
        else:
            out = out - jeinsum(f"{sub},u{idx[p]}->{idx}", T, N)
    return out


def full_hderiv(T: Jet, upper: int, N: Jet, connection: Jet) -> Jet:
    """T_|m = ∂_m T − N^u_m ∂T/∂y^u + termos com G^i_jm; m vira o último eixo."""
    rank = len(T.shape)
    idx = _AXES[:rank]
    out = T.grad_x() - jeinsum(f"{idx}u,um->{idx}m", T.grad_y(), N)
    for p in range(rank):
        sub = idx[:p] + "u" + idx[p + 1:]
        if p < upper:
            out = out + jeinsum(f"{sub},{idx[p]}um->{idx}m", T, connection)
        else:
            out = out - jeinsum(f"{sub},u{idx[p]}m->{idx}m", T, connection)
    return out


class CurvaturePack:
    """Todos os tensores de curvatura num ponto (x, y), calculados sob demanda."""

    ORDER_X = 1
    ORDER_Y = 5

    def __init__(self, M: FinslerMetric, x, y, method: str | None = None):
        self.M = M
        self.x, self.y = _point(x, y)
        self.n = M.n
        self.method = method or M.spray_method

    # jatos

    @cached_property
    def spray(self) -> Jet:
        logger.debug("Spray %s em x=%s y=%s", self.method, self.x, self.y)
        return spray_jet(self.M, self.x, self.y, self.ORDER_X, self.ORDER_Y, self.method)

    @cached_property
    def Y(self) -> Jet:
        space, _, ys = seed_variables(self.x, self.y, self.ORDER_X, self.ORDER_Y)
        return stack_values(ys, space)

    @cached_property
    def N(self) -> Jet:
        return self.spray.grad_y()

    @cached_property
    def connection(self) -> Jet:
        return self.N.grad_y()

    @cached_property
    def B_jet(self) -> Jet:
        return self.connection.grad_y()

    @cached_property
    def E_jet(self) -> Jet:
        return jcontract("mjkm->jk", self.B_jet) * 0.5

    @cached_property
    def D_jet(self) -> Jet:
        n = self.n
        delta = np.eye(n)
        E = self.E_jet
        dE = E.grad_y()  # dE[j, k, l] = E_jk,l
        brace = (
            jeinsum("jk,il->ijkl", E, delta)
            + jeinsum("kl,ij->ijkl", E, delta)
            + jeinsum("lj,ik->ijkl", E, delta)
            + jeinsum("jkl,i->ijkl", dE, self.Y)
        )
        return self.B_jet - brace * (2.0 / (n + 1))

    @cached_property
    def R_jet(self) -> Jet:
        """R^i_k = 2∂_k G^i − y^j ∂²G^i/∂x^j∂y^k + 2G^j G^i_jk − N^i_j N^j_k."""
        G = self.spray
        first = G.grad_x() * 2.0
        mixed = jeinsum("ikj,j->ik", self.N.grad_x(), self.Y)
        quad = jeinsum("j,ijk->ik", G, self.connection) * 2.0
        square = jeinsum("ij,jk->ik", self.N, self.N)
        return first - mixed + quad - square

    @cached_property
    def Rfull_jet(self) -> Jet:
        R2 = self.R_jet.grad_y().grad_y()  # R2[i, k, a, b] = ∂²R^i_k/∂y^a∂y^b
        return (jcontract("ikjl->ijkl", R2) - jcontract("iljk->ijkl", R2)) * (1.0 / 3.0)

    @cached_property
    def F2_jet(self) -> Jet:
        return f2_jet(self.M, self.x, self.y, 0, 3)

    @cached_property
    def fundamental(self):
        F2 = self.F2_jet
        return fundamental_from_values(F2.value, metric_jet(F2).value, self.y, self.x)

    # valores

    def _tensor(self, name: str, valence: str, components) -> TensorValue:
        return TensorValue(name, valence, np.asarray(components, dtype=float), tuple(self.x), tuple(self.y))

    @property
    def F2(self) -> float:
        return float(self.F2_jet.value)

    @property
    def G(self) -> TensorValue:
        return self._tensor("G", "^i", self.spray.value)

    @property
    def B(self) -> TensorValue:
        return self._tensor("B", "^i_jkl", self.B_jet.value)

    @property
    def E(self) -> TensorValue:
        return self._tensor("E", "_jk", self.E_jet.value)

    @property
    def D(self) -> TensorValue:
        return self._tensor("D", "^i_jkl", self.D_jet.value)

    @property
    def R(self) -> TensorValue:
        return self._tensor("R", "^i_k", self.R_jet.value)

    @property
    def Rfull(self) -> TensorValue:
        return self._tensor("R", "^i_jkl", self.Rfull_jet.value)

    @property
    def C(self) -> TensorValue:
        return self._tensor("C", "_ijk", self.F2_jet.grad_y().grad_y().grad_y().value * 0.25)

    @property
    def L(self) -> TensorValue:
        y_lower = self.fundamental.y_lower
        return self._tensor("L", "_jkl", -0.5 * np.einsum("m,mjkl->jkl", y_lower, self.B_jet.value))

    @cached_property
    def H_jet(self) -> Jet:
        return self.contract(self.E_jet, 0)

    @property
    def H(self) -> TensorValue:
        return self._tensor("H", "_jk", self.H_jet.value)

    @property
    def flag_curvature(self) -> float:
        """K = R^m_m / ((n − 1) F²)."""
        if self.n < 2:
            raise PreconditionError("Curvatura flag exige n >= 2")
        return float(np.trace(self.R_jet.value)) / ((self.n - 1) * self.F2)

    def contract(self, T: Jet, upper: int) -> Jet:
        return contracted_hderiv(T, upper, self.spray, self.N, self.Y)

    def full(self, T: Jet, upper: int) -> Jet:
        return full_hderiv(T, upper, self.N, self.connection)


@lru_cache(maxsize=settings.PACK_CACHE_SIZE)
def _cached_pack(M, x: tuple, y: tuple, method) -> CurvaturePack:
    return CurvaturePack(M, x, y, method)


def curvature_pack(M: FinslerMetric, x, y, method: str | None = None) -> CurvaturePack:
    x, y = _point(x, y)
    return _cached_pack(M, tuple(float(v) for v in x), tuple(float(v) for v in y), method)


# Operações

def berwald_curvature(M: FinslerMetric, x, y) -> TensorValue:
    return curvature_pack(M, x, y).B


def mean_berwald(M: FinslerMetric, x, y) -> TensorValue:
    return curvature_pack(M, x, y).E


def douglas_curvature(M: FinslerMetric, x, y) -> TensorValue:
    return curvature_pack(M, x, y).D


def douglas_curvature_definitional(M: FinslerMetric, x, y) -> TensorValue:
    """D = ∂³_y [G^i − (1/(n+1)) (∂G^m/∂y^m) y^i].

    O traço entra com 1/(n+1): ∂²(∂G^m/∂y^m) = 2E, o que reproduz os
    coeficientes 2/(n+1) da forma fechada.
    """
    pack = curvature_pack(M, x, y)
    n = pack.n
    trace = jcontract("mm->", pack.N)
    projective = pack.spray - pack.Y * trace * (1.0 / (n + 1))
    D = projective.grad_y().grad_y().grad_y()
    return pack._tensor("D", "^i_jkl", D.value)


def riemann_ry(M: FinslerMetric, x, y) -> TensorValue:
    return curvature_pack(M, x, y).R


def riemann_full(M: FinslerMetric, x, y) -> TensorValue:
    return curvature_pack(M, x, y).Rfull


def landsberg(M: FinslerMetric, x, y) -> TensorValue:
    return curvature_pack(M, x, y).L


def h_tensor(M: FinslerMetric, x, y) -> TensorValue:
    """H_jk = E_jk|m y^m."""
    return curvature_pack(M, x, y).H


_PACK_TENSORS = {"B": ("B_jet", 1), "D": ("D_jet", 1), "E": ("E_jet", 0)}


def hderiv_contract(T, M: FinslerMetric, x, y, upper: int = 1) -> TensorValue:
    """T_|m y^m para T dado por nome ('B', 'D', 'E') ou como campo T(xs, ys).

    Um campo devolve jato ou lista aninhada de jatos/floats; os ``upper``
    primeiros eixos são contravariantes.
    """
    pack = curvature_pack(M, x, y)
    if isinstance(T, str):
        if T not in _PACK_TENSORS:
            raise PreconditionError(f"Tensor desconhecido para derivada h: '{T}'")
        attr, upper = _PACK_TENSORS[T]
        jet = getattr(pack, attr)
        name = T
    else:
        space, xs, ys = seed_variables(pack.x, pack.y, 1, 1)
        jet = T(xs, ys)
        if not isinstance(jet, Jet):
            jet = stack_values(jet, space)
        name = getattr(T, "__name__", "T")
    rank = len(jet.shape)
    valence = ("^" + _AXES[:upper] if upper else "") + ("_" + _AXES[upper:rank] if rank > upper else "")
    return pack._tensor(f"{name}|0", valence, pack.contract(jet, upper).value)


def hderiv_full(T: str, M: FinslerMetric, x, y) -> TensorValue:
    """T_|m sem contrair; m é o último índice."""
    pack = curvature_pack(M, x, y)
    if T not in _PACK_TENSORS:
        raise PreconditionError(f"Tensor desconhecido para derivada h: '{T}'")
    attr, upper = _PACK_TENSORS[T]
    jet = getattr(pack, attr)
    rank = len(jet.shape)
    valence = ("^" + _AXES[:upper] if upper else "") + "_" + _AXES[upper:rank] + "m"
    return pack._tensor(f"{T}|", valence, pack.full(jet, upper).value)


# Identidades

def homogeneity_residuals(M: FinslerMetric, x, y) -> dict:
    """B y^j, E y^j e D y^j relativos às normas dos próprios tensores."""
    pack = curvature_pack(M, x, y)
    y = pack.y
    out = {}
    for name, T in (("B", pack.B_jet.value), ("D", pack.D_jet.value)):
        contracted = np.einsum("ijkl,j->ikl", T, y)
        out[name] = float(np.max(np.abs(contracted))) / max(np.max(np.abs(T)) * np.linalg.norm(y), 1e-300)
    E = pack.E_jet.value
    out["E"] = float(np.max(np.abs(E @ y))) / max(np.max(np.abs(E)) * np.linalg.norm(y), 1e-300)
    return out


def bianchi_r8_residual(M: FinslerMetric, x, y) -> float:
    """B^i_jkl|m − B^i_jmk|l contra R^i_jml,k (erro relativo)."""
    pack = curvature_pack(M, x, y)
    Bh = pack.full(pack.B_jet, 1)  # Bh[i, j, k, l, m] = B^i_jkl|m
    left = Bh - jcontract("ijmkl->ijklm", Bh)
    dR = pack.Rfull_jet.grad_y()  # dR[i, j, a, b, c] = R^i_jab,c
    right = jcontract("ijmlk->ijklm", dR)
    return _relative(left.value, right.value)


def b_derivative_symmetry_residual(M: FinslerMetric, x, y) -> float:
    """B^i_jkl,m = B^i_jkm,l."""
    pack = curvature_pack(M, x, y)
    dB = pack.B_jet.grad_y().value
    return _relative(dB, np.swapaxes(dB, 3, 4))


def gd3_residual(M: FinslerMetric, x, y) -> float:
    """h^m_i D^i_jkl|0 contra h^m_i B^i_jkl|0 − 2/(n+1){H_jk h^m_l + H_kl h^m_j + H_lj h^m_k}."""
    pack = curvature_pack(M, x, y)
    n = pack.n
    h = pack.fundamental.h_mixed
    Dh = np.einsum("mi,ijkl->mjkl", h, pack.contract(pack.D_jet, 1).value)
    Bh = np.einsum("mi,ijkl->mjkl", h, pack.contract(pack.B_jet, 1).value)
    H = pack.H_jet.value
    brace = (
        np.einsum("jk,ml->mjkl", H, h)
        + np.einsum("kl,mj->mjkl", H, h)
        + np.einsum("lj,mk->mjkl", H, h)
    )
    return _relative(Dh, Bh - brace * (2.0 / (n + 1)), floor=np.max(np.abs(Bh), initial=0.0) + 1e-300)


def h22_residual(M: FinslerMetric, x, y) -> float:
    """H_jk contra −(n+1)/6 {y_k K_,j + y_j K_,k + F² K_,j,k}, normalizado por F.

    Com K = R^m_m/((n−1)F²) tomado como função de y; vale para métricas de
    curvatura flag escalar.
    """
    pack = curvature_pack(M, x, y)
    n = pack.n
    if n < 2:
        raise PreconditionError("h22 exige n >= 2")
    F2 = pack.F2_jet
    K = jcontract("mm->", pack.R_jet) / (F2 * float(n - 1))
    dK = K.grad_y()
    Kj = dK.value
    Kjk = dK.grad_y().value
    y_lower = pack.fundamental.y_lower
    rhs = -(n + 1) / 6.0 * (np.outer(y_lower, Kj) + np.outer(Kj, y_lower) + F2.value * Kjk)
    H = pack.H_jet.value
    return float(np.max(np.abs(H - rhs))) / np.sqrt(F2.value)


# (α, β)-métricas com r_ij = 0 e s_j = 0

def _check_reduced(inv) -> None:
    worst = max(float(np.max(np.abs(inv.r))), float(np.max(np.abs(inv.s_j))))
    if worst > settings.REDUCED_B_TOL:
        raise PreconditionError(
            f"Forma reduzida de B exige r_ij = 0 e s_j = 0 (resíduo {worst:.3g})"
        )


def berwald_ab_reduced(M: ABMetric, x, y) -> TensorValue:
    """B^i_jkl = ∂³(αQ)s^i_0 + três termos ∂²(αQ)s^i_l, montados com α_j e Q_j.

    Com r_ij = 0 e s_j = 0 o spray fica G^i_α + αQ s^i_0; Q_j sai da regra da
    cadeia em s = β/α.
    """
    if not isinstance(M, ABMetric):
        raise PreconditionError("berwald_ab_reduced exige uma (α, β)-métrica")
    x, y = _point(x, y)
    M.check_direction(x, y)
    inv = beta_invariants(M.a, M.beta, x, y)
    _check_reduced(inv)
    A = M.a.at(x)
    b = M.beta.vector(list(x))
    y_low = A @ y
    alpha = float(np.sqrt(y @ y_low))
    big = alpha ** 2 * A - np.outer(y_low, y_low)
    a1 = y_low / alpha
    a2 = big / alpha ** 3
    a3 = -(
        np.einsum("jk,l->jkl", big, y_low)
        + np.einsum("jl,k->jkl", big, y_low)
        + np.einsum("lk,j->jkl", big, y_low)
    ) / alpha ** 5

    space, _, ys = seed_variables(x, y, 0, 3)
    Y = stack_values(ys, space)
    s = jeinsum("i,i->", b, Y) / sqrt(jeinsum("i,i->", Y, jeinsum("ij,j->i", A, Y)))
    s1 = s.grad_y()
    s2 = s1.grad_y()
    s1, s2, s3 = s1.value, s2.value, s2.grad_y().value
    s0 = float(s.value)
    coeffs = q_series(M.phi, s0, 3)
    Q, dQ, ddQ, dddQ = coeffs[:4] * np.array([1.0, 1.0, 2.0, 6.0])
    Q1 = dQ * s1
    Q2 = ddQ * np.outer(s1, s1) + dQ * s2
    Q3 = (
        dddQ * np.einsum("j,k,l->jkl", s1, s1, s1)
        + ddQ * (np.einsum("jk,l->jkl", s2, s1) + np.einsum("jl,k->jkl", s2, s1) + np.einsum("kl,j->jkl", s2, s1))
        + dQ * s3
    )
    f2 = Q * a2 + np.outer(a1, Q1) + np.outer(Q1, a1) + alpha * Q2
    f3 = (
        Q * a3
        + np.einsum("jk,l->jkl", a2, Q1) + np.einsum("lk,j->jkl", a2, Q1) + np.einsum("lj,k->jkl", a2, Q1)
        + alpha * Q3
        + np.einsum("l,jk->jkl", a1, Q2) + np.einsum("j,lk->jkl", a1, Q2) + np.einsum("k,jl->jkl", a1, Q2)
    )
    s_up = inv.s_up
    B = (
        np.einsum("il,jk->ijkl", s_up, f2)
        + np.einsum("ij,lk->ijkl", s_up, f2)
        + np.einsum("ik,jl->ijkl", s_up, f2)
        + np.einsum("i,jkl->ijkl", inv.s_up0, f3)
    )
    return TensorValue("B", "^i_jkl", B, tuple(x), tuple(y))


def q_contractions(M: ABMetric, x, y) -> dict:
    """α_k e Q_k (derivadas contraídas com b^i) contra as fórmulas fechadas.

    Devolve os resíduos relativos de α₁..α₃ e Q₁..Q₃ e o valor relativo
    de Qα₂ + 2α₁Q₁ + αQ₂, que se anula quando (b² − s²)Q″ + Q − sQ′ = 0.
    """
    if not isinstance(M, ABMetric):
        raise PreconditionError("q_contractions exige uma (α, β)-métrica")
    x, y = _point(x, y)
    M.check_direction(x, y)
    A = M.a.at(x)
    b = M.beta.vector(list(x))
    b_up = np.linalg.solve(A, b)
    b2 = float(b @ b_up)
    alpha = float(np.sqrt(y @ A @ y))
    s0 = float(b @ y) / alpha
    alphas = alpha_b_derivatives(M.a, M.beta, x, y, 3)

    # Q(s(y + t b)) como série em t
    space = JetSpace.of(0, 1, 0, 3)
    t = Jet.variable(space, 0, 0.0)
    ys = [t * b_up[i] + y[i] for i in range(M.n)]
    al = sqrt(sum(A[i, j] * ys[i] * ys[j] for i in range(M.n) for j in range(M.n)))
    s = sum(b[i] * ys[i] for i in range(M.n)) / al
    Qt = s.compose(q_series(M.phi, s0, 3)).coef * np.array([1.0, 1.0, 2.0, 6.0])

    coeffs = q_series(M.phi, s0, 3)
    Q, dQ, ddQ, dddQ = coeffs[:4] * np.array([1.0, 1.0, 2.0, 6.0])
    w = b2 - s0 * s0
    expected_alpha = [s0, w / alpha, -3.0 * s0 * w / alpha ** 2]
    expected_q = [
        dQ * w / alpha,
        w * (w * ddQ - 3.0 * s0 * dQ) / alpha ** 2,
        (w ** 3 * dddQ - 9.0 * s0 * w * w * ddQ + 3.0 * w * (5.0 * s0 * s0 - b2) * dQ) / alpha ** 3,
    ]
    out = {}
    for k in range(3):
        out[f"alpha_{k + 1}"] = _relative(alphas[k + 1], expected_alpha[k], floor=1e-12)
        out[f"Q_{k + 1}"] = _relative(Qt[k + 1], expected_q[k], floor=1e-12)
    terms = np.array([Q * alphas[2], 2.0 * alphas[1] * Qt[1], alpha * Qt[2]])
    out["reduced_condition"] = float(abs(terms.sum()) / max(np.abs(terms).sum(), 1e-300))
    return out
