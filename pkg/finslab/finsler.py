# finslab/finsler.py

"""
Métrica de Finsler F, tensor fundamental, torção de Cartan e os dois
sprays: o genérico (fórmula do quarto sobre F²) e o específico de
(α, β)-métricas, montado com os invariantes de β e Q, Θ, Ψ.

Os sprays saem como jatos em (x, y): todo tensor de curvatura é derivada
deles, então um único jato de G por ponto alimenta o pacote inteiro.
"""

import logging
from abc import ABC, abstractmethod

import numpy as np

from . import settings
from .deriv import Jet, eval_jet, jeinsum, jet_inverse, seed_variables, sqrt, stack_values
from .errors import DomainError, NotPositiveDefiniteError, PreconditionError, StrongConvexityError
from .expr import ExpressionField, as_field, parse_expr
from .geometry import OneForm, RiemannMetric, TensorValue, invariant_jets
from .phi import PhiFamily, q_series

logger = logging.getLogger(__name__)


def _space_of(*groups):
    for group in groups:
        for v in group:
            if isinstance(v, Jet):
                return v.space
    return None


class FinslerMetric(ABC):
    """F(x, y) positivamente 1-homogênea em y."""

    homogeneous = True
    spray_method = "generic"

    def __init__(self, n: int, name: str = "", box=None):
        self.n = n
        self.name = name or self.__class__.__name__
        self.box = box if box is not None else [(-0.5, 0.5)] * n

    @abstractmethod
    def __call__(self, xs, ys):
        """F em (xs, ys); floats ou jatos."""

    def squared(self, xs, ys):
        F = self(xs, ys)
        return F * F

    def check_direction(self, x, y) -> None:
        if not np.any(np.asarray(y, dtype=float)):
            raise DomainError("y = 0: F não é diferenciável ali", x, y)

    def regular_radius(self) -> float | None:
        return None

    def __repr__(self):
        return f"{self.__class__.__name__}({self.name!r}, n={self.n})"


class ABMetric(FinslerMetric):
    """F = α φ(β/α)."""

    spray_method = "ab"

    def __init__(self, a: RiemannMetric, beta: OneForm, phi: PhiFamily, name: str = "", box=None):
        if a.n != beta.n:
            raise PreconditionError("a_ij e b_i com dimensões diferentes")
        super().__init__(a.n, name or f"ab[{phi.spec()}]", box)
        self.a = a
        self.beta = beta
        self.phi = phi

    def parts(self, xs, ys):
        """(α², α, β, s) em (xs, ys)."""
        space = _space_of(xs, ys)
        A = self.a.matrix(xs, space)
        b = self.beta.vector(xs, space)
        if space is None:
            y = np.asarray(ys, dtype=float)
            alpha2 = float(y @ A @ y)
            beta = float(b @ y)
            alpha = np.sqrt(alpha2)
            return alpha2, alpha, beta, beta / alpha
        Y = stack_values(list(ys), space)
        alpha2 = jeinsum("i,i->", Y, jeinsum("ij,j->i", A, Y))
        beta = jeinsum("i,i->", b, Y)
        alpha = sqrt(alpha2)
        return alpha2, alpha, beta, beta / alpha

    def _phi_of(self, s):
        value = s.value if isinstance(s, Jet) else s
        if not abs(value) < self.phi.b0:
            raise DomainError(
                f"Direção extremal: |s|={abs(value):.6g} >= b0={self.phi.b0:.6g} ({self.phi.kind})"
            )
        return self.phi.compose(s) if isinstance(s, Jet) else self.phi(s)

    def __call__(self, xs, ys):
        _, alpha, _, s = self.parts(xs, ys)
        return alpha * self._phi_of(s)

    def squared(self, xs, ys):
        alpha2, _, _, s = self.parts(xs, ys)
        p = self._phi_of(s)
        return alpha2 * (p * p)

    def regular_radius(self) -> float:
        return self.phi.b0

    def b_norm(self, x) -> float:
        x = [float(v) for v in x]
        A = self.a.at(x)
        b = self.beta.vector(x)
        return float(np.sqrt(b @ np.linalg.solve(A, b)))


class GenericMetric(FinslerMetric):
    """F dada por uma expressão em x1..xn, y1..yn."""

    def __init__(self, expression, n: int, params: dict | None = None, name: str = "", box=None):
        super().__init__(n, name or "generic", box)
        if isinstance(expression, ExpressionField):
            self.field = expression
        else:
            self.field = as_field(parse_expr(str(expression), n, tuple(params or {})), n, params)

    def __call__(self, xs, ys):
        return self.field(xs, ys)


# Operações pontuais

def _point(x, y):
    return np.asarray(x, dtype=float), np.asarray(y, dtype=float)


def f_value(M: FinslerMetric, x, y) -> float:
    """F(x, y) > 0."""
    x, y = _point(x, y)
    M.check_direction(x, y)
    try:
        value = float(M([float(v) for v in x], [float(v) for v in y]))
    except DomainError as exc:
        if exc.x is None:
            raise DomainError(str(exc), x, y) from exc
        raise
    if not value > 0.0:
        raise DomainError(f"F não positiva: {value}", x, y)
    return value


def f2_jet(M: FinslerMetric, x, y, order_x: int, order_y: int) -> Jet:
    """Jato de F² em (x, y)."""
    x, y = _point(x, y)
    M.check_direction(x, y)
    return eval_jet(M.squared, x, y, order_x, order_y)


def metric_jet(F2: Jet) -> Jet:
    """g_ij = ½ ∂²F²/∂y^i∂y^j como jato (n, n)."""
    return F2.grad_y().grad_y() * 0.5


def inverse_metric(g: Jet, x=None, y=None) -> Jet:
    try:
        return jet_inverse(g)
    except NotPositiveDefiniteError as exc:
        raise StrongConvexityError("g_ij não é positiva definida: F não é fortemente convexa", x, y) from exc


class FundamentalPack:
    """F, g_ij, g^ij, y_i, h_ij e h^i_j num ponto."""

    def __init__(self, F, g, g_inv, y_lower, h, h_mixed, x=(), y=()):
        self.F = F
        self.g = g
        self.g_inv = g_inv
        self.y_lower = y_lower
        self.h = h
        self.h_mixed = h_mixed
        self.x = tuple(x)
        self.y = tuple(y)

    def as_dict(self) -> dict:
        return {"F": self.F, "g": self.g, "g_inv": self.g_inv, "y_i": self.y_lower,
                "h": self.h, "h^i_j": self.h_mixed}


def fundamental_from_values(F2: float, g: np.ndarray, y: np.ndarray, x=()) -> FundamentalPack:
    F = float(np.sqrt(F2))
    try:
        np.linalg.cholesky(g)
    except np.linalg.LinAlgError as exc:
        raise StrongConvexityError("g_ij não é positiva definida", x, y) from exc
    g_inv = np.linalg.inv(g)
    y_lower = g @ y
    h = g - np.outer(y_lower, y_lower) / F2
    h_mixed = np.eye(len(y)) - np.outer(y, y_lower) / F2
    return FundamentalPack(F, g, g_inv, y_lower, h, h_mixed, x, y)


def fundamental_pack(M: FinslerMetric, x, y) -> FundamentalPack:
    """g_ij = ½ [F²]_{y^i y^j}; h_ij = g_ij − F⁻² y_i y_j."""
    x, y = _point(x, y)
    F2 = f2_jet(M, x, y, 0, 2)
    return fundamental_from_values(F2.value, metric_jet(F2).value, y, x)


def cartan_torsion(M: FinslerMetric, x, y) -> TensorValue:
    """C_ijk = ¼ [F²]_{y^i y^j y^k}."""
    x, y = _point(x, y)
    F2 = f2_jet(M, x, y, 0, 3)
    C = F2.grad_y().grad_y().grad_y().value * 0.25
    return TensorValue("C", "_ijk", C, tuple(x), tuple(y))


# Sprays em jatos

def generic_spray_jet(M: FinslerMetric, x, y, order_x: int, order_y: int) -> Jet:
    """G^i = ¼ g^{il}([F²]_{x^k y^l} y^k − [F²]_{x^l}) em jatos.

    Consome uma ordem em x e duas em y de F².
    """
    x, y = _point(x, y)
    F2 = f2_jet(M, x, y, order_x + 1, order_y + 2)
    g = metric_jet(F2)
    g_inv = inverse_metric(g, x, y)
    _, _, ys = seed_variables(x, y, F2.space.order_x, F2.space.order_y)
    Y = stack_values(ys, F2.space)
    dyx = F2.grad_y().grad_x()  # dyx[l, k] = ∂²F²/∂y^l∂x^k
    term = jeinsum("lk,k->l", dyx, Y) - F2.grad_x()
    return jeinsum("il,l->i", g_inv, term) * 0.25


def _assemble_g1(G_alpha, alpha, Q, s_up0, s_0, r_00, Theta, Psi, Y, b_up):
    """G^i = G^i_α + αQ s^i_0 + (−2Qα s_0 + r_00)(Θ y^i/α + Ψ b^i)."""
    scalar = r_00 - 2.0 * Q * alpha * s_0
    direction = Y * (Theta / alpha) + b_up * Psi
    return G_alpha + s_up0 * (alpha * Q) + direction * scalar


def ab_spray_jet(M: ABMetric, x, y, order_x: int, order_y: int) -> Jet:
    """G^i das (α, β)-métricas pela fórmula com Q, Θ, Ψ e os invariantes de β."""
    x, y = _point(x, y)
    M.check_direction(x, y)
    space, xs, ys = seed_variables(x, y, order_x + 1, order_y)
    inv = invariant_jets(M.a.matrix(xs, space), M.beta.vector(xs, space))
    Y = stack_values(ys, space)
    G_alpha = jeinsum("ijk,k->ij", inv.gamma, Y)
    G_alpha = jeinsum("ij,j->i", G_alpha, Y) * 0.5
    alpha = sqrt(jeinsum("i,i->", Y, jeinsum("ij,j->i", inv.A, Y)))
    s = jeinsum("i,i->", inv.b, Y) / alpha
    s0 = float(s.value)
    if not abs(s0) < M.phi.b0:
        raise DomainError(f"Direção extremal: |s|={abs(s0):.6g} >= b0={M.phi.b0:.6g}", x, y)
    K = space.max_degree
    coeffs = M.phi.taylor(s0, K + 2)
    k = np.arange(len(coeffs))
    d1 = coeffs[1:] * k[1:]
    d2 = d1[1:] * k[1:-1]
    phi0 = s.compose(coeffs[: K + 1])
    phi1 = s.compose(d1[: K + 1])
    phi2 = s.compose(d2[: K + 1])
    Q = s.compose(q_series(M.phi, s0, K))
    b2 = inv.b2
    regular = (phi0 - s * phi1) + (b2 - s * s) * phi2
    Theta = (phi0 * phi1 - s * (phi0 * phi2 + phi1 * phi1)) / (phi0 * regular * 2.0)
    Psi = phi2 / (regular * 2.0)
    s_up0 = jeinsum("ij,j->i", inv.s_up, Y)
    s_0 = jeinsum("j,j->", inv.s_j, Y)
    r_00 = jeinsum("i,i->", Y, jeinsum("ij,j->i", inv.r, Y))
    return _assemble_g1(G_alpha, alpha, Q, s_up0, s_0, r_00, Theta, Psi, Y, inv.b_up)


def spray_jet(M: FinslerMetric, x, y, order_x: int, order_y: int, method: str | None = None) -> Jet:
    """Jato de G^i até as ordens pedidas; method 'ab' ou 'generic'."""
    method = method or M.spray_method
    if order_x + order_y > settings.SPRAY_MAX_ORDER:
        raise PreconditionError(
            f"Ordem do spray {order_x}+{order_y} acima de {settings.SPRAY_MAX_ORDER}"
        )
    if method == "ab":
        if not isinstance(M, ABMetric):
            raise PreconditionError("O spray (α, β) só vale para ABMetric")
        return ab_spray_jet(M, x, y, order_x, order_y)
    if method == "generic":
        return generic_spray_jet(M, x, y, order_x, order_y)
    raise PreconditionError(f"Método de spray desconhecido: '{method}'")


def spray_generic(M: FinslerMetric, x, y) -> TensorValue:
    x, y = _point(x, y)
    G = generic_spray_jet(M, x, y, 0, 0)
    return TensorValue("G", "^i", G.value, tuple(x), tuple(y))


def spray_ab(M: ABMetric, x, y) -> TensorValue:
    x, y = _point(x, y)
    G = ab_spray_jet(M, x, y, 0, 0)
    return TensorValue("G", "^i", G.value, tuple(x), tuple(y))


def spray_relative_error(M: ABMetric, x, y) -> float:
    """|G_ab − G_generic| / max(|G_generic|, F²) num ponto."""
    G_ab = spray_ab(M, x, y).components
    G_gen = spray_generic(M, x, y).components
    scale = max(np.max(np.abs(G_gen)), f_value(M, x, y) ** 2)
    return float(np.max(np.abs(G_ab - G_gen)) / scale)


def as_metric_field(M: FinslerMetric):
    """F como campo escalar para eval_jet/fd_oracle."""

    def field(xs, ys):
        return M(xs, ys)

    field.homogeneous = True
    return field


def as_metric_squared(M: FinslerMetric):
    def field(xs, ys):
        return M.squared(xs, ys)

    field.homogeneous = True
    return field

