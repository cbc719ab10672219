# finslab/geometry.py

"""
Dados riemannianos: a_ij(x), conexão de Levi-Civita, spray de α e os
invariantes da derivada covariante de β = b_i(x) y^i.

Índices sobem e descem sempre com a (nunca com g) neste módulo.
Convenção de arrays: gamma[i, j, k] = Γ^i_jk; bij[i, j] = b_{i|j}.
"""

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg

from .deriv import Jet, JetSpace, jeinsum, jet_inverse, seed_variables, sqrt, stack_values
from .errors import NotPositiveDefiniteError, PreconditionError
from .expr import as_field

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class TensorValue:
    """Componentes de um tensor num ponto; valence como '^i_jkl' ou '_jk'."""

    name: str
    valence: str
    components: np.ndarray
    x: tuple = ()
    y: tuple = ()

    @property
    def norm(self) -> float:
        return float(np.max(np.abs(self.components))) if np.size(self.components) else 0.0

    def labeled(self) -> dict:
        """Componentes rotuladas pelos índices (1-based), ex.: 'B^1_122'."""
        comps = np.asarray(self.components, dtype=float)
        if comps.ndim == 0:
            return {self.name: float(comps)}
        upper, _, lower = self.valence.partition("_")
        upper = upper.lstrip("^")
        n_up = len(upper)
        out = {}
        for idx in np.ndindex(comps.shape):
            label = self.name
            ups = "".join(str(i + 1) for i in idx[:n_up])
            lows = "".join(str(i + 1) for i in idx[n_up:])
            if ups:
                label += "^" + ups
            if lows:
                label += "_" + lows
            out[label] = float(comps[idx])
        return out


class RiemannMetric:
    """Métrica riemanniana a_ij(x); simétrica por construção (usa i <= j)."""

    def __init__(self, components, params: dict | None = None):
        n = len(components)
        if n < 1 or any(len(row) != n for row in components):
            raise PreconditionError("a_ij deve ser uma matriz quadrada")
        self.n = n
        self.params = params or {}
        self.specs = [[components[min(i, j)][max(i, j)] for j in range(n)] for i in range(n)]
        self.fields = [[as_field(self.specs[i][j], n, self.params) for j in range(n)] for i in range(n)]
        for row in self.fields:
            for f in row:
                if f.expression.depends_on_y():
                    raise PreconditionError(f"a_ij não pode depender de y: {f!r}")

    @classmethod
    def diagonal(cls, entries, params: dict | None = None) -> "RiemannMetric":
        n = len(entries)
        comps = [[entries[i] if i == j else 0.0 for j in range(n)] for i in range(n)]
        return cls(comps, params)

    @classmethod
    def euclidean(cls, n: int) -> "RiemannMetric":
        return cls.diagonal([1.0] * n)

    def matrix(self, xs, space: JetSpace | None = None):
        """a_ij avaliada em xs (floats -> ndarray, jatos -> Jet (n, n))."""
        values = [[f(xs) for f in row] for row in self.fields]
        if space is None:
            return np.array(values, dtype=float)
        return stack_values(values, space)

    def at(self, x) -> np.ndarray:
        a = self.matrix([float(v) for v in x])
        check_positive_definite(a, x)
        return a

    def __repr__(self):
        return f"RiemannMetric(n={self.n}, a={self.specs!r})"


class OneForm:
    """1-forma β = b_i(x) y^i."""

    def __init__(self, components, params: dict | None = None):
        self.n = len(components)
        self.params = params or {}
        self.specs = list(components)
        self.fields = [as_field(c, self.n, self.params) for c in components]
        for f in self.fields:
            if f.expression.depends_on_y():
                raise PreconditionError(f"b_i não pode depender de y: {f!r}")

    def vector(self, xs, space: JetSpace | None = None):
        values = [f(xs) for f in self.fields]
        if space is None:
            return np.array(values, dtype=float)
        return stack_values(values, space)

    def __repr__(self):
        return f"OneForm(b={self.specs!r})"


def check_positive_definite(a: np.ndarray, x=None) -> None:
    try:
        linalg.cholesky(a, lower=True)
    except linalg.LinAlgError as exc:
        raise NotPositiveDefiniteError("a_ij não é positiva definida", x) from exc


def christoffel(A: Jet, A_inv: Jet | None = None) -> Jet:
    """Γ^i_jk em jatos; A precisa de ordem em x >= 1 (perde uma ordem)."""
    if A_inv is None:
        A_inv = jet_inverse(A)
    dA = A.grad_x()  # dA[l, k, j] = ∂_j a_lk
    lower = (dA + dA.transpose(0, 2, 1) - dA.transpose(2, 1, 0)) * 0.5
    # lower[l, k, j] = ½(∂_j a_lk + ∂_k a_lj - ∂_l a_kj)
    return jeinsum("il,lkj->ijk", A_inv, lower)


def levi_civita(a: RiemannMetric, x) -> TensorValue:
    """Γ^i_jk = ½ a^{il}(∂_j a_lk + ∂_k a_lj − ∂_l a_jk) em x."""
    x = np.asarray(x, dtype=float)
    a.at(x)
    space, xs, _ = seed_variables(x, np.zeros(a.n), 1, 0)
    gamma = christoffel(a.matrix(xs, space))
    return TensorValue("Gamma", "^i_jk", gamma.value, tuple(x))


def spray_alpha(a: RiemannMetric, x, y) -> TensorValue:
    """G^i_α = ½ Γ^i_jk y^j y^k."""
    y = np.asarray(y, dtype=float)
    if not np.any(y):
        raise PreconditionError("spray_alpha exige y != 0")
    gamma = levi_civita(a, x).components
    g = 0.5 * np.einsum("ijk,j,k->i", gamma, y, y)
    return TensorValue("G_alpha", "^i", g, tuple(np.asarray(x, float)), tuple(y))


@dataclass(frozen=True)
class BetaInvariants:
    """r_ij, s_ij, s^i_j, r_j, s_j, r_0, s_0, r_00, s^i_0 e b² num ponto (x, y)."""

    b_lower: np.ndarray
    b_upper: np.ndarray
    bij: np.ndarray
    r: np.ndarray
    s: np.ndarray
    s_up: np.ndarray
    r_j: np.ndarray
    s_j: np.ndarray
    r_0: float
    s_0: float
    r_00: float
    s_up0: np.ndarray
    b2: float
    x: tuple = ()
    y: tuple = field(default=())

    @property
    def b(self) -> float:
        return float(np.sqrt(self.b2))

    def as_dict(self) -> dict:
        return {
            "b_i": self.b_lower,
            "b^i": self.b_upper,
            "b_i|j": self.bij,
            "r_ij": self.r,
            "s_ij": self.s,
            "s^i_j": self.s_up,
            "r_j": self.r_j,
            "s_j": self.s_j,
            "r_0": self.r_0,
            "s_0": self.s_0,
            "r_00": self.r_00,
            "s^i_0": self.s_up0,
            "b2": self.b2,
        }


@dataclass
class InvariantJets:
    """Os mesmos invariantes, como jatos em (x, y); usado pelo spray (G1)."""

    A: Jet
    A_inv: Jet
    gamma: Jet
    b: Jet
    b_up: Jet
    bij: Jet
    r: Jet
    s: Jet
    s_up: Jet
    r_j: Jet
    s_j: Jet
    b2: Jet


def invariant_jets(A: Jet, b: Jet) -> InvariantJets:
    """Invariantes de β a partir de jatos de a_ij e b_i (ordem em x >= 1)."""
    A_inv = jet_inverse(A)
    gamma = christoffel(A, A_inv)
    db = b.grad_x()  # db[i, j] = ∂_j b_i
    bij = db - jeinsum("l,lij->ij", b, gamma)
    r = (bij + bij.transpose(1, 0)) * 0.5
    s = (bij - bij.transpose(1, 0)) * 0.5
    s_up = jeinsum("il,lj->ij", A_inv, s)
    b_up = jeinsum("ij,j->i", A_inv, b)
    return InvariantJets(
        A=A,
        A_inv=A_inv,
        gamma=gamma,
        b=b,
        b_up=b_up,
        bij=bij,
        r=r,
        s=s,
        s_up=s_up,
        r_j=jeinsum("i,ij->j", b_up, r),
        s_j=jeinsum("i,ij->j", b_up, s),
        b2=jeinsum("i,i->", b_up, b),
    )


def beta_invariants(a: RiemannMetric, beta: OneForm, x, y) -> BetaInvariants:
    """b_{i|j} = ∂_j b_i − b_l Γ^l_ij e a decomposição em r e s."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if beta.n != a.n:
        raise PreconditionError("a_ij e b_i com dimensões diferentes")
    a.at(x)
    space, xs, _ = seed_variables(x, y, 1, 0)
    inv = invariant_jets(a.matrix(xs, space), beta.vector(xs, space))
    r = inv.r.value
    s = inv.s.value
    r_j = inv.r_j.value
    s_j = inv.s_j.value
    s_up = inv.s_up.value
    return BetaInvariants(
        b_lower=inv.b.value,
        b_upper=inv.b_up.value,
        bij=inv.bij.value,
        r=r,
        s=s,
        s_up=s_up,
        r_j=r_j,
        s_j=s_j,
        r_0=float(r_j @ y),
        s_0=float(s_j @ y),
        r_00=float(y @ r @ y),
        s_up0=s_up @ y,
        b2=float(inv.b2.value),
        x=tuple(x),
        y=tuple(y),
    )


def alpha_b_derivatives(a: RiemannMetric, beta: OneForm, x, y, order: int = 3) -> np.ndarray:
    """α_k: derivadas de α em y contraídas k vezes com b^i = a^{ij} b_j.

    Valem α_1 = s, α_2 = (b² − s²)/α, α_3 = −3s(b² − s²)/α².
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    A = a.at(x)
    b_up = np.linalg.solve(A, beta.vector(list(x)))
    space = JetSpace.of(0, 1, 0, order)
    t = Jet.variable(space, 0, 0.0)
    ys = [t * b_up[i] + y[i] for i in range(a.n)]
    alpha = sqrt(sum(A[i, j] * ys[i] * ys[j] for i in range(a.n) for j in range(a.n)))
    k = np.arange(order + 1)
    return alpha.coef * np.array([np.prod(np.arange(1, kk + 1)) for kk in k], dtype=float)
