# finslab/deriv.py

"""
Motor de derivadas do laboratório.

Um ``Jet`` guarda os coeficientes de Taylor truncados de um campo f(x, y) num
ponto base. A truncagem é uma caixa: grau em x <= order_x e grau em y <=
order_y, de modo que o produto de dois jatos continua exato dentro da caixa.
O jato pode ter eixos tensoriais na frente (G^i, B^i_jkl ...) e o eixo de
Taylor sempre por último.

Coeficientes seguem a convenção c_a = (d^a f)(p) / a!, então a derivada
parcial de multi-índice a é c_a * a!.

``fd_oracle`` é o oráculo independente: diferenças centrais com extrapolação
de Richardson.
"""

import logging
import math
from dataclasses import dataclass
from functools import lru_cache
from itertools import product

import numpy as np
from scipy import linalg, sparse

from . import settings
from .errors import (
    DomainError,
    FiniteDifferenceError,
    NotPositiveDefiniteError,
    PreconditionError,
)

logger = logging.getLogger(__name__)

EPS = np.finfo(float).eps


@dataclass(frozen=True)
class MultiIndex:
    """Ordens de derivação por variável: (x^1..x^n, y^1..y^n)."""

    orders: tuple

    def __post_init__(self):
        orders = tuple(int(o) for o in self.orders)
        object.__setattr__(self, "orders", orders)
        if any(o < 0 for o in orders):
            raise PreconditionError("Multi-índice com ordem negativa")
        if len(orders) % 2:
            raise PreconditionError("Multi-índice deve ter comprimento 2n")
        if sum(orders) > settings.MAX_TOTAL_ORDER:
            raise PreconditionError(
                f"Ordem total {sum(orders)} acima do máximo {settings.MAX_TOTAL_ORDER}"
            )

    @classmethod
    def of(cls, n: int, x=(), y=()):
        """Monta a partir de listas de índices (com repetição) em x e em y."""
        orders = [0] * (2 * n)
        for i in x:
            orders[i] += 1
        for i in y:
            orders[n + i] += 1
        return cls(tuple(orders))

    @property
    def n(self) -> int:
        return len(self.orders) // 2

    @property
    def total(self) -> int:
        return sum(self.orders)

    @property
    def order_x(self) -> int:
        return sum(self.orders[: self.n])

    @property
    def order_y(self) -> int:
        return sum(self.orders[self.n:])

    def permuted_variables(self) -> tuple:
        """Forma ordenada: variável v repetida orders[v] vezes."""
        return tuple(v for v, o in enumerate(self.orders) for _ in range(o))


def _monomials(nvars: int, order: int) -> list:
    """Expoentes com grau total <= order, ordenados por grau e depois lexicamente."""
    if nvars == 0:
        return [()]
    found = [e for e in product(range(order + 1), repeat=nvars) if sum(e) <= order]
    found.sort(key=lambda e: (sum(e), tuple(-v for v in e)))
    return found


def _pair_table(monos: list, order: int):
    index = {e: i for i, e in enumerate(monos)}
    a, b, c = [], [], []
    for i, e1 in enumerate(monos):
        for j, e2 in enumerate(monos):
            e = tuple(p + q for p, q in zip(e1, e2))
            if sum(e) <= order:
                a.append(i)
                b.append(j)
                c.append(index[e])
    return np.array(a, dtype=np.intp), np.array(b, dtype=np.intp), np.array(c, dtype=np.intp)


class JetSpace:
    """Caixa de monômios (grau_x <= order_x, grau_y <= order_y) e suas tabelas."""

    def __init__(self, nx: int, ny: int, order_x: int, order_y: int):
        if order_x < 0 or order_y < 0:
            raise PreconditionError("Ordem de jato negativa")
        self.nx = nx
        self.ny = ny
        self.order_x = order_x
        self.order_y = order_y
        self._mx = _monomials(nx, order_x)
        self._my = _monomials(ny, order_y)
        self.exponents = np.array(
            [ex + ey for ex in self._mx for ey in self._my], dtype=int
        ).reshape(len(self._mx) * len(self._my), nx + ny)
        self.index = {tuple(e): i for i, e in enumerate(self.exponents.tolist())}
        self.size = len(self.exponents)
        self.max_degree = order_x + order_y
        self.factorials = np.array(
            [math.prod(math.factorial(int(v)) for v in e) for e in self.exponents],
            dtype=float,
        )
        self._product = None
        self._diff = {}
        self._projection = {}

    @staticmethod
    @lru_cache(maxsize=None)
    def of(nx: int, ny: int, order_x: int, order_y: int) -> "JetSpace":
        return JetSpace(nx, ny, order_x, order_y)

    def __repr__(self):
        return f"JetSpace(nx={self.nx}, ny={self.ny}, ox={self.order_x}, oy={self.order_y})"

    @property
    def nvars(self) -> int:
        return self.nx + self.ny

    def product_table(self):
        """Pares (i, j) com e_i + e_j dentro da caixa e a matriz que soma em k."""
        if self._product is None:
            ax, bx, cx = _pair_table(self._mx, self.order_x)
            ay, by, cy = _pair_table(self._my, self.order_y)
            ny = len(self._my)
            i = (ax[:, None] * ny + ay[None, :]).ravel()
            j = (bx[:, None] * ny + by[None, :]).ravel()
            k = (cx[:, None] * ny + cy[None, :]).ravel()
            reducer = sparse.csr_matrix(
                (np.ones(len(k)), (k, np.arange(len(k)))), shape=(self.size, len(k))
            )
            self._product = (i, j, reducer)
        return self._product

    def shrink(self, variable: int) -> "JetSpace":
        if variable < self.nx:
            return JetSpace.of(self.nx, self.ny, self.order_x - 1, self.order_y)
        return JetSpace.of(self.nx, self.ny, self.order_x, self.order_y - 1)

    def diff_table(self, variable: int):
        if variable not in self._diff:
            target = self.shrink(variable)
            src = np.empty(target.size, dtype=np.intp)
            factor = np.empty(target.size)
            for m, e in enumerate(target.exponents.tolist()):
                e[variable] += 1
                src[m] = self.index[tuple(e)]
                factor[m] = e[variable]
            self._diff[variable] = (target, src, factor)
        return self._diff[variable]

    def projection(self, target: "JetSpace"):
        if target is self:
            return None
        if target not in self._projection:
            self._projection[target] = np.array(
                [self.index[tuple(e)] for e in target.exponents.tolist()], dtype=np.intp
            )
        return self._projection[target]

    def common(self, other: "JetSpace") -> "JetSpace":
        if other is self:
            return self
        if (other.nx, other.ny) != (self.nx, self.ny):
            raise PreconditionError("Jatos com números de variáveis diferentes")
        return JetSpace.of(
            self.nx,
            self.ny,
            min(self.order_x, other.order_x),
            min(self.order_y, other.order_y),
        )


def _const_coef(space: JetSpace, value) -> np.ndarray:
    value = np.asarray(value, dtype=float)
    coef = np.zeros(value.shape + (space.size,))
    coef[..., 0] = value
    return coef


def _multiply(space: JetSpace, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    i, j, reducer = space.product_table()
    pairs = a[..., i] * b[..., j]
    lead = pairs.shape[:-1]
    flat = pairs.reshape(-1, pairs.shape[-1])
    out = np.asarray(reducer @ flat.T).T
    return out.reshape(lead + (space.size,))


class Jet:
    """Jato de Taylor (possivelmente tensorial) num ponto base."""

    __slots__ = ("space", "coef", "point")
    __array_priority__ = 1000
    __array_ufunc__ = None

    def __init__(self, space: JetSpace, coef, point=None):
        coef = np.asarray(coef, dtype=float)
        if coef.shape[-1:] != (space.size,):
            raise PreconditionError(
                f"Coeficientes com último eixo {coef.shape[-1:]} para espaço de tamanho {space.size}"
            )
        self.space = space
        self.coef = coef
        self.point = point

    # Construtores

    @classmethod
    def constant(cls, space: JetSpace, value) -> "Jet":
        return cls(space, _const_coef(space, value))

    @classmethod
    def variable(cls, space: JetSpace, variable: int, value: float) -> "Jet":
        coef = np.zeros(space.size)
        coef[0] = value
        unit = [0] * space.nvars
        unit[variable] = 1
        if sum(unit[: space.nx]) <= space.order_x and sum(unit[space.nx:]) <= space.order_y:
            coef[space.index[tuple(unit)]] = 1.0
        return cls(space, coef)

    @classmethod
    def stack(cls, jets, axis: int = 0) -> "Jet":
        jets = [j for j in jets]
        space = jets[0].space
        for j in jets[1:]:
            space = space.common(j.space)
        coefs = [j.truncate(space).coef for j in jets]
        if axis < 0:
            axis -= 1
        return cls(space, np.stack(coefs, axis=axis))

    # Acesso

    @property
    def shape(self) -> tuple:
        return self.coef.shape[:-1]

    @property
    def value(self):
        v = self.coef[..., 0]
        return float(v) if v.ndim == 0 else np.array(v)

    def __getitem__(self, key) -> "Jet":
        # indexa só os eixos tensoriais; o eixo de Taylor fica intacto
        return Jet(self.space, self.coef[key])

    def __len__(self):
        return self.shape[0]

    def __repr__(self):
        return f"Jet(shape={self.shape}, {self.space!r}, value={self.value})"

    def partial(self, index) -> float:
        """Derivada parcial de multi-índice ``index`` no ponto base."""
        mi = index if isinstance(index, MultiIndex) else MultiIndex(tuple(index))
        if len(mi.orders) != self.space.nvars:
            raise PreconditionError("Multi-índice com dimensão errada")
        key = tuple(mi.orders)
        if key not in self.space.index:
            raise PreconditionError(f"Multi-índice {key} fora da caixa {self.space!r}")
        k = self.space.index[key]
        v = self.coef[..., k] * self.space.factorials[k]
        return float(v) if np.ndim(v) == 0 else v

    def table(self) -> dict:
        """Tabela completa multi-índice -> derivada (um valor por índice ordenado)."""
        out = {}
        for k, e in enumerate(self.space.exponents.tolist()):
            v = self.coef[..., k] * self.space.factorials[k]
            out[MultiIndex(tuple(e))] = float(v) if np.ndim(v) == 0 else v
        return out

    def truncate(self, space: JetSpace) -> "Jet":
        proj = self.space.projection(space)
        if proj is None:
            return self
        return Jet(space, self.coef[..., proj])

    def diff(self, variable: int) -> "Jet":
        target, src, factor = self.space.diff_table(variable)
        return Jet(target, self.coef[..., src] * factor)

    def dx(self, i: int) -> "Jet":
        return self.diff(i)

    def dy(self, i: int) -> "Jet":
        return self.diff(self.space.nx + i)

    def grad_y(self) -> "Jet":
        """Novo eixo (último antes do de Taylor) com as derivadas em y^j."""
        return Jet.stack([self.dy(j) for j in range(self.space.ny)], axis=-1)

    def grad_x(self) -> "Jet":
        return Jet.stack([self.dx(j) for j in range(self.space.nx)], axis=-1)

    def nilpotent(self) -> np.ndarray:
        h = self.coef.copy()
        h[..., 0] = 0.0
        return h

    def sum(self, axis) -> "Jet":
        axes = (axis,) if isinstance(axis, int) else tuple(axis)
        axes = tuple(a - 1 if a < 0 else a for a in axes)
        return Jet(self.space, self.coef.sum(axis=axes))

    def transpose(self, *axes) -> "Jet":
        return Jet(self.space, np.transpose(self.coef, tuple(axes) + (len(axes),)))

    # Aritmética

    def _pair(self, other):
        space = self.space.common(other.space)
        return self.truncate(space), other.truncate(space)

    def __add__(self, other):
        if isinstance(other, Jet):
            a, b = self._pair(other)
            return Jet(a.space, a.coef + b.coef)
        return Jet(self.space, self.coef + _const_coef(self.space, other))

    __radd__ = __add__

    def __neg__(self):
        return Jet(self.space, -self.coef)

    def __pos__(self):
        return self

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, Jet):
            a, b = self._pair(other)
            return Jet(a.space, _multiply(a.space, a.coef, b.coef))
        c = np.asarray(other, dtype=float)
        return Jet(self.space, self.coef * c[..., None])

    __rmul__ = __mul__

    def reciprocal(self) -> "Jet":
        v = np.asarray(self.coef[..., 0])
        if np.any(v == 0.0):
            raise DomainError("Divisão por zero")
        return self._power_series(-1.0)

    def __truediv__(self, other):
        if isinstance(other, Jet):
            return self * other.reciprocal()
        c = np.asarray(other, dtype=float)
        if np.any(c == 0.0):
            raise DomainError("Divisão por zero")
        return self * (1.0 / c)

    def __rtruediv__(self, other):
        return self.reciprocal() * other

    def __pow__(self, other):
        if isinstance(other, Jet):
            return exp(other * log(self))
        if isinstance(other, (int, np.integer)) or (
            isinstance(other, float) and other.is_integer() and abs(other) <= 64
        ):
            return self._integer_power(int(other))
        return self._power_series(float(other))

    def __rpow__(self, other):
        base = float(other)
        if base <= 0.0:
            raise DomainError("Base não positiva em potência com expoente variável")
        return exp(self * math.log(base))

    def _integer_power(self, p: int) -> "Jet":
        if p < 0:
            return self.reciprocal()._integer_power(-p)
        result = Jet.constant(self.space, np.ones(self.shape))
        base = self
        while p:
            if p & 1:
                result = result * base
            p >>= 1
            if p:
                base = base * base
        return result

    def _power_series(self, p: float) -> "Jet":
        v = np.asarray(self.coef[..., 0])
        if np.any(v <= 0.0) and not float(p).is_integer():
            raise DomainError("Potência não inteira de argumento não positivo")
        K = self.space.max_degree
        k = np.arange(K + 1)
        # binomial generalizado C(p, k) por recorrência: vale para p inteiro negativo
        ratios = (p - np.arange(1, K + 1) + 1.0) / np.arange(1, K + 1)
        binomials = np.concatenate([[1.0], np.cumprod(ratios)])
        coeffs = binomials * np.power(v[..., None], p - k)
        return self.compose(coeffs)

    def compose(self, coeffs) -> "Jet":
        """g(u) com g dado pelos coeficientes de Taylor em u0 = self.value (Horner)."""
        coeffs = np.asarray(coeffs, dtype=float)
        K = self.space.max_degree
        if coeffs.shape[-1] < K + 1:
            pad = np.zeros(coeffs.shape[:-1] + (K + 1 - coeffs.shape[-1],))
            coeffs = np.concatenate([coeffs, pad], axis=-1)
        h = self.nilpotent()
        result = _const_coef(self.space, coeffs[..., K])
        result = np.broadcast_to(result, np.broadcast_shapes(result.shape, h.shape)).copy()
        for k in range(K - 1, -1, -1):
            result = _multiply(self.space, result, h)
            result[..., 0] += coeffs[..., k]
        return Jet(self.space, result)


def _factorials(K: int) -> np.ndarray:
    return np.array([math.factorial(k) for k in range(K + 1)], dtype=float)


# Funções elementares: aceitam float ou Jet.

def exp(u):
    if isinstance(u, Jet):
        K = u.space.max_degree
        e = np.exp(np.asarray(u.coef[..., 0]))
        return u.compose(e[..., None] / _factorials(K))
    return math.exp(u)


def log(u):
    if isinstance(u, Jet):
        v = np.asarray(u.coef[..., 0])
        if np.any(v <= 0.0):
            raise DomainError("log de argumento não positivo")
        K = u.space.max_degree
        k = np.arange(1, K + 1)
        rest = ((-1.0) ** (k + 1)) / (k * np.power(v[..., None], k))
        coeffs = np.concatenate([np.log(v)[..., None], rest], axis=-1)
        return u.compose(coeffs)
    if u <= 0.0:
        raise DomainError("log de argumento não positivo")
    return math.log(u)


def sqrt(u):
    if isinstance(u, Jet):
        v = np.asarray(u.coef[..., 0])
        if np.any(v < 0.0):
            raise DomainError("sqrt de argumento negativo")
        if np.any(v == 0.0) and u.space.max_degree > 0:
            raise DomainError("sqrt não é diferenciável em zero")
        if u.space.max_degree == 0:
            return Jet(u.space, np.sqrt(u.coef))
        return u._power_series(0.5)
    if u < 0.0:
        raise DomainError("sqrt de argumento negativo")
    return math.sqrt(u)


def _trig(u, first: int):
    K = u.space.max_degree
    v = np.asarray(u.coef[..., 0])
    cycle = [np.sin(v), np.cos(v), -np.sin(v), -np.cos(v)]
    coeffs = np.stack([cycle[(first + k) % 4] for k in range(K + 1)], axis=-1)
    return u.compose(coeffs / _factorials(K))


def sin(u):
    if isinstance(u, Jet):
        return _trig(u, 0)
    return math.sin(u)


def cos(u):
    if isinstance(u, Jet):
        return _trig(u, 1)
    return math.cos(u)


def fabs(u):
    if isinstance(u, Jet):
        v = np.asarray(u.coef[..., 0])
        if np.any(v == 0.0) and u.space.max_degree > 0:
            raise DomainError("abs não é diferenciável em zero")
        return u * np.sign(v)
    return abs(u)


def power(base, exponent):
    if isinstance(base, Jet) or isinstance(exponent, Jet):
        if isinstance(base, Jet):
            return base ** exponent
        return exponent.__rpow__(base)
    if base == 0.0 and exponent < 0:
        raise DomainError("Divisão por zero em potência")
    if base < 0.0 and not float(exponent).is_integer():
        raise DomainError("Potência não inteira de argumento negativo")
    return float(base) ** exponent


def divide(a, b):
    if not isinstance(b, Jet) and b == 0.0:
        raise DomainError("Divisão por zero")
    return a / b


# Álgebra linear de jatos

def jeinsum(subscripts: str, a, b) -> Jet:
    """Contração estilo einsum entre jatos (ou jato e ndarray) nos eixos tensoriais."""
    inputs, output = subscripts.replace(" ", "").split("->")
    sa, sb = inputs.split(",")
    if isinstance(a, Jet) and isinstance(b, Jet):
        a, b = a._pair(b)
        i, j, reducer = a.space.product_table()
        pairs = np.einsum(f"{sa}Z,{sb}Z->{output}Z", a.coef[..., i], b.coef[..., j])
        lead = pairs.shape[:-1]
        out = np.asarray(reducer @ pairs.reshape(-1, pairs.shape[-1]).T).T
        return Jet(a.space, out.reshape(lead + (a.space.size,)))
    if isinstance(a, Jet):
        return Jet(a.space, np.einsum(f"{sa}Z,{sb}->{output}Z", a.coef, np.asarray(b, float)))
    if isinstance(b, Jet):
        return Jet(b.space, np.einsum(f"{sa},{sb}Z->{output}Z", np.asarray(a, float), b.coef))
    raise PreconditionError("jeinsum precisa de pelo menos um Jet")


def jcontract(subscripts: str, a: Jet) -> Jet:
    """Permutação ou traço dos eixos tensoriais de um só jato ('mjkm->jk')."""
    source, target = subscripts.replace(" ", "").split("->")
    return Jet(a.space, np.einsum(f"{source}Z->{target}Z", a.coef))


def jet_inverse(matrix: Jet) -> Jet:
    """Inversa de uma matriz de jatos simétrica positiva definida.

    Série de Neumann em torno do valor: com M = M0 + N (N nilpotente),
    M^-1 = sum_k (-M0^-1 N)^k M0^-1, finita porque N^(K+1) = 0.
    """
    m0 = np.asarray(matrix.coef[..., 0])
    try:
        factor = linalg.cho_factor(m0)
    except linalg.LinAlgError as exc:
        raise NotPositiveDefiniteError(f"Matriz não positiva definida: {exc}") from exc
    inv0 = linalg.cho_solve(factor, np.eye(m0.shape[0]))
    nil = Jet(matrix.space, matrix.nilpotent())
    step = -jeinsum("ij,jk->ik", inv0, nil)
    term = Jet.constant(matrix.space, inv0)
    total = term
    for _ in range(matrix.space.max_degree):
        term = jeinsum("ij,jk->ik", step, term)
        total = total + term
    return total


def as_jet(value, space: JetSpace) -> Jet:
    if isinstance(value, Jet):
        return value
    return Jet.constant(space, value)


def stack_values(values, space: JetSpace, axis: int = 0) -> Jet:
    """Empilha floats e jatos misturados (campos constantes voltam como float).

    Listas aninhadas viram eixos tensoriais: [[a, b], [c, d]] -> shape (2, 2).
    """
    items = [
        stack_values(v, space) if isinstance(v, (list, tuple)) else as_jet(v, space)
        for v in values
    ]
    return Jet.stack(items, axis=axis)


def point_space(n: int, order_x: int, order_y: int) -> JetSpace:
    if order_x + order_y > settings.MAX_TOTAL_ORDER:
        raise PreconditionError(
            f"Ordem pedida {order_x}+{order_y} acima do máximo {settings.MAX_TOTAL_ORDER}"
        )
    return JetSpace.of(n, n, order_x, order_y)


def seed_variables(x, y, order_x: int, order_y: int):
    """Variáveis de jato X^i, Y^i no ponto (x, y)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    n = len(x)
    space = point_space(n, order_x, order_y)
    xs = [Jet.variable(space, i, x[i]) for i in range(n)]
    ys = [Jet.variable(space, n + i, y[i]) for i in range(n)]
    return space, xs, ys


def eval_jet(f, x, y, order_x: int, order_y: int) -> Jet:
    """Todas as derivadas mistas de f até as ordens pedidas, em (x, y).

    ``f`` é qualquer campo escalar chamável como f(X, Y), com X e Y listas de
    jatos; campos de catálogo e expressões obedecem a esse protocolo.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if len(x) != len(y):
        raise PreconditionError("x e y com dimensões diferentes")
    if getattr(f, "homogeneous", False) and not np.any(y):
        raise DomainError("Direção nula para campo homogêneo", x, y)
    space, xs, ys = seed_variables(x, y, order_x, order_y)
    try:
        result = f(xs, ys)
    except DomainError as exc:
        if exc.x is None:
            raise DomainError(str(exc), x, y) from exc
        raise
    if not isinstance(result, Jet):
        result = Jet.constant(space, result)
    result.point = (tuple(x.tolist()), tuple(y.tolist()))
    return result


def _stencil(order: int):
    """Diferença central de ordem ``order``: deslocamentos (em h) e pesos."""
    return [((order / 2.0 - j), (-1.0) ** j * math.comb(order, j)) for j in range(order + 1)]


def _central(f, base: np.ndarray, n: int, orders, steps: np.ndarray) -> float:
    active = [(v, o) for v, o in enumerate(orders) if o]
    total = 0.0
    for combo in product(*[_stencil(o) for _, o in active]):
        point = base.copy()
        weight = 1.0
        for (v, _), (shift, w) in zip(active, combo):
            point[v] += shift * steps[v]
            weight *= w
        total += weight * float(f(list(point[:n]), list(point[n:])))
    denom = math.prod(steps[v] ** o for v, o in active)
    return total / denom


def fd_oracle(f, x, y, idx, levels: int = None) -> float:
    """Derivada mista por diferenças centrais com ``levels`` níveis de Richardson.

    Passo h = eps^(1/(ordem + 2 + 2*levels)) * (1 + |coordenada|); sem
    Richardson isso é eps^(1/(ordem+2)). Precisão relativa esperada >= 1e-6
    até ordem 3 para f suave.
    """
    levels = settings.FD_RICHARDSON_LEVELS if levels is None else levels
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    n = len(x)
    mi = idx if isinstance(idx, MultiIndex) else MultiIndex(tuple(idx))
    if mi.n != n:
        raise PreconditionError("Multi-índice com dimensão errada")
    order = mi.total
    base = np.concatenate([x, y])
    if order == 0:
        return float(f(list(x), list(y)))
    if order > settings.FD_MAX_ORDER:
        raise PreconditionError(f"fd_oracle suporta ordem total <= {settings.FD_MAX_ORDER}")
    scale = 1.0 + np.abs(base)
    h0 = EPS ** (1.0 / (order + 2 + 2 * levels))
    while True:
        try:
            estimates = [
                _central(f, base, n, mi.orders, h0 * scale / 2.0 ** j)
                for j in range(levels + 1)
            ]
            break
        except DomainError as exc:
            h0 /= 10.0
            if h0 < settings.FD_MIN_STEP:
                raise FiniteDifferenceError(
                    f"Passo de diferenças finitas abaixo de {settings.FD_MIN_STEP}: {exc}", x, y
                ) from exc
            logger.debug("fd_oracle: reduzindo passo para %g perto da borda do domínio", h0)
    table = estimates
    for level in range(1, levels + 1):
        factor = 4.0 ** level - 1.0
        table = [table[i + 1] + (table[i + 1] - table[i]) / factor for i in range(len(table) - 1)]
    return float(table[0])


def euler_residual(f, x, y, degree: float = 1.0) -> float:
    """|y^i df/dy^i - degree*f| relativo a |f|: gancho de homogeneidade."""
    jet = eval_jet(f, x, y, 0, 1)
    n = len(x)
    euler = sum(jet.dy(i).value * y[i] for i in range(n))
    value = jet.value
    return abs(euler - degree * value) / max(abs(value), np.finfo(float).tiny)
