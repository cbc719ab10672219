# finslab/phi.py

"""
φ-famílias das métricas F = α φ(β/α) e a maquinaria Q, Θ, Ψ, Δ, Φ.

Toda família expõe ``taylor(s0, degree)`` (coeficientes φ^(k)(s0)/k!), de
modo que a composição com jatos alcança qualquer ordem que o motor pedir.

Recuperação de φ a partir de Q: de Q = φ'/(φ − sφ') vem
φ'(1 + sQ) = Qφ, logo (log φ)' = Q/(1 + sQ). É essa identidade que dá a
família exponencial fechada (uni) e a terceira componente do estado
(Q, Q', log φ) da EDO de curvatura S isotrópica.
"""

import logging
import math
from abc import ABC, abstractmethod
from dataclasses import dataclass

import numpy as np
from scipy import integrate, optimize

from . import settings
from .deriv import Jet, JetSpace, exp, sqrt
from .errors import DomainError, FiniteDifferenceError, PreconditionError, SingularityError
from .schemas import ClassifierReport, Verdict

logger = logging.getLogger(__name__)


def series_variable(s0: float, degree: int) -> Jet:
    """Variável univariada t em torno de s0 (jato de grau ``degree``)."""
    return Jet.variable(JetSpace.of(0, 1, 0, degree), 0, float(s0))


def _integrate_series(coef: np.ndarray, constant: float) -> np.ndarray:
    out = np.empty_like(coef)
    out[0] = constant
    out[1:] = coef[:-1] / np.arange(1, len(coef))
    return out


def _factorials(k: int) -> np.ndarray:
    return np.array([math.factorial(i) for i in range(k + 1)], dtype=float)


class PhiFamily(ABC):
    """φ positiva em (−b0, b0)."""

    kind = "abstract"

    def __init__(self, b0: float):
        if not b0 > 0:
            raise PreconditionError("Raio de regularidade b0 deve ser positivo")
        self.b0 = float(b0)

    def check_domain(self, s: float) -> None:
        if not abs(s) < self.b0:
            raise DomainError(f"φ({self.kind}) fora do domínio: |s|={abs(s):.6g} >= b0={self.b0:.6g}")

    @abstractmethod
    def taylor(self, s0: float, degree: int) -> np.ndarray:
        """Coeficientes de Taylor φ^(k)(s0)/k!, k = 0..degree."""

    @abstractmethod
    def spec(self) -> str:
        """Texto no formato de configuração ("square", "uni:c,k,q,b", ...)."""

    def __call__(self, s: float) -> float:
        return float(self.taylor(s, 0)[0])

    def derivatives(self, s: float, order: int = 4) -> np.ndarray:
        return self.taylor(s, order) * _factorials(order)

    def compose(self, s_jet: Jet) -> Jet:
        """φ(s) para um jato escalar s."""
        coeffs = self.taylor(float(s_jet.value), s_jet.space.max_degree)
        return s_jet.compose(coeffs)

    def __repr__(self):
        return f"PhiFamily({self.spec()!r}, b0={self.b0})"


class ClosedFormPhi(PhiFamily):
    """Famílias com fórmula fechada; Taylor via aritmética de jatos."""

    @abstractmethod
    def formula(self, s):
        """φ(s) para float ou jato."""

    def taylor(self, s0, degree):
        self.check_domain(s0)
        if degree == 0:
            return np.array([float(self.formula(float(s0)))])
        return self.formula(series_variable(s0, degree)).coef


class RandersTypePhi(ClosedFormPhi):
    """φ = c1 √(1 + c2 s²) + c3 s."""

    kind = "randers"

    def __init__(self, c1: float, c2: float, c3: float, b0: float | None = None):
        if not c1 > 0:
            raise PreconditionError("randers exige c1 > 0")
        self.c1, self.c2, self.c3 = float(c1), float(c2), float(c3)
        if b0 is None:
            b0 = 1.0 / math.sqrt(-c2) if c2 < 0 else 1.0
        super().__init__(b0)

    def formula(self, s):
        return self.c1 * sqrt(1.0 + self.c2 * s * s) + self.c3 * s

    def spec(self):
        return f"randers:{self.c1!r},{self.c2!r},{self.c3!r}"


class SquarePhi(ClosedFormPhi):
    """Métrica quadrada: φ = (1 + s)²."""

    kind = "square"

    def __init__(self, b0: float = 1.0):
        super().__init__(b0)

    def formula(self, s):
        return (1.0 + s) * (1.0 + s)

    def spec(self):
        return "square"


class MatsumotoPhi(ClosedFormPhi):
    """Métrica de Matsumoto: φ = 1/(1 − s)."""

    kind = "matsumoto"

    def __init__(self, b0: float = 1.0):
        super().__init__(b0)

    def formula(self, s):
        return 1.0 / (1.0 - s)

    def spec(self):
        return "matsumoto"


class UniPhi(PhiFamily):
    """φ = c exp(∫₀ˢ (kt + q√(b²−t²)) / (1 + kt² + qt√(b²−t²)) dt).

    Quase regular: singular nas direções extremais s = ±b. q = 0 é o caso
    degenerado φ = c√(1 + ks²).
    """

    kind = "uni"

    def __init__(self, c: float, k: float, q: float, b: float):
        if not c > 0:
            raise PreconditionError("uni exige c > 0")
        if q < 0:
            raise PreconditionError("uni exige q >= 0")
        super().__init__(b)
        self.c, self.k, self.q, self.b = float(c), float(k), float(q), float(b)
        grid = np.linspace(-self.b, self.b, 2001)
        denominator = self._denominator(grid)
        if np.min(denominator) <= 0.0:
            where = grid[int(np.argmin(denominator))]
            raise DomainError(f"Denominador do integrando de uni se anula perto de s={where:.6g}")

    def _root(self, t):
        return sqrt(self.b * self.b - t * t)

    def _denominator(self, t: np.ndarray) -> np.ndarray:
        return 1.0 + self.k * t * t + self.q * t * np.sqrt(np.maximum(self.b ** 2 - t * t, 0.0))

    def q_exact(self, s):
        """Q(s) = ks + q√(b² − s²)."""
        return self.k * s + self.q * self._root(s)

    def integrand(self, t):
        root = self._root(t)
        return (self.k * t + self.q * root) / (1.0 + self.k * t * t + self.q * t * root)

    def log_phi(self, s: float) -> float:
        if s == 0.0:
            return math.log(self.c)
        value, error = integrate.quad(
            self.integrand, 0.0, s, epsabs=settings.QUAD_TOL, epsrel=settings.QUAD_TOL, limit=200
        )
        logger.debug("uni: ∫ até s=%g, erro estimado %g", s, error)
        return math.log(self.c) + value

    def taylor(self, s0, degree):
        self.check_domain(s0)
        logphi = self.log_phi(float(s0))
        if degree == 0:
            return np.array([math.exp(logphi)])
        w = self.integrand(series_variable(s0, degree))
        log_series = Jet(w.space, _integrate_series(w.coef, logphi))
        return exp(log_series).coef

    def spec(self):
        return f"uni:{self.c!r},{self.k!r},{self.q!r},{self.b!r}"


class OdeNumericPhi(PhiFamily):
    """Solução numérica da EDO de curvatura S isotrópica, com φ(0) = 1.

    Estado (Q, Q', log φ) integrado de 0 até ±0.95 b; derivadas de ordem
    alta vêm do método de séries de Taylor aplicado à própria EDO no estado
    interpolado.
    """

    kind = "odeP"

    def __init__(self, k: float, n: int, b: float, Q0: float = 0.0, Q0p: float = 0.0,
                 forward=None, backward=None, reach: float | None = None):
        if not b > 0:
            raise PreconditionError("odeP exige b > 0")
        self.k, self.n, self.b = float(k), int(n), float(b)
        self.Q0, self.Q0p = float(Q0), float(Q0p)
        self.forward = forward
        self.backward = backward
        super().__init__(reach if reach is not None else settings.ODE_DOMAIN_FRACTION * b)

    def second_derivative(self, s, Q, Qp, phi):
        """Q'' isolado de Φ = −2(n+1)k φΔ²/(b² − s²); funciona em floats e jatos."""
        w = self.b * self.b - s * s
        one = 1.0 + s * Q
        delta = one + w * Qp
        source = 2.0 * (self.n + 1) * self.k * phi * delta * delta / w
        return (source - (Q - s * Qp) * (self.n * delta + one)) / (w * one)

    def rhs(self, s, state):
        Q, Qp, logphi = state
        return [Qp, self.second_derivative(s, Q, Qp, math.exp(logphi)), Q / (1.0 + s * Q)]

    def state(self, s: float) -> np.ndarray:
        self.check_domain(s)
        branch = self.forward if s >= 0.0 else self.backward
        return np.asarray(branch.sol(s), dtype=float)

    def taylor(self, s0, degree):
        Q0, Q1, L0 = self.state(float(s0))
        if degree == 0:
            return np.array([math.exp(L0)])
        top = degree + 2
        space = JetSpace.of(0, 1, 0, top)
        t = series_variable(s0, top)
        Q = Jet(space, np.concatenate([[Q0, Q1], np.zeros(space.size - 2)]))
        L = Jet.constant(space, L0)
        # cada passada fixa pelo menos mais um coeficiente de Q e de log φ
        for _ in range(top + 1):
            Qp = Jet(space, np.concatenate([Q.dy(0).coef, [0.0]]))
            Qpp = self.second_derivative(t, Q, Qp, exp(L))
            Qp = Jet(space, _integrate_series(Qpp.coef, Q1))
            Q = Jet(space, _integrate_series(Qp.coef, Q0))
            L = Jet(space, _integrate_series((Q / (t * Q + 1.0)).coef, L0))
        return exp(L).coef[: degree + 1]

    def residual(self, s: float) -> float:
        """Resíduo relativo de Φ + 2(n+1)k φΔ²/(b² − s²) na saída densa.

        Q'' sai de diferenças centrais de Q' interpolada, e não da própria EDO,
        então o resíduo mede o erro de integração.
        """
        self.check_domain(s)
        h = min(settings.ODE_RESIDUAL_STEP, (self.b0 - abs(s)) / 3.0)
        if h < settings.FD_MIN_STEP:
            raise FiniteDifferenceError(f"odeP: s={s:.6g} perto demais da borda b0={self.b0:.6g}")
        Q, Qp, logphi = self.state(s)
        q1 = [self.state(s + j * h)[1] for j in (-2, -1, 1, 2)]
        Qpp = (q1[0] - 8.0 * q1[1] + 8.0 * q1[2] - q1[3]) / (12.0 * h)
        w = self.b * self.b - s * s
        one = 1.0 + s * Q
        delta = one + w * Qp
        capital = -(Q - s * Qp) * (self.n * delta + one) - w * one * Qpp
        target = -2.0 * (self.n + 1) * self.k * math.exp(logphi) * delta * delta / w
        return abs(capital - target) / max(1.0, abs(target))

    def spec(self):
        return f"odeP:{self.k!r},{self.n},{self.b!r},{self.Q0!r},{self.Q0p!r}"


def solve_isotropic_ode(k: float, n: int, b: float, Q0: float = 0.0, Q0p: float = 0.0) -> OdeNumericPhi:
    """Integra a EDO de Φ nas duas direções a partir de s = 0."""
    if not b > 0:
        raise PreconditionError("b deve ser positivo")
    family = OdeNumericPhi(k, n, b, Q0, Q0p)
    limit = settings.ODE_DOMAIN_FRACTION * b

    def phi_recovery(s, state):
        return 1.0 + s * state[0]

    phi_recovery.terminal = True

    reach = limit
    branches = []
    for end in (limit, -limit):
        sol = integrate.solve_ivp(
            family.rhs,
            (0.0, end),
            [Q0, Q0p, 0.0],
            method=settings.ODE_METHOD,
            dense_output=True,
            events=phi_recovery,
            rtol=settings.ODE_RTOL,
            atol=settings.ODE_ATOL,
        )
        stop = abs(float(sol.t[-1]))
        if sol.status == -1 and (sol.sol is None or stop == 0.0):
            raise SingularityError("odeP", f"Integração falhou em s=0: {sol.message}")
        if sol.status != 0:
            # 1: 1 + sQ -> 0; -1: o passo colapsou perto da explosão de Q
            reason = "1 + sQ -> 0" if sol.status == 1 else f"passo colapsou ({sol.message})"
            cut = settings.ODE_TRUNCATION * stop
            logger.warning("odeP: %s em s=%.6g; domínio truncado em |s| < %.6g", reason, sol.t[-1], cut)
            reach = min(reach, cut)
        branches.append(sol)
    family.forward, family.backward = branches
    family.b0 = reach
    logger.info("odeP(k=%g, n=%d, b=%g): domínio |s| < %.6g", k, n, b, reach)
    return family


def phi_uni(c: float, k: float, q: float, b: float) -> UniPhi:
    return UniPhi(c, k, q, b)


def phi_jet(phi: PhiFamily, s: float, order: int = 4) -> tuple:
    """(φ, φ', φ'', φ''', φ'''') em s, até ``order``."""
    if not 0 <= order <= 4:
        raise PreconditionError("phi_jet suporta ordem 0..4")
    return tuple(float(v) for v in phi.derivatives(s, order))


@dataclass(frozen=True)
class QTPD:
    """Q, Q', Q'', Θ, Ψ, Δ (e Φ quando n é dado) em (s, b)."""

    s: float
    b: float
    Q: float
    Qp: float
    Qpp: float
    Theta: float
    Psi: float
    Delta: float
    Phi: float | None = None

    def as_dict(self) -> dict:
        return {k: v for k, v in self.__dict__.items() if v is not None}


def q_series(phi: PhiFamily, s: float, degree: int) -> np.ndarray:
    """Coeficientes de Taylor de Q = φ'/(φ − sφ') em s (grau ``degree``)."""
    coeffs = phi.taylor(s, degree + 1)
    space = JetSpace.of(0, 1, 0, degree + 1)
    t = Jet.variable(space, 0, float(s))
    P = t.compose(coeffs)
    P1 = P.dy(0)
    denominator = P - t * P1
    if abs(denominator.value) < np.finfo(float).eps:
        raise SingularityError("Q", f"φ − sφ' = 0 em s={s:.6g}")
    return (P1 / denominator).coef


def q_theta_psi(phi: PhiFamily, s: float, b: float, n: int | None = None) -> QTPD:
    """Q, Θ, Ψ, Δ (e Φ) das definições com φ e suas derivadas."""
    f0, f1, f2 = phi.derivatives(s, 2)
    q_coef = q_series(phi, s, 2)
    Q, Qp, Qpp = q_coef * _factorials(2)
    w = b * b - s * s
    regular = (f0 - s * f1) + w * f2
    if regular == 0.0:
        raise SingularityError("Theta/Psi", f"(φ − sφ') + (b² − s²)φ'' = 0 em s={s:.6g}")
    if f0 == 0.0:
        raise SingularityError("Theta", f"φ = 0 em s={s:.6g}")
    theta = (f0 * f1 - s * (f0 * f2 + f1 * f1)) / (2.0 * f0 * regular)
    psi = 0.5 * f2 / regular
    delta = 1.0 + s * Q + w * Qp
    capital = None
    if n is not None:
        capital = -(Q - s * Qp) * (n * delta + 1.0 + s * Q) - w * (1.0 + s * Q) * Qpp
    return QTPD(float(s), float(b), float(Q), float(Qp), float(Qpp), float(theta),
                float(psi), float(delta), None if capital is None else float(capital))


def phi_capital(phi: PhiFamily, s: float, b: float, n: int) -> float:
    """Φ = −(Q − sQ')[nΔ + 1 + sQ] − (b² − s²)(1 + sQ)Q''."""
    return q_theta_psi(phi, s, b, n).Phi


def regularity_check(phi: PhiFamily, b: float, grid=None) -> ClassifierReport:
    """φ > 0 e φ − sφ' + (b² − s²)φ'' > 0 para |s| <= b.

    regular: vale em toda a grade; almost-regular: falha só em |s| = b;
    irregular: falha no interior.
    """
    if b > phi.b0 + 1e-12:
        raise PreconditionError(f"b={b} acima do raio b0={phi.b0} da família")
    grid = np.linspace(-b, b, 201) if grid is None else np.asarray(grid, dtype=float)
    margin = math.inf
    witness = None
    interior_failures = []
    boundary_failures = []
    for s in grid:
        on_boundary = abs(abs(s) - b) < 1e-12
        try:
            f0, f1, f2 = phi.derivatives(float(s), 2)
            value = min(f0, f0 - s * f1 + (b * b - s * s) * f2)
        except (DomainError, SingularityError):
            value = -math.inf
        if value < margin:
            margin, witness = value, float(s)
        if not value > 0.0:
            (boundary_failures if on_boundary else interior_failures).append(float(s))
    if interior_failures:
        label, verdict = "irregular", Verdict.FAIL
    elif boundary_failures:
        label, verdict = "almost-regular", Verdict.PASS
    else:
        label, verdict = "regular", Verdict.PASS
    failures = interior_failures + boundary_failures
    return ClassifierReport(
        predicate="regularity",
        residual=float(max(0.0, -margin)) if math.isfinite(margin) else math.inf,
        tolerance=0.0,
        verdict=verdict,
        label=label,
        scalars={"margin": float(margin), "s": witness if witness is not None else math.nan,
                 "b": float(b), "phi": phi.spec()},
        samples=len(grid),
        failures=len(failures),
    )


@dataclass(frozen=True)
class RandersFit:
    c1: float
    c2: float
    c3: float
    residual: float

    @property
    def randers_type(self) -> bool:
        return self.residual < settings.RANDERS_FIT_THRESHOLD


def randers_type_fit(phi: PhiFamily, b0: float | None = None) -> RandersFit:
    """Ajuste φ(s) ≈ c1√(1 + c2 s²) + c3 s em 41 pontos de |s| <= 0.9 b0."""
    b0 = phi.b0 if b0 is None else b0
    grid = np.linspace(-settings.RANDERS_FIT_FRACTION * b0, settings.RANDERS_FIT_FRACTION * b0,
                       settings.RANDERS_FIT_POINTS)
    target = np.array([phi(float(s)) for s in grid])
    f0, f1, f2 = phi.derivatives(0.0, 2)
    x0 = np.array([f0, f2 / f0, f1])

    def model(c):
        return c[0] * np.sqrt(np.maximum(1.0 + c[1] * grid * grid, 0.0)) + c[2] * grid

    try:
        result = optimize.least_squares(
            lambda c: model(c) - target, x0, method="lm", xtol=1e-15, ftol=1e-15, gtol=1e-15
        )
    except (ValueError, FloatingPointError) as exc:
        logger.warning("Ajuste de tipo Randers divergiu: %s", exc)
        return RandersFit(math.nan, math.nan, math.nan, math.inf)
    c = result.x
    residual = float(np.max(np.abs(model(c) - target)))
    if not np.isfinite(residual) or np.any(1.0 + c[1] * grid * grid < 0.0):
        residual = math.inf
    return RandersFit(float(c[0]), float(c[1]), float(c[2]), residual)


def parse_phi_spec(text: str) -> PhiFamily:
    """'randers:c1,c2,c3' | 'square' | 'matsumoto' | 'uni:c,k,q,b' | 'odeP:k,n,b,Q0,Q0p'.

    Aceita 'b0=valor' como item extra para sobrescrever o raio.
    """
    kind, _, rest = text.strip().partition(":")
    args, options = [], {}
    for item in filter(None, (p.strip() for p in rest.split(","))):
        if "=" in item:
            key, _, value = item.partition("=")
            options[key.strip()] = float(value)
        else:
            args.append(float(item))
    if set(options) - {"b0"}:
        raise PreconditionError(f"Opções desconhecidas em '{text}': {sorted(set(options) - {'b0'})}")
    b0 = options.get("b0")
    try:
        if kind == "randers":
            return RandersTypePhi(*args, b0=b0)
        if kind == "square" and not args:
            return SquarePhi(b0 or 1.0)
        if kind == "matsumoto" and not args:
            return MatsumotoPhi(b0 or 1.0)
        if kind == "uni":
            return UniPhi(*args)
        if kind == "odeP":
            if not 3 <= len(args) <= 5:
                raise TypeError(kind)
            k, n, b, *initial = args
            return solve_isotropic_ode(k, int(n), b, *initial)
    except TypeError as exc:
        raise PreconditionError(f"Número errado de parâmetros em '{text}'") from exc
    raise PreconditionError(f"Família φ desconhecida: '{text}'")
