# finslab/schemas.py

from enum import Enum

from pydantic import BaseModel, Field, conint, confloat, field_validator, model_validator

from . import settings


# Veredito de um predicado: passa, falha ou inconclusivo (faixa tol..100*tol)
class Verdict(str, Enum):
    PASS = "pass"
    FAIL = "fail"
    INCONCLUSIVE = "inconclusive"


def verdict_for(residual: float, tolerance: float) -> Verdict:
    if residual < tolerance:
        return Verdict.PASS
    if residual > settings.FAIL_FACTOR * tolerance:
        return Verdict.FAIL
    return Verdict.INCONCLUSIVE


class Witness(BaseModel):
    x: list[float]
    y: list[float] = []


# Relatório de um classificador (um por predicado)
class ClassifierReport(BaseModel):
    predicate: str
    residual: float
    tolerance: float
    verdict: Verdict
    label: str = ""
    witness: Witness | None = None
    scalars: dict[str, float | list[float] | str] = {}
    samples: int = 0
    failures: int = 0
    messages: list[str] = []

    @property
    def passed(self) -> bool:
        return self.verdict == Verdict.PASS


# Grade de amostragem: caixa em x e contagens
class GridSpec(BaseModel):
    box: list[tuple[float, float]] | None = None
    x_points: conint(ge=settings.MIN_GRID_COUNT) = settings.GRID_X_POINTS
    y_directions: conint(ge=settings.MIN_GRID_COUNT) = settings.GRID_Y_DIRECTIONS
    seed: int = settings.GRID_SEED
    points: list[list[float]] | None = None  # pontos explícitos (substituem a caixa)

    @field_validator("box")
    def box_must_be_ordered(cls, v):
        if v is not None:
            for lo, hi in v:
                if not lo < hi:
                    raise ValueError(f"Intervalo da caixa inválido: [{lo}, {hi}]")
        return v


# Métrica: entrada de catálogo, (α, β, φ) inline ou F inline
class MetricSpec(BaseModel):
    catalog: str | None = None
    params: dict[str, float | str] = {}
    a: list[list[str | float]] | None = None
    b: list[str | float] | None = None
    phi: str | None = None
    F: str | None = None
    dim: conint(ge=1) | None = None

    @model_validator(mode="after")
    def exactly_one_source(self):
        sources = [self.catalog is not None, self.a is not None, self.F is not None]
        if sum(sources) != 1:
            raise ValueError("Informe exatamente um de: catalog, a/b/phi ou F")
        if self.a is not None:
            if self.b is None or self.phi is None:
                raise ValueError("Métrica (α, β) inline precisa de a, b e phi")
            n = len(self.a)
            if any(len(row) != n for row in self.a) or len(self.b) != n:
                raise ValueError("Dimensões inconsistentes entre a_ij e b_i")
            if self.dim is not None and self.dim != n:
                raise ValueError(f"dim={self.dim} não confere com a_ij {n}x{n}")
        if self.F is not None and self.dim is None:
            raise ValueError("Métrica F inline precisa de dim")
        return self


# Configuração de execução (arquivo YAML + flags da CLI)
class RunConfig(BaseModel):
    metric: MetricSpec
    grid: GridSpec = Field(default_factory=GridSpec)
    predicates: list[str] = ["berwald", "douglas", "gdw", "scalar_flag", "isotropic_s"]
    tolerances: dict[str, confloat(gt=0)] = {}
    output: str | None = None
    format: str = "yaml"
    jobs: conint(ge=1) = 1

    @field_validator("predicates")
    def predicates_must_be_known(cls, v):
        unknown = [p for p in v if p not in settings.DEFAULT_TOLERANCES]
        if unknown:
            raise ValueError(f"Predicados desconhecidos: {unknown}")
        return v

    @field_validator("format")
    def format_must_be_valid(cls, v):
        if v not in ["yaml", "csv"]:
            raise ValueError('Formato deve ser "yaml" ou "csv"')
        return v


# Tensor rotulado para a saída de `compute`
class TensorReport(BaseModel):
    name: str
    valence: str
    x: list[float]
    y: list[float] = []
    components: dict[str, float]


class PhiTableRow(BaseModel):
    s: float
    phi: float
    Q: float
    residual: float


class CheckResult(BaseModel):
    name: str
    passed: bool
    gated: bool = True
    details: dict[str, float | str | bool] = {}
    reports: list[ClassifierReport] = []


class VerifySummary(BaseModel):
    passed: bool
    checks: list[CheckResult] = Field(default_factory=list)
