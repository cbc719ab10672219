# finslab/settings.py

import logging
from pathlib import Path

import yaml

from .errors import ConfigError

logger = logging.getLogger(__name__)

# Ordem máxima dos jatos de campos escalares (F² até x<=2, y<=7 para o spray
# genérico); no nível do spray isso corresponde a ordem 6.
MAX_TOTAL_ORDER = 9
SPRAY_MAX_ORDER = 6

# Oráculo de diferenças finitas
FD_MAX_ORDER = 4
FD_RICHARDSON_LEVELS = 2
FD_MIN_STEP = 1e-9

# Tolerâncias padrão por predicado (residuais adimensionais)
DEFAULT_TOLERANCES = {
    "berwald": 1e-6,
    "douglas": 1e-6,
    "gdw": 1e-5,
    "scalar_flag": 1e-6,
    "isotropic_s": 1e-4,
    "lemma_cs0": 1e-6,
    "isotropic_e": 1e-4,
    "landsberg": 1e-6,
}
# residual > FAIL_FACTOR * tol => falha; entre tol e isso => inconclusivo
FAIL_FACTOR = 100.0
# fração máxima de amostras com erro antes de o relatório falhar
MAX_ERROR_FRACTION = 0.01

# Grade padrão
GRID_X_POINTS = 16
GRID_Y_DIRECTIONS = 32
MIN_GRID_COUNT = 8
GRID_SEED = 0
# |s| <= REGULAR_FRACTION * b0 nas amostras de (α,β)-métricas
REGULAR_FRACTION = 0.9

# Quadratura na esfera de direções
CIRCLE_NODES = 512
SPHERE_NODES = (64, 128)
SIGMA_TOL = 1e-10
SIGMA_MAX_REFINE = 3
# passo da derivada em x de ln σ_F: h = LOG_SIGMA_STEP * (1 + |x|)
LOG_SIGMA_STEP = 1e-4

# φ-famílias
ODE_RTOL = 1e-10
ODE_ATOL = 1e-10
ODE_DOMAIN_FRACTION = 0.95
ODE_METHOD = "DOP853"
# domínio truncado em ODE_TRUNCATION * |s| do último passo aceito
ODE_TRUNCATION = 0.99
# resíduo da EDO: Q'' por diferenças centrais de Q' da saída densa
ODE_RESIDUAL_STEP = 1e-4
ODE_RESIDUAL_TOL = 1e-6
# valores padrão de ode-phi e de twodim_constant_s
ODE_DEFAULT_K = 0.1
ODE_DEFAULT_N = 2
ODE_DEFAULT_B = 1.0
ODE_TABLE_POINTS = 21
QUAD_TOL = 1e-12
RANDERS_FIT_THRESHOLD = 1e-8
RANDERS_FIT_POINTS = 41
RANDERS_FIT_FRACTION = 0.9

# Pacotes de curvatura guardados por (métrica, x, y, método)
PACK_CACHE_SIZE = 256
# pré-condição r_ij = 0, s_j = 0 da forma reduzida de B
REDUCED_B_TOL = 1e-8

# Auto-validação do catálogo
CATALOG_CHECK_TOL = 1e-8
CATALOG_CHECK_POINTS = 50

# Saída
FLOAT_FORMAT = ".17g"


def load_yaml_config(path) -> dict:
    """Lê um arquivo de configuração YAML e devolve o dicionário cru."""
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"Arquivo de configuração '{path}' não encontrado.")
    try:
        with path.open("r", encoding="utf-8") as handle:
            data = yaml.safe_load(handle) or {}
    except yaml.YAMLError as exc:
        raise ConfigError(f"YAML inválido em '{path}': {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"Configuração em '{path}' deve ser um mapeamento.")
    logger.debug("Configuração carregada de %s", path)
    return data


def tolerance_for(predicate: str, overrides: dict | None = None) -> float:
    overrides = overrides or {}
    if predicate in overrides:
        return float(overrides[predicate])
    if predicate not in DEFAULT_TOLERANCES:
        raise ConfigError(f"Predicado desconhecido: '{predicate}'")
    return DEFAULT_TOLERANCES[predicate]
