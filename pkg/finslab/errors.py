# finslab/errors.py

# Hierarquia de exceções do laboratório. Tudo herda de ValueError, que é o
# erro que a camada de serviço sempre levantou; a CLI traduz na borda.


class FinslabError(ValueError):
    """Erro base do finslab."""


class EvaluationError(FinslabError):
    """Falha ao avaliar um campo num ponto (x, y)."""

    def __init__(self, message: str, x=None, y=None):
        self.x = None if x is None else tuple(float(v) for v in x)
        self.y = None if y is None else tuple(float(v) for v in y)
        if self.x is not None or self.y is not None:
            message = f"{message} (x={self.x}, y={self.y})"
        super().__init__(message)


class DomainError(EvaluationError):
    """Avaliação fora do domínio (log/sqrt de negativo, direção extremal...)."""


class SingularityError(EvaluationError):
    """Denominador nulo em Q, Θ, Ψ ou na recuperação de φ."""

    def __init__(self, quantity: str, message: str, x=None, y=None):
        self.quantity = quantity
        super().__init__(f"{quantity}: {message}", x, y)


class NotPositiveDefiniteError(EvaluationError):
    """a_ij não é positiva definida no ponto."""


class StrongConvexityError(EvaluationError):
    """g_ij singular ou indefinida: F não é fortemente convexa ali."""


class QuadratureError(EvaluationError):
    """Quadratura não atingiu a tolerância pedida."""


class FiniteDifferenceError(EvaluationError):
    """O estêncil de diferenças finitas saiu do domínio."""


class PreconditionError(FinslabError):
    """Pré-condição de uma operação não satisfeita."""


class ExpressionSyntaxError(FinslabError):
    """Erro de sintaxe numa expressão; position é 0-based."""

    def __init__(self, message: str, position: int, text: str = ""):
        self.position = position
        self.text = text
        super().__init__(f"{message} na posição {position}")


class UnknownIdentifierError(FinslabError):
    """Identificador desconhecido ou índice de variável fora do intervalo."""


class CatalogError(FinslabError):
    """Entrada de catálogo desconhecida ou que falhou na auto-validação."""


class ConfigError(FinslabError):
    """Configuração de execução inválida."""
