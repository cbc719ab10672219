# finslab/expr.py

"""
Linguagem de expressões usada para a_ij(x), b_i(x) e F(x, y) genérica.

Gramática (precedência crescente): + - , * / , menos unário , ^ (associativo
à direita). Variáveis x1..xn e y1..yn, funções exp log sin cos sqrt abs,
constante pi e parâmetros nomeados. Sem condicionais, para que a mesma árvore
avalie em float ou em Jet.
"""

import logging
import math
import operator
import re
from dataclasses import dataclass

from lark import Lark, Transformer
from lark.exceptions import (
    UnexpectedCharacters,
    UnexpectedEOF,
    UnexpectedInput,
    UnexpectedToken,
    VisitError,
)

from . import deriv
from .errors import DomainError, ExpressionSyntaxError, PreconditionError, UnknownIdentifierError

logger = logging.getLogger(__name__)

expr_grammar = r"""
    ?start: sum

    ?sum: product
        | sum "+" product   -> add
        | sum "-" product   -> sub

    ?product: unary
        | product "*" unary -> mul
        | product "/" unary -> div

    ?unary: power
        | "-" unary         -> neg

    ?power: atom
        | atom "^" unary    -> pow

    ?atom: NUMBER           -> number
         | NAME "(" sum ")" -> call
         | NAME             -> name
         | "(" sum ")"

    NUMBER: /(\d+\.?\d*|\.\d+)([eE][+-]?\d+)?/
    NAME: /[A-Za-z_][A-Za-z_0-9]*/

    %import common.WS
    %ignore WS
"""

_PARSER = Lark(expr_grammar, start="start", parser="lalr")

FUNCTIONS = {
    "exp": deriv.exp,
    "log": deriv.log,
    "sin": deriv.sin,
    "cos": deriv.cos,
    "sqrt": deriv.sqrt,
    "abs": deriv.fabs,
}
CONSTANTS = {"pi": math.pi}

_VARIABLE = re.compile(r"^([xy])(\d+)$")


# Nós da árvore

@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    group: str  # "x" ou "y"
    index: int  # 0-based


@dataclass(frozen=True)
class Param:
    name: str


@dataclass(frozen=True)
class Unary:
    operand: object


@dataclass(frozen=True)
class Binary:
    op: str
    left: object
    right: object


@dataclass(frozen=True)
class Call:
    func: str
    arg: object


Node = Num | Var | Param | Unary | Binary | Call

_BINARY = {
    "+": operator.add,
    "-": operator.sub,
    "*": operator.mul,
    "/": deriv.divide,
    "^": deriv.power,
}


class _Builder(Transformer):
    def __init__(self, dim: int, parameters):
        super().__init__()
        self.dim = dim
        self.parameters = set(parameters)

    def number(self, items):
        return Num(float(items[0]))

    def name(self, items):
        text = str(items[0])
        match = _VARIABLE.match(text)
        if match:
            index = int(match.group(2))
            if not 1 <= index <= self.dim:
                raise UnknownIdentifierError(
                    f"Variável '{text}' fora do intervalo 1..{self.dim}"
                )
            return Var(match.group(1), index - 1)
        if text in CONSTANTS:
            return Num(CONSTANTS[text])
        if text in self.parameters:
            return Param(text)
        if text in FUNCTIONS:
            raise UnknownIdentifierError(f"Função '{text}' usada sem argumento")
        raise UnknownIdentifierError(f"Identificador desconhecido: '{text}'")

    def call(self, items):
        func = str(items[0])
        if func not in FUNCTIONS:
            raise UnknownIdentifierError(f"Função desconhecida: '{func}'")
        return Call(func, items[1])

    def neg(self, items):
        return Unary(items[0])

    def add(self, items):
        return Binary("+", *items)

    def sub(self, items):
        return Binary("-", *items)

    def mul(self, items):
        return Binary("*", *items)

    def div(self, items):
        return Binary("/", *items)

    def pow(self, items):
        return Binary("^", *items)


@dataclass(frozen=True)
class Expression:
    """Árvore imutável de uma expressão sobre n variáveis x e n variáveis y."""

    root: Node
    dim: int

    def variables(self) -> frozenset:
        return frozenset(n for n in _walk(self.root) if isinstance(n, Var))

    def parameters(self) -> frozenset:
        return frozenset(n.name for n in _walk(self.root) if isinstance(n, Param))

    def depends_on_y(self) -> bool:
        return any(v.group == "y" for v in self.variables())

    def field(self, params: dict | None = None) -> "ExpressionField":
        return ExpressionField(self, params or {})

    def __str__(self):
        return to_text(self)


def _walk(node):
    yield node
    match node:
        case Unary(operand=operand):
            yield from _walk(operand)
        case Binary(left=left, right=right):
            yield from _walk(left)
            yield from _walk(right)
        case Call(arg=arg):
            yield from _walk(arg)


def parse_expr(text: str, dim: int, parameters=()) -> Expression:
    """Analisa ``text`` numa Expression de dimensão ``dim``.

    Nomes em ``parameters`` viram parâmetros; qualquer outro nome que não
    seja variável, função ou constante é rejeitado.
    """
    if dim < 1:
        raise PreconditionError("Dimensão deve ser >= 1")
    if not text or not text.strip():
        raise ExpressionSyntaxError("Expressão vazia", 0, text or "")
    try:
        tree = _PARSER.parse(text)
    except UnexpectedEOF as exc:
        raise ExpressionSyntaxError("Fim inesperado da expressão", len(text), text) from exc
    except UnexpectedToken as exc:
        if exc.token.type == "$END":
            position = len(text)
            found = "fim da expressão"
        else:
            position = exc.token.start_pos
            found = f"'{exc.token}'"
        raise ExpressionSyntaxError(f"Token inesperado {found}", position, text) from exc
    except UnexpectedCharacters as exc:
        raise ExpressionSyntaxError(
            f"Caractere inesperado '{text[exc.pos_in_stream]}'", exc.pos_in_stream, text
        ) from exc
    except UnexpectedInput as exc:
        position = exc.pos_in_stream if exc.pos_in_stream is not None else len(text)
        raise ExpressionSyntaxError("Entrada inesperada", position, text) from exc
    try:
        root = _Builder(dim, parameters).transform(tree)
    except VisitError as exc:
        raise exc.orig_exc from None
    if isinstance(root, (Num, Var, Param, Unary, Binary, Call)):
        return Expression(root, dim)
    raise ExpressionSyntaxError("Expressão mal formada", 0, text)


def _text(node) -> str:
    match node:
        case Num(value=value):
            return repr(float(value))
        case Var(group=group, index=index):
            return f"{group}{index + 1}"
        case Param(name=name):
            return name
        case Unary(operand=operand):
            return f"(-{_text(operand)})"
        case Binary(op=op, left=left, right=right):
            return f"({_text(left)} {op} {_text(right)})"
        case Call(func=func, arg=arg):
            return f"{func}({_text(arg)})"
    raise PreconditionError(f"Nó desconhecido: {node!r}")


def to_text(expression) -> str:
    """Impressão totalmente parentizada; reanalisar devolve a mesma árvore."""
    root = expression.root if isinstance(expression, Expression) else expression
    return _text(root)


def _evaluate(node, xs, ys, params):
    match node:
        case Num(value=value):
            return value
        case Var(group="x", index=index):
            return xs[index]
        case Var(index=index):
            return ys[index]
        case Param(name=name):
            return params[name]
        case Unary(operand=operand):
            return -_evaluate(operand, xs, ys, params)
        case Binary(op=op, left=left, right=right):
            a = _evaluate(left, xs, ys, params)
            b = _evaluate(right, xs, ys, params)
            try:
                return _BINARY[op](a, b)
            except DomainError as exc:
                raise DomainError(f"{exc} em '{_text(node)}'") from exc
        case Call(func=func, arg=arg):
            value = _evaluate(arg, xs, ys, params)
            try:
                return FUNCTIONS[func](value)
            except DomainError as exc:
                raise DomainError(f"{exc} em '{_text(node)}'") from exc
    raise PreconditionError(f"Nó desconhecido: {node!r}")


class ExpressionField:
    """Expressão com parâmetros resolvidos, chamável como campo f(X, Y).

    X e Y podem ser listas de floats ou de jatos.
    """

    homogeneous = False

    def __init__(self, expression: Expression, params: dict):
        missing = expression.parameters() - set(params)
        if missing:
            raise PreconditionError(f"Parâmetros sem valor: {sorted(missing)}")
        self.expression = expression
        self.params = {k: float(v) for k, v in params.items()}

    @property
    def dim(self) -> int:
        return self.expression.dim

    def __call__(self, xs, ys=()):
        return _evaluate(self.expression.root, xs, ys, self.params)

    def __repr__(self):
        return f"ExpressionField({to_text(self.expression)!r})"


def eval_expr(e: Expression, bindings: dict, params: dict | None = None) -> float:
    """Avalia em float com variáveis nomeadas ('x1', 'y2', ...)."""
    xs = [None] * e.dim
    ys = [None] * e.dim
    for name, value in bindings.items():
        match = _VARIABLE.match(name)
        if not match or not 1 <= int(match.group(2)) <= e.dim:
            raise UnknownIdentifierError(f"Variável desconhecida na atribuição: '{name}'")
        target = xs if match.group(1) == "x" else ys
        target[int(match.group(2)) - 1] = float(value)
    for var in e.variables():
        source = xs if var.group == "x" else ys
        if source[var.index] is None:
            raise PreconditionError(f"Variável {var.group}{var.index + 1} sem valor")
    return float(e.field(params or {})(xs, ys))


def as_field(spec, dim: int, params: dict | None = None) -> ExpressionField:
    """Aceita texto de expressão ou número e devolve o campo correspondente."""
    params = params or {}
    if isinstance(spec, ExpressionField):
        return spec
    if isinstance(spec, Expression):
        return spec.field(params)
    if isinstance(spec, (int, float)):
        return Expression(Num(float(spec)), dim).field(params)
    return parse_expr(str(spec), dim, parameters=tuple(params)).field(params)
