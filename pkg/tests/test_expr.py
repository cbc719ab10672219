# tests/test_expr.py

import math
from pathlib import Path

import pytest
import yaml

from finslab.deriv import eval_jet
from finslab.errors import DomainError, ExpressionSyntaxError, PreconditionError, UnknownIdentifierError
from finslab.expr import as_field, eval_expr, parse_expr, to_text

GOLDEN = yaml.safe_load((Path(__file__).parent / "data" / "expressions.yaml").read_text(encoding="utf-8"))


@pytest.mark.parametrize("case", GOLDEN, ids=[c["text"] for c in GOLDEN])
def test_golden_expressions(case):
    params = case.get("params", {})
    e = parse_expr(case["text"], case["dim"], tuple(params))
    assert eval_expr(e, case.get("bindings", {}), params) == pytest.approx(case["value"], rel=1e-14, abs=1e-14)


@pytest.mark.parametrize("case", GOLDEN, ids=[c["text"] for c in GOLDEN])
def test_printing_reparses_to_same_tree(case):
    params = tuple(case.get("params", {}))
    e = parse_expr(case["text"], case["dim"], params)
    assert parse_expr(to_text(e), case["dim"], params) == e


@pytest.mark.parametrize(
    "text, position",
    [("x1 + * y1", 5), ("(x1 + 1", 7), ("x1 $ 2", 3)],
)
def test_syntax_errors_report_position(text, position):
    with pytest.raises(ExpressionSyntaxError) as info:
        parse_expr(text, 1)
    assert info.value.position == position


def test_empty_expression():
    with pytest.raises(ExpressionSyntaxError):
        parse_expr("   ", 1)


@pytest.mark.parametrize("text", ["z1 + 1", "x3", "y0", "foo(x1)", "k*x1", "sin + 1"])
def test_unknown_identifiers(text):
    with pytest.raises(UnknownIdentifierError):
        parse_expr(text, 2)


def test_missing_parameter_value():
    e = parse_expr("k*x1", 1, ("k",))
    with pytest.raises(PreconditionError):
        e.field({})


@pytest.mark.parametrize("text, bindings", [("log(x1)", {"x1": -1.0}), ("1/x1", {"x1": 0.0}),
                                            ("sqrt(x1)", {"x1": -2.0}), ("x1^0.5", {"x1": -1.0})])
def test_domain_errors(text, bindings):
    with pytest.raises(DomainError):
        eval_expr(parse_expr(text, 1), bindings)


def test_unbound_variable():
    with pytest.raises(PreconditionError):
        eval_expr(parse_expr("x1 + y1", 1), {"x1": 1.0})


def test_variables_and_y_dependence():
    e = parse_expr("x1*y2 + x2", 2)
    assert {f"{v.group}{v.index + 1}" for v in e.variables()} == {"x1", "y2", "x2"}
    assert e.depends_on_y()
    assert not parse_expr("exp(x1)", 1).depends_on_y()


def test_same_tree_evaluates_on_jets():
    f = as_field("sin(x1)*y1^2", 1)
    jet = eval_jet(f, [0.4], [2.0], 1, 2)
    assert jet.value == pytest.approx(math.sin(0.4) * 4.0)
    assert jet.partial((1, 1)) == pytest.approx(math.cos(0.4) * 4.0)
    assert jet.partial((0, 2)) == pytest.approx(2.0 * math.sin(0.4))


def test_as_field_accepts_numbers():
    f = as_field(2.5, 3)
    assert f([0.0, 0.0, 0.0]) == 2.5
