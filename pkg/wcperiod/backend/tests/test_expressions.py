import math

import numpy as np
import pytest

from services.catalog import example_3_1, example_4_3
from services.errors import ExpressionError
from services.expressions import compile_nonlinearity, parse_expression, tokenize
from services.linalg import NormKind


def value_of(source: str, **env) -> float:
    return parse_expression(source).evaluate(env)


@pytest.mark.parametrize(
    "source, expected",
    [
        ("1+2*3", 7.0),
        ("(1+2)*3", 9.0),
        ("2^3^2", 512.0),
        ("-2^2", -4.0),
        ("2*-3", -6.0),
        ("8/4/2", 1.0),
        ("10-4-3", 3.0),
        ("1.5e1 + .5", 15.5),
    ],
)
def test_precedence_and_associativity(source, expected):
    assert value_of(source) == pytest.approx(expected)


def test_constants_and_functions():
    assert value_of("cos(pi)") == pytest.approx(-1.0)
    assert value_of("e") == pytest.approx(math.e)
    assert value_of("sech(0)") == pytest.approx(1.0)
    assert value_of("sqrt(abs(-16))") == pytest.approx(4.0)


@pytest.mark.parametrize("source", ["2t", "2 t", "(1)(2)", "a(t)", "sin t", "1 +", "(1+2", "1 $ 2", ""])
def test_malformed_expressions(source):
    with pytest.raises(ExpressionError):
        parse_expression(source)


def test_error_position_points_at_offender():
    with pytest.raises(ExpressionError) as info:
        parse_expression("1 + 2 t")
    assert info.value.position == 6


def test_tokens():
    kinds = [token.kind for token in tokenize("a*sin(y1_re)")]
    assert kinds == ["name", "op", "name", "lparen", "name", "rparen"]


def test_division_by_zero():
    with pytest.raises(ExpressionError):
        value_of("1/(t-t)", t=np.array([1.0]))
    with pytest.raises(ExpressionError):
        value_of("t^(-1)", t=np.array([0.0]))


def test_state_indices():
    assert parse_expression("y1*y3_im + t").state_indices() == {1, 3}


@pytest.mark.parametrize(
    "builtin, components",
    [
        (example_3_1, ["a*sin(t)*cos(y1+y2)", "a*cos(2*t)*sin(y1-y2)"]),
        (example_4_3, ["a*sin(t)*(abs(y1+y2)+1)", "a*cos(t)*abs(y1-y2)"]),
    ],
)
def test_expressions_agree_with_catalog(builtin, components):
    reference = builtin(0.7, NormKind.L2)
    compiled = compile_nonlinearity(components, parameters={"a": 0.7})
    rng = np.random.default_rng(9)
    t = rng.uniform(0.0, 2.0 * math.pi, 10_000)
    y = rng.uniform(-3.0, 3.0, (10_000, 2))
    assert np.max(np.abs(compiled(t, y) - reference(t, y))) <= 1e-14


def test_scalar_call_shape():
    g = compile_nonlinearity(["y1 - y2", "t"], parameters={})
    assert g(0.5, np.array([1.0, 2.0])).shape == (2,)
    assert g(0.5, np.array([1.0, 2.0]))[1] == pytest.approx(0.5)


def test_real_and_imaginary_parts():
    g = compile_nonlinearity(["y1_re - y1_im"])
    assert g(0.0, np.array([1.0 + 2.0j]))[0] == pytest.approx(-1.0)


def test_names_are_checked_at_compile_time():
    with pytest.raises(ExpressionError):
        compile_nonlinearity(["y3"], parameters={})
    with pytest.raises(ExpressionError):
        compile_nonlinearity(["b*y1"], parameters={"a": 1.0})
    with pytest.raises(ExpressionError):
        compile_nonlinearity(["y1"], parameters={"pi": 3.0})


def test_declared_constants_are_carried():
    g = compile_nonlinearity(["a*sin(y1)"], parameters={"a": 0.5}, L=0.5, g1=0.5, g2=0.0, name="sine")
    assert (g.L, g.g1, g.g2, g.name, g.dim) == (0.5, 0.5, 0.0, "sine", 1)
