import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dca.errors import ExprSyntaxError, NonRealResult
from dca.expr import Bin, Num, Unary, Var, evaluate, parse_expr, to_text


def test_examples():
    assert parse_expr("re(z^2)")(1.0, 1.0) == pytest.approx(0.0, abs=1e-15)
    assert parse_expr("x*y")(2.0, 3.0) == 6.0
    with pytest.raises(ExprSyntaxError) as exc:
        parse_expr("re(")
    assert exc.value.position == 3


def test_precedence():
    assert parse_expr("-x^2").ast == Unary("-", Bin("^", Var("x"), Num(2.0)))
    assert parse_expr("2^3^2")(0, 0) == 512.0
    assert parse_expr("1-2-3")(0, 0) == -4.0
    assert parse_expr("8/4/2")(0, 0) == 1.0
    assert parse_expr("2*3+4*5")(0, 0) == 26.0
    assert parse_expr("2^-1")(0, 0) == 0.5


def test_functions_and_constants():
    g = parse_expr("exp(x)*cos(y) + abs(z) - im(i*pi) + log(e) + sin(0)")
    x, y = 0.3, -0.7
    assert g(x, y) == pytest.approx(math.exp(x) * math.cos(y) + math.hypot(x, y) - math.pi + 1)


def test_vectorized():
    g = parse_expr("re(z^3)")
    x = np.linspace(-1, 1, 7)
    y = np.linspace(0, 2, 7)
    assert np.allclose(g(x, y), ((x + 1j * y) ** 3).real)


def test_errors():
    for text, pos in [("foo(1)", 0), ("1 +", 3), ("(x", 2), ("x $ y", 2), ("x y", 2), ("", 0)]:
        with pytest.raises(ExprSyntaxError) as exc:
            parse_expr(text)
        assert exc.value.position == pos, text
    with pytest.raises(NonRealResult):
        parse_expr("z")(1.0, 1.0)
    with pytest.raises(NonRealResult):
        parse_expr("1/x")(0.0, 0.0)
    assert parse_expr("z")(2.0, 0.0) == 2.0


def test_str_roundtrip():
    g = parse_expr("-x^2 + re(z)*3.5")
    assert parse_expr(str(g)).ast == g.ast


names = st.sampled_from(["x", "y", "z", "pi", "e", "i"])
numbers = st.floats(0, 1e6, allow_nan=False).map(lambda v: repr(v))


def exprs():
    leaf = st.one_of(names, numbers)
    return st.recursive(
        leaf,
        lambda t: st.one_of(
            st.tuples(t, st.sampled_from("+-*/^"), t).map(lambda p: f"({p[0]}){p[1]}({p[2]})"),
            st.tuples(st.sampled_from(["re", "im", "abs", "exp", "log", "sin", "cos"]), t).map(
                lambda p: f"{p[0]}({p[1]})"
            ),
            t.map(lambda s: f"-{s}"),
        ),
        max_leaves=12,
    )


@settings(max_examples=200, deadline=None)
@given(text=exprs())
def test_print_parse_roundtrip(text):
    ast = parse_expr(text).ast
    again = parse_expr(to_text(ast)).ast
    assert again == ast
    a = evaluate(ast, 0.3, 0.4)
    b = evaluate(again, 0.3, 0.4)
    assert np.array_equal(a, b, equal_nan=True)
