import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from floquetkit.expressions import (BinOp, ExprEvalError, ExprSyntaxError,
                                    Func, Neg, Num, Pi, UnknownIdentifierError,
                                    Var, compile_scalar, compile_vector,
                                    evaluate, parse, to_source)


def test_parse_function_base_case():
    assert parse("sin(t)") == Func("sin", Var())


def test_parse_seasonal_quotient():
    tree = parse("(0.5+1)*sin(t)/(2+cos(t))")
    expected = BinOp(
        "/",
        BinOp("*", BinOp("+", Num(0.5), Num(1.0)), Func("sin", Var())),
        BinOp("+", Num(2.0), Func("cos", Var())),
    )
    assert tree == expected


def test_parse_error_carries_offset_and_expectations():
    with pytest.raises(ExprSyntaxError) as err:
        parse("sin(")
    assert err.value.offset == 4
    assert err.value.expected  # non-empty expected-token set


@pytest.mark.parametrize("source,offset", [
    ("foo(t)", 0),
    ("t+x", 2),
    ("sigma", 0),
])
def test_unknown_identifiers_rejected(source, offset):
    with pytest.raises(UnknownIdentifierError) as err:
        parse(source)
    assert err.value.offset == offset


@pytest.mark.parametrize("source", ["", "   ", "1+", "(1", "2**3", "1..5",
                                    "sin", "sin 2", "1e", "3 4"])
def test_malformed_sources_rejected(source):
    with pytest.raises(ExprSyntaxError):
        parse(source)


def test_eval_basics():
    assert evaluate(parse("sin(t)"), 0.0) == 0.0
    assert evaluate(parse("1.5*sin(t)/(2+cos(t))"), math.pi / 2) == pytest.approx(0.75, abs=1e-15)
    assert evaluate(parse("pi"), 0.0) == math.pi
    assert evaluate(parse("abs(-3)+exp(0)"), 0.0) == 4.0


def test_precedence():
    assert evaluate(parse("2+3*4"), 0.0) == 14.0
    assert evaluate(parse("(2+3)*4"), 0.0) == 20.0
    assert evaluate(parse("2^3^2"), 0.0) == 512.0      # right-associative
    assert evaluate(parse("-2^2"), 0.0) == -4.0        # pow binds before minus
    assert evaluate(parse("6-2-1"), 0.0) == 3.0        # left-associative
    assert evaluate(parse("8/4/2"), 0.0) == 1.0
    assert evaluate(parse("2^-1"), 0.0) == 0.5


def test_pole_reports_offending_subtree():
    with pytest.raises(ExprEvalError) as err:
        evaluate(parse("1/(t-1)"), 1.0)
    assert err.value.subtree_source == "1.0/(t-1.0)"


def test_domain_error_reports_subtree():
    with pytest.raises(ExprEvalError) as err:
        evaluate(parse("(t-2)^0.5"), 1.0)
    assert "^" in err.value.subtree_source


def test_eval_deterministic():
    tree = parse("sin(3*t)*exp(cos(t))-t^2/7")
    values = {evaluate(tree, 1.2345) for _ in range(50)}
    assert len(values) == 1


def test_compiled_paths_match_evaluate():
    tree = parse("0.3*sin(2*t)-cos(t)/(3+sin(t))+exp(0.1*t)")
    scalar = compile_scalar(tree)
    vector = compile_vector(tree)
    import numpy as np
    ts = np.linspace(-3, 3, 101)
    vec_vals = vector(ts)
    for t, v in zip(ts, vec_vals):
        ref = evaluate(tree, float(t))
        assert scalar(float(t)) == pytest.approx(ref, rel=1e-15, abs=1e-15)
        assert v == pytest.approx(ref, rel=1e-12, abs=1e-15)


# -- round-trip property ------------------------------------------------------

_leaves = st.one_of(
    st.builds(Num, st.floats(min_value=0.0, max_value=1e6,
                             allow_nan=False, allow_infinity=False)),
    st.just(Pi()),
    st.just(Var()),
)


def _node_strategy(children):
    return st.one_of(
        st.builds(Neg, children),
        st.builds(BinOp, st.sampled_from("+-*/^"), children, children),
        st.builds(Func, st.sampled_from(("sin", "cos", "exp", "abs")), children),
    )


_exprs = st.recursive(_leaves, _node_strategy, max_leaves=25)


@given(_exprs)
@settings(max_examples=300, deadline=None)
def test_print_parse_round_trip(tree):
    assert parse(to_source(tree)) == tree
