import math

import numpy as np
import pytest

from avgeom import jets
from avgeom.expr import (
    ArityError,
    ExpressionDomainError,
    ExpressionSyntaxError,
    UnknownVariableError,
    parse,
)
from avgeom.jets import evaluate_jet

FY = {"x": 2, "y": 2}


@pytest.mark.parametrize(
    "source, value",
    [
        ("2+3*4", 14),
        ("(2+3)*4", 20),
        ("2^3^2", 512),
        ("-2^2", -4),
        ("2^-1", 0.5),
        ("8/4/2", 1),
        ("10-4-3", 3),
        ("-3*-2", 6),
        ("pow(2, 10)", 1024),
        ("abs(-1.5e1)", 15),
        ("sqrt(16) + log(exp(2))", 6),
    ],
)
def test_precedence_and_associativity(source, value):
    assert parse(source)({}) == pytest.approx(value, abs=1e-15)


def test_randers_expression_parses():
    e = parse("sqrt(y1^2 + y2^2) + 0.1*y1", FY)
    assert e.variables == ["y1", "y2"]
    assert e({"y1": 3.0, "y2": 4.0}) == pytest.approx(5.3)


def test_unclosed_call_reports_offset_and_expectation():
    with pytest.raises(ExpressionSyntaxError) as info:
        parse("sqrt(y1^2", FY)
    assert info.value.offset == 10
    assert ")" in info.value.expected


def test_fiber_coefficient_hand_value():
    e = parse("2*x1 + exp(-t1^2)", {"x": 1, "t": 1})
    assert e({"x1": 1.0, "t1": 0.0}) == 3.0
    assert e({"x1": 0.5, "t1": 1.0}) == pytest.approx(1 + math.exp(-1))


def test_simple_evaluation():
    assert parse("y1+y2", FY)({"y1": 1, "y2": 2}) == 3


def test_jet_through_parsed_norm():
    e = parse("sqrt(y1^2+y2^2)", FY)
    jet = evaluate_jet(lambda v: e({"y1": v[0], "y2": v[1]}), [3.0, 4.0])
    assert jet.value == pytest.approx(5.0)
    assert jet.first[0] == pytest.approx(0.6, abs=1e-15)
    assert jet.second[0, 0] == pytest.approx(16 / 125, abs=1e-15)


def test_parsed_jets_match_finite_differences():
    e = parse("sin(x1*y2) + exp(y1)/(1 + x1^2) - pow(y2, 3)", FY)
    f = lambda v: e({"x1": v[0], "x2": 0.0, "y1": v[1], "y2": v[2]})
    p = np.array([0.3, -0.2, 0.7])
    jet = evaluate_jet(f, list(p))
    for i in range(3):
        h = np.zeros(3)
        h[i] = 1e-5
        fd = (f(list(p + h)) - f(list(p - h))) / 2e-5
        assert jet.first[i] == pytest.approx(fd, rel=1e-8)


@pytest.mark.parametrize(
    "source, message",
    [("y1/(x1-x1)", "division by zero"), ("log(x1-1)", "log"), ("sqrt(-y1)", "sqrt"), ("(-y1)^0.5", "fractional")],
)
def test_domain_errors_name_the_subexpression(source, message):
    with pytest.raises(ExpressionDomainError) as info:
        parse(source, FY)({"x1": 1.0, "x2": 0.0, "y1": 1.0, "y2": 0.0})
    assert message in str(info.value)
    assert info.value.offset >= 1


def test_unknown_identifiers_and_ranges():
    with pytest.raises(UnknownVariableError):
        parse("z1 + 1", FY)
    with pytest.raises(UnknownVariableError) as info:
        parse("y1 + y3", FY)
    assert info.value.offset == 6
    with pytest.raises(UnknownVariableError):
        parse("phi1", FY)


def test_arity_mismatch():
    with pytest.raises(ArityError):
        parse("sin(y1, y2)", FY)
    with pytest.raises(ArityError):
        parse("pow(y1)", FY)


@pytest.mark.parametrize("source, offset", [("1 + * 2", 5), ("(1", 3), ("1 2", 3), ("3 $ 4", 3), ("", 1)])
def test_syntax_error_offsets(source, offset):
    with pytest.raises(ExpressionSyntaxError) as info:
        parse(source)
    assert info.value.offset == offset


def test_offsets_count_bytes():
    with pytest.raises(ExpressionSyntaxError) as info:
        parse("1 + é")
    assert info.value.offset == 5
    with pytest.raises(ExpressionSyntaxError) as info:
        parse("éé + 1")
    assert info.value.offset == 1


ROUND_TRIP = [
    "sqrt(y1^2 + y2^2) + 0.1*y1",
    "-x1^2^-y2 / (1 - y1) * cos(-x2)",
    "pow(abs(y1), 3) - -y2 + exp(-(x1 - x2)^2)",
    "((y1))*log(2 + y2^2)/sin(1 + x1^2)",
    "1e-3*y1 - 2.5E+1/y2^3",
]


@pytest.mark.parametrize("source", ROUND_TRIP)
def test_round_trip_on_random_bindings(source, rng):
    e = parse(source, FY)
    again = parse(e.to_source(), FY)
    assert again.to_source() == e.to_source()
    for _ in range(100):
        b = dict(zip(["x1", "x2", "y1", "y2"], rng.uniform(0.1, 1.5, 4)))
        assert again(b) == e(b)


def test_vectorised_and_abs_flag():
    e = parse("abs(y1) + y2", FY)
    assert e.uses_abs and not parse("y1", FY).uses_abs
    assert np.allclose(e({"y1": np.array([-1.0, 2.0]), "y2": 1.0}), [2.0, 3.0])


def test_jet_inputs_use_jet_functions():
    e = parse("exp(x1)", {"x": 1})
    jet = e({"x1": jets.Jet.variable(0.0, 0, 1)})
    assert jet.third[0, 0, 0] == pytest.approx(1.0)
