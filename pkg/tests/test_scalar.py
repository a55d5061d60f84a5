from __future__ import annotations

from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ecs_lab.scalar import (
    EXACT,
    FLOAT,
    KINK,
    POLE,
    Abs,
    Cos,
    ExactnessError,
    Jet,
    Ln,
    Mul,
    ParseError,
    Pow,
    RationalPow,
    SingularPointError,
    UnknownIdentifierError,
    Var,
    compile_float,
    differentiate,
    eval_jet,
    evaluate,
    exact_power,
    float_tolerance,
    is_zero,
    parse_f,
    singular_points,
    to_scalar,
)

T = Var()


class TestParser:
    def test_negative_integer_power(self):
        assert parse_f("t^-2") == Pow(T, -2)

    def test_rational_power_of_abs(self):
        assert parse_f("abs(t)^(1/2)") == RationalPow(Abs(T), Fraction(1, 2))

    def test_nested_functions(self):
        assert parse_f("t^-2 * cos(ln(t))") == Mul(Pow(T, -2), Cos(Ln(T)))

    def test_syntax_error_has_position(self):
        with pytest.raises(ParseError) as info:
            parse_f("t +* 2")
        assert info.value.position == 3

    def test_unknown_identifier(self):
        with pytest.raises(UnknownIdentifierError):
            parse_f("foo(t)")

    @pytest.mark.parametrize("text", ["", "(t", "t)", "t^", "t^(1/0)", "2 3"])
    def test_rejects_malformed(self, text):
        with pytest.raises(ParseError):
            parse_f(text)

    @pytest.mark.parametrize("text", ["t^-2", "4*(t-3)^-2", "abs(t)^(1/3) + 1/2", "-t^2", "exp(-t)*sin(2*pi*t)"])
    def test_str_round_trip(self, text):
        expr = parse_f(text)
        assert parse_f(str(expr)) == expr

    def test_precedence(self):
        assert evaluate(parse_f("2 + 3*t^2"), 2) == 14
        assert evaluate(parse_f("-t^2"), 3) == -9
        assert evaluate(parse_f("1/2/t"), 2) == Fraction(1, 4)


class TestJets:
    def test_inverse_square_at_one(self):
        assert eval_jet(parse_f("t^-2"), 1).derivatives == (1, -2, 6, -24, 120)

    def test_identity(self):
        assert eval_jet(T, 7).derivatives == (7, 1, 0, 0, 0)

    def test_inverse_square_at_two(self):
        want = tuple(Fraction(a, b) for a, b in [(1, 4), (-1, 4), (3, 8), (-3, 4), (15, 8)])
        assert eval_jet(parse_f("t^-2"), 2).derivatives == want

    def test_exact_mode_refuses_transcendentals(self):
        with pytest.raises(ExactnessError):
            eval_jet(parse_f("ln(t)"), 2, EXACT)

    def test_float_transcendental(self):
        d = eval_jet(parse_f("ln(t)"), 2.0, FLOAT).derivatives
        assert d[1] == pytest.approx(0.5) and d[4] == pytest.approx(-6 / 16)

    def test_pole(self):
        with pytest.raises(SingularPointError):
            eval_jet(parse_f("1/(t-1)"), 1)

    def test_abs_not_differentiable_at_zero(self):
        with pytest.raises(SingularPointError):
            eval_jet(parse_f("abs(t-1)"), 1)
        assert evaluate(parse_f("abs(t-1)"), 1) == 0

    def test_rational_power_exact(self):
        jet = eval_jet(parse_f("t^(1/2)"), Fraction(4))
        assert jet.value == 2 and jet.d(1) == Fraction(1, 4) and jet.d(2) == Fraction(-1, 32)

    def test_irrational_power_refused_in_exact_mode(self):
        with pytest.raises(ExactnessError):
            eval_jet(parse_f("t^(1/2)"), 2, EXACT)

    def test_float_in_exact_mode_rejected(self):
        with pytest.raises(ExactnessError):
            to_scalar(0.5, EXACT)


def test_exact_power():
    assert exact_power(Fraction(8, 27), Fraction(2, 3)) == Fraction(4, 9)
    assert exact_power(Fraction(2), Fraction(1, 2)) is None
    assert exact_power(Fraction(1, 4), Fraction(-1, 2)) == 2


def test_tolerance_env(monkeypatch):
    assert float_tolerance() == 1e-9
    monkeypatch.setenv("ECS_LAB_TOL", "1e-6")
    assert float_tolerance() == 1e-6
    assert is_zero(5e-7)


def test_symbolic_derivative_matches_jet():
    expr = parse_f("(t^2 + 1)^-1 * t^3")
    for t0 in [Fraction(1, 3), Fraction(2), Fraction(-5, 2)]:
        assert evaluate(differentiate(expr), t0) == eval_jet(expr, t0).d(1)


def test_singular_points():
    found = singular_points(parse_f("1/(t-1) + abs(t-3)"), 0, 4)
    kinds = {round(t, 9): k for t, k in found}
    assert kinds == {1.0: POLE, 3.0: KINK}


def test_compile_float_matches_evaluate():
    expr = parse_f("t^-1*cos(2*pi*ln(t)/ln(2)) + abs(t-2)^(1/3)")
    fn = compile_float(expr)
    for t in [0.5, 1.3, 2.7]:
        assert fn(t) == pytest.approx(evaluate(expr, t, FLOAT), rel=1e-14)


# -- properties --------------------------------------------------------------

_rationals = st.fractions(min_value=-3, max_value=3, max_denominator=6)


@st.composite
def rational_exprs(draw, depth=3):
    """Random rational functions of t without poles in [1, 2]."""
    if depth == 0 or draw(st.booleans()):
        return draw(st.sampled_from(["t", "2", "1/3", "(t+1)", "t^2"]))
    a, b = draw(rational_exprs(depth - 1)), draw(rational_exprs(depth - 1))
    op = draw(st.sampled_from(["+", "-", "*", "/pos"]))
    if op == "/pos":
        return f"({a})/(({b})^2 + 1)"
    return f"({a}){op}({b})"


@settings(max_examples=60, deadline=None)
@given(rational_exprs(), st.fractions(min_value=1, max_value=2, max_denominator=10))
def test_jet_matches_finite_differences(text, t0):
    expr = parse_f(text)
    exact = [float(d) for d in eval_jet(expr, t0).derivatives]
    f = compile_float(expr)
    x = float(t0)
    scale = max(1.0, *(abs(d) for d in exact[:3]))
    for h in (1e-4, 1e-5):
        first = (f(x + h) - f(x - h)) / (2 * h)
        second = (f(x + h) - 2 * f(x) + f(x - h)) / h**2
        assert abs(first - exact[1]) <= 1e-5 * scale
        assert abs(second - exact[2]) <= 1e-5 * scale
    # third order via a wider stencil of the exact first derivative
    d1 = differentiate(expr)
    h = 1e-4
    g = compile_float(d1)
    x = float(t0)
    third = (g(x + h) - 2 * g(x) + g(x - h)) / h**2
    assert third == pytest.approx(float(exact[3]), rel=1e-5, abs=1e-4)


@settings(max_examples=100, deadline=None)
@given(st.lists(_rationals, min_size=5, max_size=5), st.lists(_rationals, min_size=5, max_size=5))
def test_jet_product_rule(a, b):
    ja, jb = Jet(tuple(a)), Jet(tuple(b))
    prod = ja * jb
    da, db, dp = ja.derivatives, jb.derivatives, prod.derivatives
    assert dp[1] == da[1] * db[0] + da[0] * db[1]
    assert dp[2] == da[2] * db[0] + 2 * da[1] * db[1] + da[0] * db[2]


@settings(max_examples=60, deadline=None)
@given(st.fractions(min_value=Fraction(1, 2), max_value=3, max_denominator=8))
def test_chain_rule_composition(t0):
    # (t^2 + 1)^-1 composed: compare jet of the composite with the chain rule by hand
    inner = eval_jet(parse_f("t^2 + 1"), t0)
    outer = eval_jet(parse_f("(t^2 + 1)^-1"), t0)
    u = inner.value
    assert outer.d(1) == -inner.d(1) / u**2
    assert outer.d(2) == 2 * inner.d(1) ** 2 / u**3 - inner.d(2) / u**2
