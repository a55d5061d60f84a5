from __future__ import annotations

import math
import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ecs_lab import linalg
from ecs_lab.model import ChartError, make_point
from ecs_lab.runner import basis_properties, random_function_space
from ecs_lab.scalar import parse_f
from ecs_lab.symmetry import (
    INCONCLUSIVE,
    INFINITE,
    TRIVIAL,
    DeckGroup,
    DegenerateSpaceError,
    FFunction,
    IsometryWitness,
    NonzeroPeriodError,
    SampledFunctionSpace,
    adaptive_simpson,
    antiderivative,
    basis_construct,
    check_equivariance,
    construct_invariant_primitive,
    derivative_law,
    gradient_t_multiplier,
    holonomy_group,
    identity_witness,
    integrate,
    period_integral,
    verify_isometry,
)

F = Fraction
LOG_PERIODIC = "t^-1*cos(2*pi*ln(t)/ln(2))"


def dilation(q, p=0, b=None):
    q = F(q)
    b = b if b is not None else [[q, F(0)], [F(0), 1 / q]]
    return IsometryWitness(q, F(p), F(0), linalg.LinearIsometry.of(b))


def points(model):
    return [make_point(model, t, s, (F(1), F(-1, 2))) for t, s in ((F(1, 2), 0), (F(1), 1), (F(3, 2), -2))]


class TestIsometry:
    def test_m1_dilation(self, m1):
        assert verify_isometry(m1, dilation(2), points(m1)) == 0

    def test_m2_not_isometry(self, m2):
        assert verify_isometry(m2, dilation(2), points(m2)) > 0

    def test_identity(self, m2):
        assert verify_isometry(m2, identity_witness(2), points(m2)) == 0

    def test_image_leaves_interval(self, m1):
        with pytest.raises(ChartError):
            verify_isometry(m1, dilation(1, -1, linalg.identity(2)), points(m1))

    def test_gradient_pulls_back_to_q(self, m1):
        for q in (2, 3, F(1, 2)):
            assert gradient_t_multiplier(m1, dilation(q), points(m1)[1]) == q


class TestEquivariance:
    def test_m1_q3(self, m1):
        laws = check_equivariance(m1, dilation(3), [F(1, 2), F(1), F(7, 3)])
        assert all(l.ok for l in laws)
        by_name = {l.law: l for l in laws}
        assert by_name["f o gamma = q^-2 f"].residual == 0
        assert by_name["|f|^(1/2) o gamma = q^-1 |f|^(1/2)"].residual == 0
        cube = by_name["|f'|^(1/3) o gamma = q^-1 |f'|^(1/3)"]
        assert cube.mode == "float" and cube.residual < 1e-9

    def test_m2_fails(self, m2):
        laws = check_equivariance(m2, dilation(2), [F(1), F(2)])
        assert not laws[0].ok

    @pytest.mark.parametrize("text, a", [("t", 1), ("t^-1", -1), ("3*t^-2", -2)])
    def test_derivative_law(self, text, a):
        hyp, concl = derivative_law(parse_f(text), dilation(3), a, [F(1, 2), F(2), F(5)])
        assert hyp.residual == 0 and concl.residual == 0


class TestPeriods:
    def test_log_two(self):
        assert period_integral(FFunction(parse_f("t^-1")), dilation(2), F(1)) == pytest.approx(math.log(2), abs=1e-10)

    def test_log_periodic_vanishes(self):
        assert abs(period_integral(FFunction(parse_f(LOG_PERIODIC)), dilation(2), 1)) < 1e-10

    def test_zero(self):
        assert period_integral(FFunction(parse_f("0")), dilation(2), F(1)) == 0

    def test_exact_antiderivative(self):
        assert antiderivative(parse_f("3*t^2 - t^-2")) == {3: 1, -1: 1}
        assert antiderivative(parse_f("t^-1")) is None
        assert period_integral(FFunction(parse_f("t^-2")), dilation(2), F(1)) == F(1, 2)

    def test_pole_inside_segment(self):
        from ecs_lab.scalar import SingularPointError

        with pytest.raises(SingularPointError):
            integrate(parse_f("(t-3/2)^-1"), 1.0, 2.0)

    def test_kink_split(self):
        assert integrate(parse_f("abs(t-1)"), 0.0, 3.0) == pytest.approx(2.5, abs=1e-10)

    def test_simpson(self):
        assert adaptive_simpson(math.sin, 0.0, math.pi) == pytest.approx(2.0, abs=1e-10)


class TestPrimitive:
    def test_log_periodic(self):
        prim = construct_invariant_primitive(FFunction(parse_f(LOG_PERIODIC)), dilation(2), 1)
        assert prim.residual < 1e-9 and prim.nonconstant and len(prim.samples) == 50
        t = 1.7
        closed = math.log(2) / (2 * math.pi) * math.sin(2 * math.pi * math.log(t) / math.log(2))
        assert float(prim.mu(t)) == pytest.approx(closed, abs=1e-9)

    def test_nonzero_period(self):
        with pytest.raises(NonzeroPeriodError):
            construct_invariant_primitive(FFunction(parse_f("t^-1")), dilation(2), 1)

    def test_zero_is_constant(self):
        prim = construct_invariant_primitive(FFunction(parse_f("0")), dilation(2), F(1))
        assert prim.constant and prim.residual == 0


class TestHolonomy:
    def test_single_dilation(self):
        res = holonomy_group(DeckGroup((dilation(2),)), 1, 6, (0, math.inf))
        assert res.classification == TRIVIAL and res.multipliers == (1,)

    def test_infinite(self):
        res = holonomy_group(DeckGroup((dilation(4), dilation(2, -1))), 1, 4, (0, math.inf))
        assert res.classification == INFINITE and 2 in res.multipliers

    def test_empty(self):
        assert holonomy_group(DeckGroup(()), 1, 4).classification == TRIVIAL

    def test_translations(self):
        res = holonomy_group(DeckGroup((dilation(1, 1), dilation(1, F(1, 2)))), 0, 4)
        assert res.classification == TRIVIAL

    def test_inconclusive(self):
        res = holonomy_group(DeckGroup((dilation(2, 1), dilation(3, 1))), F(1, 7), 3, (-math.inf, math.inf))
        assert res.classification in (INCONCLUSIVE, INFINITE)

    @settings(max_examples=40, deadline=None)
    @given(st.lists(st.tuples(st.sampled_from([F(1, 2), F(1), F(2), F(3)]), st.integers(-2, 2)), max_size=3))
    def test_dichotomy(self, gens):
        deck = DeckGroup(tuple(dilation(q, p) for q, p in gens))
        res = holonomy_group(deck, F(1), 3, (0, math.inf))
        assert res.classification in (TRIVIAL, INFINITE, INCONCLUSIVE)
        if res.classification == TRIVIAL:
            assert res.multipliers == (1,)


class TestBasis:
    def test_all_functions_on_two_points(self):
        res = basis_construct(SampledFunctionSpace([1, 2], [[F(1), F(1)], [F(1), F(-1)]]))
        assert res.x0 == [] and res.partition == [[1], [2]]
        assert res.basis == [[1, 0], [0, 1]]

    def test_single_positive(self):
        res = basis_construct(SampledFunctionSpace(["a", "b", "c"], [[F(1), F(2), F(3)]]))
        assert res.partition == [["a", "b", "c"]] and min(res.basis[0]) > 0

    def test_not_abs_closed(self):
        with pytest.raises(DegenerateSpaceError):
            basis_construct(SampledFunctionSpace([1, 2, 3], [[F(1), F(-1), F(0)], [F(0), F(-1), F(1)]]))

    def test_zero_set_becomes_x0(self):
        res = basis_construct(SampledFunctionSpace([1, 2, 3], [[F(2), F(0), F(0)], [F(1), F(0), F(5)]]))
        assert res.x0 == [2]

    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 10**6))
    def test_random_spaces(self, seed):
        space, hidden = random_function_space(random.Random(seed))
        res = basis_construct(space)
        assert all(basis_properties(space, res).values())
        assert sorted(map(sorted, res.partition)) == sorted(hidden)
