from __future__ import annotations

from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ecs_lab.curvature import (
    LocalGeometry,
    christoffels_generic,
    classify_ecs,
    covariant_derivative,
    covariant_derivative_fd,
    olszak_distribution,
    ricci,
    ricci_identity_residual,
    riemann,
    riemann_symmetry_residual,
    scalar_curvature,
    trace_residual,
    weyl,
)
from ecs_lab.model import INF, christoffels_closed, make_model, make_point
from ecs_lab.scalar import parse_f
from conftest import JORDAN, NULL_GRAM

F = Fraction


def test_generic_matches_closed_m2(m2, m2_point):
    generic = christoffels_generic(m2, m2_point)
    assert generic == christoffels_closed(m2, m2_point)
    assert generic[(3, 0, 0)] == 1


def test_gamma_m1(m1):
    assert christoffels_generic(m1, make_point(m1, 1, 0, (1, 1)))[(3, 0, 0)] == -2


def test_flat_probe():
    flat = make_model(4, NULL_GRAM, [[0, 0], [0, 0]], parse_f("0"), probe=True)
    p = make_point(flat, 1, 0, (1, 2))
    assert christoffels_generic(flat, p) == {}
    assert riemann(flat, p).components == {}


def test_ricci_m2(m2, m2_point):
    assert ricci(m2, m2_point).components == {(0, 0): -4}


def test_ricci_m1(m1):
    assert ricci(m1, make_point(m1, 1, 0, (1, 1))).components == {(0, 0): -2}


def test_scalar_curvature_zero(m2, m2_point):
    assert scalar_curvature(m2, m2_point) == 0


def test_weyl_m2(m2, m2_point):
    w = weyl(m2, m2_point)
    # independent symbolic computation: W_{1313} = -1 (1-based), antisymmetric partners
    assert w.components == {(0, 2, 0, 2): -1, (0, 2, 2, 0): 1, (2, 0, 0, 2): 1, (2, 0, 2, 0): -1}
    geom = LocalGeometry(m2, m2_point, order=2)
    inv = geom.inverse.at_point(4).dense()
    assert all(v == 0 for v in trace_residual(w, inv).values())


def test_weyl_conformal_flatness_probe():
    probe = make_model(4, NULL_GRAM, [[0, 0], [0, 0]], parse_f("t"), probe=True)
    assert weyl(probe, make_point(probe, 2, 0, (1, 1))).components == {}


def test_riemann_symmetries(m2, m2_point):
    assert all(v == 0 for v in riemann_symmetry_residual(riemann(m2, m2_point)).values())


def test_covariant_derivatives_m2(m2):
    for t in (F(1, 2), F(2), F(7, 3)):
        p = make_point(m2, t, F(1, 3), (F(1), F(-2)))
        geom = LocalGeometry(m2, p)
        assert geom.covariant_derivative(geom.weyl).is_zero()
        assert geom.covariant_derivative(geom.metric).is_zero()
        assert not geom.covariant_derivative(geom.riemann).is_zero()


def test_covariant_derivative_by_name(m2, m2_point):
    assert covariant_derivative(m2, "weyl", m2_point).is_zero()
    assert not covariant_derivative(m2, "riemann", m2_point).is_zero()


def test_constant_f_locally_symmetric():
    probe = make_model(4, NULL_GRAM, JORDAN, parse_f("3"), probe=True)
    for t in (F(1), F(5, 2)):
        assert covariant_derivative(probe, "riemann", make_point(probe, t, 0, (1, 2))).is_zero()


def test_nabla_w_float_two_stencils(m2):
    p = make_point(m2, 1.5, 0.25, (0.5, -1.0), "float")
    exact_like = covariant_derivative(m2, "weyl", p)
    assert exact_like.max_abs() < 1e-8
    coarse = covariant_derivative_fd(m2, "weyl", p, 1e-3)
    fine = covariant_derivative_fd(m2, "weyl", p, 1e-4)
    assert coarse.max_abs() < 1e-5 and fine.max_abs() < 1e-6


class TestOlszak:
    def test_rank_one_jordan_gives_two_dimensional_kernel(self, m2, m2_point):
        # rank(A) = 1: the wedge condition also admits the x^2 direction
        rep = olszak_distribution(m2, m2_point)
        assert rep.rank == 2
        assert sorted(map(tuple, rep.basis)) == [(0, 0, 0, 1), (0, 1, 0, 0)]

    def test_m1_origin(self, m1):
        assert olszak_distribution(m1, make_point(m1, 1, 0, (0, 0))).rank == 2

    def test_rank_two_a_gives_d_n(self, m3):
        rep = olszak_distribution(m3, make_point(m3, 2, 0, (1, 1)))
        assert rep.rank == 1 and rep.rank_one
        assert rep.basis[0][:3] == [0, 0, 0] and rep.basis[0][3] != 0
        assert rep.dperp_check == 0 and rep.dn_check == 0 and rep.null_check == 0

    def test_conformally_flat_probe(self):
        probe = make_model(4, NULL_GRAM, [[0, 0], [0, 0]], parse_f("t"), probe=True)
        rep = olszak_distribution(probe, make_point(probe, 2, 0, (1, 1)))
        assert rep.rank == 0 and not rep.rank_one and rep.note


class TestClassify:
    def test_m2(self, m2):
        pts = [make_point(m2, t, 0, (1, 1)) for t in (F(1), F(2), F(3))]
        v = classify_ecs(m2, pts)
        assert v.is_ecs and not v.conformally_flat and v.locally_symmetric_locus == []

    def test_m1(self, m1):
        pts = [make_point(m1, t, 0, (1, -1)) for t in (F(1, 2), F(2))]
        assert classify_ecs(m1, pts).is_ecs

    def test_constant_probe(self):
        probe = make_model(4, NULL_GRAM, JORDAN, parse_f("3"), probe=True)
        pts = [make_point(probe, t, 0, (1, 1)) for t in (F(1), F(2))]
        v = classify_ecs(probe, pts)
        assert not v.is_ecs and v.locally_symmetric_locus == [1, 2] and v.nabla_r_zero == [1, 2]

    def test_square_locus(self):
        model = make_model(4, [[1, 0], [0, 1]], [[1, 0], [0, -1]], parse_f("(t-1)^2"))
        pts = [make_point(model, t, 0, (1, 2)) for t in (F(1, 2), F(1), F(2))]
        v = classify_ecs(model, pts)
        assert v.locally_symmetric_locus == [1] and v.nabla_r_zero == [1] and v.is_ecs

    def test_needs_points(self, m2):
        with pytest.raises(ValueError):
            classify_ecs(m2, [])


_coord = st.fractions(min_value=-3, max_value=3, max_denominator=7)


@settings(max_examples=25, deadline=None)
@given(st.fractions(min_value=F(1, 4), max_value=4, max_denominator=9), _coord, st.lists(_coord, min_size=3, max_size=3))
def test_identities_on_five_dimensional_model(t, s, x):
    g = [[1, 0, 0], [0, 0, 1], [0, 1, 0]]
    a = [[1, 0, 0], [0, F(-1, 2), 1], [0, 0, F(-1, 2)]]
    model = make_model(5, g, a, parse_f("t^2 + 1/t"), (0, INF))
    p = make_point(model, t, s, tuple(x))
    geom = LocalGeometry(model, p)
    assert ricci_identity_residual(model, geom.value("ricci"), p) == 0
    assert geom.scalar_curvature.value() == 0
    assert geom.covariant_derivative(geom.weyl).is_zero()
    assert geom.value("christoffel").components == christoffels_closed(model, p)
