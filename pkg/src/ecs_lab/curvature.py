"""Generic curvature pipeline over the model metric.

Every field is carried as a sparse tensor of truncated Taylor series around
the base point, so derivatives of Christoffel symbols and curvature come out
of the same exact arithmetic as their values. Nothing here uses the closed
forms of the model beyond the metric expansion itself.

Curvature convention: ``R^a_bcd = d_c G^a_db - d_d G^a_cb + G^a_ce G^e_db -
G^a_de G^e_cb``, ``Ric_bd = R^a_bad``.
"""

from __future__ import annotations

import itertools
from collections import defaultdict
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Union

from . import linalg
from .model import ChartPoint, ModelData, check_point, metric_series, point_mode
from .scalar import FLOAT, Scalar, eval_jet, is_zero, to_scalar
from .series import Series, series_inverse

UPPER = "upper"
LOWER = "lower"


@dataclass(frozen=True)
class TensorValue:
    """Sparse component table of a tensor at a point.

    ``components`` maps 0-based index tuples to nonzero scalars; absent keys
    are zero.
    """

    variance: tuple
    dim: int
    components: dict
    base_point: ChartPoint | None = None

    @property
    def rank(self) -> int:
        return len(self.variance)

    def __getitem__(self, key):
        return self.components.get(tuple(key), 0)

    def dense(self) -> list:
        def build(prefix):
            if len(prefix) == self.rank:
                return self[prefix]
            return [build(prefix + (i,)) for i in range(self.dim)]

        return build(())

    def max_abs(self):
        return max((abs(v) for v in self.components.values()), default=0)

    def is_zero(self, tol: float | None = None) -> bool:
        return all(is_zero(v, tol) for v in self.components.values())

    def nonzero(self, tol: float | None = None) -> dict:
        return {k: v for k, v in self.components.items() if not is_zero(v, tol)}


@dataclass
class SeriesTensor:
    variance: tuple
    components: dict

    def at_point(self, dim: int, point=None) -> TensorValue:
        comps = {}
        for k, s in self.components.items():
            v = s.value()
            if v != 0:
                comps[k] = v
        return TensorValue(self.variance, dim, comps, point)


def _accumulate(out: dict, key, s: Series) -> None:
    if s.is_zero():
        return
    out[key] = out[key] + s if key in out else s


def _clean(d: dict) -> dict:
    return {k: s for k, s in d.items() if not s.is_zero()}


class LocalGeometry:
    """Curvature fields expanded around one chart point.

    ``order`` is the expansion order of the metric; order 3 is enough for the
    first covariant derivatives of curvature.
    """

    def __init__(self, model: ModelData, point: ChartPoint, order: int = 3):
        check_point(model, point)
        self.model = model
        self.point = point
        self.order = order
        self.n = model.n
        self.mode = point_mode(point)

    # -- metric ------------------------------------------------------------
    @cached_property
    def metric(self) -> SeriesTensor:
        return SeriesTensor((LOWER, LOWER), metric_series(self.model, self.point, self.order))

    @cached_property
    def metric_at(self) -> list:
        zero = to_scalar(0, self.mode)
        g = [[zero] * self.n for _ in range(self.n)]
        for (a, b), s in self.metric.components.items():
            g[a][b] = s.value(zero)
        return g

    @cached_property
    def inverse(self) -> SeriesTensor:
        g0inv = linalg.inverse(self.metric_at)
        const = {
            (i, j): Series.const(v)
            for i, row in enumerate(g0inv)
            for j, v in enumerate(row)
            if v != 0
        }
        inv = series_inverse(self.metric.components, const, self.n, self.order)
        return SeriesTensor((UPPER, UPPER), inv)

    # -- connection ----------------------------------------------------------
    @cached_property
    def christoffel(self) -> SeriesTensor:
        """``Gamma^k_ij`` keyed ``(k, i, j)``."""
        lowered: dict = {}
        half = to_scalar(1, self.mode) / 2
        for (a, b), s in self.metric.components.items():
            for c in range(self.n):
                d = s.deriv(c)
                if d.is_zero():
                    continue
                hd = d.scale(half)
                # Gamma_{l,ij} = (d_i g_jl + d_j g_il - d_l g_ij) / 2
                _accumulate(lowered, (b, c, a), hd)
                _accumulate(lowered, (b, a, c), hd)
                _accumulate(lowered, (c, a, b), -hd)
        lowered = _clean(lowered)
        by_l = defaultdict(list)
        for (k, l), s in self.inverse.components.items():
            by_l[l].append((k, s))
        out: dict = {}
        for (l, i, j), s in lowered.items():
            for k, ginv in by_l.get(l, ()):
                _accumulate(out, (k, i, j), ginv * s)
        return SeriesTensor((UPPER, LOWER, LOWER), _clean(out))

    # -- curvature -----------------------------------------------------------
    @cached_property
    def riemann_up(self) -> SeriesTensor:
        """``R^a_bcd`` keyed ``(a, b, c, d)``."""
        gam = self.christoffel.components
        part: dict = {}
        for (a, d, b), s in gam.items():
            for c in range(self.n):
                _accumulate(part, (a, b, c, d), s.deriv(c))
        by_upper = defaultdict(list)
        for (e, d, b), s in gam.items():
            by_upper[e].append((d, b, s))
        for (a, c, e), s1 in gam.items():
            for d, b, s2 in by_upper.get(e, ()):
                _accumulate(part, (a, b, c, d), s1 * s2)
        out: dict = {}
        for (a, b, c, d), s in part.items():
            _accumulate(out, (a, b, c, d), s)
            _accumulate(out, (a, b, d, c), -s)
        return SeriesTensor((UPPER, LOWER, LOWER, LOWER), _clean(out))

    @cached_property
    def riemann(self) -> SeriesTensor:
        """``R_abcd = g_ae R^e_bcd``."""
        by_e = defaultdict(list)
        for (a, e), s in self.metric.components.items():
            by_e[e].append((a, s))
        out: dict = {}
        for (e, b, c, d), s in self.riemann_up.components.items():
            for a, g in by_e.get(e, ()):
                _accumulate(out, (a, b, c, d), g * s)
        return SeriesTensor((LOWER,) * 4, _clean(out))

    @cached_property
    def ricci(self) -> SeriesTensor:
        out: dict = {}
        for (a, b, c, d), s in self.riemann_up.components.items():
            if a == c:
                _accumulate(out, (b, d), s)
        return SeriesTensor((LOWER, LOWER), _clean(out))

    @cached_property
    def scalar_curvature(self) -> Series:
        total = Series({})
        inv = self.inverse.components
        for (b, d), s in self.ricci.components.items():
            if (b, d) in inv:
                total = total + inv[(b, d)] * s
        return total

    @cached_property
    def weyl(self) -> SeriesTensor:
        """Totally traceless part of ``R_abcd`` (``n >= 4``)."""
        n = self.n
        one = to_scalar(1, self.mode)
        c1 = one / (n - 2)
        c2 = one / ((n - 1) * (n - 2))
        g = self.metric.components
        ric = self.ricci.components
        scal = self.scalar_curvature
        out: dict = {}
        for key, s in self.riemann.components.items():
            _accumulate(out, key, s)

        # W = R - c1 (g_ac Ric_bd - g_ad Ric_bc + g_bd Ric_ac - g_bc Ric_ad)
        #       + c2 S (g_ac g_bd - g_ad g_bc)
        # each product g_pq Ric_rs feeds the four terms at relabelled keys
        for (a, c), gs in g.items():
            for (b, d), rs in ric.items():
                p = (gs * rs).scale(c1)
                _accumulate(out, (a, b, c, d), -p)
                _accumulate(out, (a, b, d, c), p)
                _accumulate(out, (b, a, d, c), -p)
                _accumulate(out, (b, a, c, d), p)
        if not scal.is_zero():
            for (a, c), g1 in g.items():
                for (b, d), g2 in g.items():
                    p = (g1 * g2 * scal).scale(c2)
                    _accumulate(out, (a, b, c, d), p)
                    _accumulate(out, (a, b, d, c), -p)
        return SeriesTensor((LOWER,) * 4, _clean(out))

    def field(self, name: str) -> SeriesTensor:
        fields = {
            "metric": lambda: self.metric,
            "inverse": lambda: self.inverse,
            "christoffel": lambda: self.christoffel,
            "riemann_up": lambda: self.riemann_up,
            "riemann": lambda: self.riemann,
            "ricci": lambda: self.ricci,
            "weyl": lambda: self.weyl,
        }
        if name not in fields:
            raise KeyError(f"unknown tensor field {name!r}")
        return fields[name]()

    def value(self, name: str) -> TensorValue:
        return self.field(name).at_point(self.n, self.point)

    # -- covariant derivative --------------------------------------------------
    def covariant_derivative(self, tensor: SeriesTensor) -> TensorValue:
        """``nabla T`` at the point; the derivative index is appended last."""
        gam = {k: s.value() for k, s in self.christoffel.components.items()}
        gam = {k: v for k, v in gam.items() if v != 0}
        by_upper = defaultdict(list)
        by_last = defaultdict(list)
        for (f, e, i), v in gam.items():
            by_upper[f].append((e, i, v))
            by_last[i].append((f, e, v))
        out: dict = defaultdict(int)
        for key, s in tensor.components.items():
            for mono, c in s.terms.items():
                if len(mono) == 1:
                    out[key + mono] += c
            v0 = s.value()
            if v0 == 0:
                continue
            for slot, kind in enumerate(tensor.variance):
                f = key[slot]
                if kind == LOWER:
                    # -Gamma^f_{e i} T_{..f..} lands on index i in this slot
                    for e, i, g in by_upper.get(f, ()):
                        new = key[:slot] + (i,) + key[slot + 1 :] + (e,)
                        out[new] -= g * v0
                else:
                    # +Gamma^i_{e f} T^{..f..}
                    for i, e, g in by_last.get(f, ()):
                        new = key[:slot] + (i,) + key[slot + 1 :] + (e,)
                        out[new] += g * v0
        comps = {k: v for k, v in out.items() if v != 0}
        return TensorValue(tensor.variance + (LOWER,), self.n, comps, self.point)


# -- module-level operations -------------------------------------------------


def christoffels_generic(model: ModelData, point: ChartPoint) -> dict:
    """Nonzero ``{(k, i, j): Gamma^k_ij}`` from the Levi-Civita formula."""
    geom = LocalGeometry(model, point, order=1)
    return geom.value("christoffel").components


def riemann(model: ModelData, point: ChartPoint) -> TensorValue:
    return LocalGeometry(model, point, order=2).value("riemann")


def ricci(model: ModelData, point: ChartPoint) -> TensorValue:
    return LocalGeometry(model, point, order=2).value("ricci")


def scalar_curvature(model: ModelData, point: ChartPoint) -> Scalar:
    return LocalGeometry(model, point, order=2).scalar_curvature.value(to_scalar(0, point_mode(point)))


def weyl(model: ModelData, point: ChartPoint) -> TensorValue:
    if model.n < 4:
        raise ValueError("Weyl tensor requires n >= 4")
    return LocalGeometry(model, point, order=2).value("weyl")


FieldSpec = Union[str, Callable[[LocalGeometry], SeriesTensor]]


def covariant_derivative(
    model: ModelData, tensor_field: FieldSpec, point: ChartPoint, geometry: LocalGeometry | None = None
) -> TensorValue:
    """``nabla T`` at ``point`` for a named field or a callable on the geometry."""
    geom = geometry or LocalGeometry(model, point, order=3)
    tensor = geom.field(tensor_field) if isinstance(tensor_field, str) else tensor_field(geom)
    return geom.covariant_derivative(tensor)


def covariant_derivative_fd(model: ModelData, field_name: str, point: ChartPoint, h: float) -> TensorValue:
    """Float-mode ``nabla T`` with central differences of step ``h``.

    Independent of the series machinery for the derivative part; used as a
    cross-check of :func:`covariant_derivative`.
    """
    point = point.in_mode(FLOAT)
    base = LocalGeometry(model, point, order=2)
    tensor = base.value(field_name)
    gam = base.value("christoffel").components
    n = model.n
    out: dict = defaultdict(float)
    for e in range(n):
        plus = LocalGeometry(model, point.shifted(e, h), order=2).value(field_name)
        minus = LocalGeometry(model, point.shifted(e, -h), order=2).value(field_name)
        for key in set(plus.components) | set(minus.components):
            out[key + (e,)] += (plus[key] - minus[key]) / (2 * h)
    for key, v0 in tensor.components.items():
        for slot, kind in enumerate(tensor.variance):
            f = key[slot]
            for (a, e, i), g in gam.items():
                if kind == LOWER and a == f:
                    out[key[:slot] + (i,) + key[slot + 1 :] + (e,)] -= g * v0
                elif kind == UPPER and i == f:
                    out[key[:slot] + (a,) + key[slot + 1 :] + (e,)] += g * v0
    return TensorValue(tensor.variance + (LOWER,), n, dict(out), point)


# -- identities ----------------------------------------------------------------


def riemann_symmetry_residual(r: TensorValue) -> dict:
    """Max residuals of pair antisymmetries, pair exchange and first Bianchi."""
    res = {"antisym_first": 0, "antisym_last": 0, "pair_exchange": 0, "bianchi": 0}
    for (a, b, c, d), v in r.components.items():
        res["antisym_first"] = max(res["antisym_first"], abs(v + r[(b, a, c, d)]))
        res["antisym_last"] = max(res["antisym_last"], abs(v + r[(a, b, d, c)]))
        res["pair_exchange"] = max(res["pair_exchange"], abs(v - r[(c, d, a, b)]))
        res["bianchi"] = max(res["bianchi"], abs(v + r[(a, c, d, b)] + r[(a, d, b, c)]))
    return res


def trace_residual(t: TensorValue, inverse_metric: list) -> dict:
    """Max over all slot pairs of ``|g^{pq} T_{..p..q..}|``."""
    out = {}
    for s1, s2 in itertools.combinations(range(t.rank), 2):
        acc: dict = defaultdict(int)
        for key, v in t.components.items():
            p, q = key[s1], key[s2]
            gpq = inverse_metric[p][q]
            if gpq != 0:
                rest = tuple(k for i, k in enumerate(key) if i not in (s1, s2))
                acc[rest] += gpq * v
        out[f"{s1}{s2}"] = max((abs(v) for v in acc.values()), default=0)
    return out


def ricci_identity_residual(model: ModelData, ric: TensorValue, point: ChartPoint):
    """Max of ``|Ric - (2-n) f(t) dt (x) dt|`` over all components."""
    mode = point_mode(point)
    f_val = eval_jet(model.f, point.t, mode).value
    expected = {(0, 0): (2 - model.n) * f_val}
    keys = set(ric.components) | set(expected)
    return max((abs(ric[k] - expected.get(k, 0)) for k in keys), default=0)


@dataclass(frozen=True)
class OlszakReport:
    basis: list
    rank: int
    dperp_check: Scalar | None
    dn_check: Scalar | None = None
    null_check: Scalar | None = None
    note: str = ""

    @property
    def rank_one(self) -> bool:
        return self.rank == 1


def olszak_distribution(
    model: ModelData, point: ChartPoint, geometry: LocalGeometry | None = None, tol: float | None = None
) -> OlszakReport:
    """Kernel of ``v -> g(v,.) ^ W(v', v'', ., .)`` over all coordinate ``v', v''``.

    The wedge condition is assembled as one linear system in the components
    of ``v`` and solved by elimination. ``dperp_check`` measures how far
    ``g(v,.)`` is from a multiple of ``dt`` (so that the orthogonal complement
    is ``Ker dt``); ``dn_check`` how far ``v`` is from a multiple of ``d_n``.
    """
    geom = geometry or LocalGeometry(model, point, order=2)
    n = model.n
    w = geom.value("weyl").nonzero(tol)
    g = geom.metric_at
    zero = to_scalar(0, geom.mode)
    if not w:
        return OlszakReport([], 0, None, note="Weyl tensor vanishes: no Olszak distribution")
    # beta^{(e,f)}_{cd} = W_efcd; row for (e, f, a<c<d):
    # sum_b v^b (g_ab beta_cd + g_cb beta_da + g_db beta_ac)
    betas: dict = defaultdict(dict)
    for (e, f, c, d), v in w.items():
        betas[(e, f)][(c, d)] = v
    rows: dict = {}
    for ef, beta in betas.items():
        triples = set()
        for (c, d) in beta:
            for a in range(n):
                if len({a, c, d}) == 3:
                    triples.add(tuple(sorted((a, c, d))))
        for a, c, d in triples:
            row = [zero] * n
            for x, (y, z) in ((a, (c, d)), (c, (d, a)), (d, (a, c))):
                bv = beta.get((y, z), 0)
                if bv != 0:
                    for b in range(n):
                        if g[x][b] != 0:
                            row[b] += g[x][b] * bv
            if any(v != 0 for v in row):
                rows[(ef, a, c, d)] = row
    matrix = [rows[k] for k in sorted(rows)]
    basis = linalg.kernel(matrix, tol=tol) if matrix else linalg.identity(n, zero + 1)
    rank = len(basis)
    if rank != 1:
        return OlszakReport(basis, rank, None, note=f"kernel has dimension {rank}")
    v = basis[0]
    omega = [sum(g[a][b] * v[b] for b in range(n)) for a in range(n)]
    if omega[0] == 0:
        dperp = None
    else:
        dperp = max((abs(omega[a] / omega[0]) for a in range(1, n)), default=zero)
    last = v[n - 1]
    dn = None if last == 0 else max((abs(v[a] / last) for a in range(n - 1)), default=zero)
    null = abs(sum(omega[a] * v[a] for a in range(n)))
    return OlszakReport(basis, rank, dperp, dn, null)


# -- classification -----------------------------------------------------------


@dataclass(frozen=True)
class EcsVerdict:
    conformally_flat: bool
    locally_symmetric_locus: list
    is_ecs: bool
    olszak_rank: int
    nabla_r_zero: list = field(default_factory=list)
    samples: int = 0
    note: str = "on the sampled set"


def classify_ecs(model: ModelData, sample_points: list[ChartPoint], tol: float | None = None) -> EcsVerdict:
    """Pointwise classification; quantifiers range over ``sample_points`` only.

    ``locally_symmetric_locus`` lists sampled ``t`` with ``f'(t) = 0``;
    ``nabla_r_zero`` lists sampled ``t`` where ``nabla R`` vanishes, reported
    alongside for comparison.
    """
    if not sample_points:
        raise ValueError("at least one sample point is required")
    weyl_nonzero = False
    fdot_nonzero = False
    locus = []
    nabla_r_zero = []
    ranks = []
    for p in sample_points:
        geom = LocalGeometry(model, p, order=3)
        w = geom.value("weyl")
        if not w.is_zero(tol):
            weyl_nonzero = True
        fdot = eval_jet(model.f, p.t, geom.mode).d(1)
        if is_zero(fdot, tol):
            locus.append(p.t)
        else:
            fdot_nonzero = True
        if geom.covariant_derivative(geom.riemann).is_zero(tol):
            nabla_r_zero.append(p.t)
        ranks.append(olszak_distribution(model, p, geom, tol).rank)
    rank = max(set(ranks), key=ranks.count)
    return EcsVerdict(
        conformally_flat=not weyl_nonzero,
        locally_symmetric_locus=sorted(set(locus)),
        is_ecs=weyl_nonzero and fdot_nonzero,
        olszak_rank=rank,
        nabla_r_zero=sorted(set(nabla_r_zero)),
        samples=len(sample_points),
    )
