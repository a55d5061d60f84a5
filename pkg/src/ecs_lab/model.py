"""The Roter metric ``g = kappa dt^2 + dt ds + delta`` on ``I x R x V``.

Coordinates are ``x^1 = t``, ``x^2 .. x^(n-1)`` linear on ``V`` and
``x^n = s/2``. Internally indices are 0-based: ``t`` is 0, the ``V``
coordinates are ``1 .. n-2`` and ``x^n`` is ``n-1``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property

from . import linalg
from .scalar import (
    EXACT,
    FLOAT,
    EcsLabError,
    Expr,
    Jet,
    Scalar,
    SingularPointError,
    Var,
    eval_jet,
    is_transcendental,
    to_scalar,
)
from .series import Series

INF = math.inf


class AdmissibilityError(EcsLabError):
    """Model data violating one of the defining conditions (clause named)."""

    def __init__(self, clause: str, detail: str = ""):
        super().__init__(f"{clause}: {detail}" if detail else clause)
        self.clause = clause


class ChartError(EcsLabError):
    pass


def _contains_var(expr: Expr) -> bool:
    return isinstance(expr, Var) or any(_contains_var(c) for c in expr.children())


def sample_interior(lo, hi, count: int) -> list[Fraction]:
    """``count`` rational points strictly inside ``(lo, hi)``."""
    if lo == -INF and hi == INF:
        lo, hi = Fraction(-4), Fraction(4)
    elif lo == -INF:
        lo = Fraction(hi) - 4
    elif hi == INF:
        hi = Fraction(lo) + 4
    lo, hi = Fraction(lo), Fraction(hi)
    return [lo + (hi - lo) * Fraction(k, count + 1) for k in range(1, count + 1)]


@dataclass(frozen=True)
class ModelData:
    """Data ``(n, <.,.>, A, f, I)``; build it with :func:`make_model`."""

    n: int
    inner: linalg.InnerProduct
    a: tuple
    f: Expr
    lo: Scalar
    hi: Scalar
    f_text: str = ""
    probe: bool = False
    name: str = ""

    @property
    def dim_v(self) -> int:
        return self.n - 2

    @property
    def gram(self) -> list:
        return self.inner.matrix

    @property
    def a_matrix(self) -> list:
        return [list(row) for row in self.a]

    @property
    def exact_only(self) -> bool:
        return not is_transcendental(self.f)

    def contains(self, t) -> bool:
        return self.lo < t < self.hi

    @cached_property
    def _forms(self) -> dict:
        g = self.gram
        ga = linalg.matmul(g, self.a_matrix)
        m = len(g)
        sym = [[(ga[i][j] + ga[j][i]) / 2 for j in range(m)] for i in range(m)]
        return {
            EXACT: (g, sym),
            FLOAT: ([[float(x) for x in r] for r in g], [[float(x) for x in r] for r in sym]),
        }

    def forms(self, mode: str):
        """``(G, S)`` with ``<x,x> = x^T G x`` and ``<Ax,x> = x^T S x``."""
        return self._forms[mode]


def make_model(
    n: int,
    gram,
    a,
    f: Expr,
    interval=(0, INF),
    *,
    f_text: str = "",
    probe: bool = False,
    name: str = "",
) -> ModelData:
    """Validate model data; raises :class:`AdmissibilityError` naming the clause.

    ``probe=True`` admits ``A = 0`` and constant ``f`` (local-symmetry and
    flatness probes); every other condition is still enforced.
    """
    if n < 4:
        raise AdmissibilityError("integer n >= 4", f"got n = {n}")
    gram = [[Fraction(x) for x in row] for row in gram]
    a = [[Fraction(x) for x in row] for row in a]
    if linalg.shape(gram) != (n - 2, n - 2):
        raise AdmissibilityError("vector space V of dimension n-2", "Gram matrix has the wrong size")
    try:
        inner = linalg.validate_inner_product(gram)
    except linalg.DegenerateFormError as exc:
        raise AdmissibilityError("pseudo-Euclidean inner product", str(exc)) from None
    if linalg.shape(a) != (n - 2, n - 2):
        raise AdmissibilityError("endomorphism A of V", "matrix has the wrong size")
    report = linalg.validate_endomorphism(gram, a)
    if not report.traceless:
        raise AdmissibilityError("traceless", "trace(A) != 0")
    if not report.self_adjoint:
        raise AdmissibilityError("self-adjoint", "G A is not symmetric")
    if not report.nonzero and not probe:
        raise AdmissibilityError("nonzero", "A = 0")
    lo, hi = interval
    lo = lo if lo in (-INF, INF) else Fraction(lo)
    hi = hi if hi in (-INF, INF) else Fraction(hi)
    if not lo < hi:
        raise AdmissibilityError("open interval I", f"({lo}, {hi}) is empty")
    model = ModelData(n, inner, tuple(tuple(r) for r in a), f, lo, hi, f_text, probe, name)
    if not probe and not _is_nonconstant(model):
        raise AdmissibilityError("nonconstant function f", f"f = {f} looks constant on I")
    return model


def _is_nonconstant(model: ModelData) -> bool:
    if not _contains_var(model.f):
        return False
    mode = EXACT if model.exact_only else FLOAT
    for t in sample_interior(model.lo, model.hi, 7):
        try:
            jet = eval_jet(model.f, t, mode)
        except (SingularPointError, ArithmeticError):
            continue
        except EcsLabError:
            jet = eval_jet(model.f, t, FLOAT)
        if any(d != 0 for d in jet.derivatives[1:]):
            return True
    return False


@dataclass(frozen=True)
class ChartPoint:
    t: Scalar
    s: Scalar
    x: tuple

    def coords(self) -> tuple:
        """Coordinates ``(x^1, ..., x^n)`` with ``x^n = s/2``."""
        return (self.t,) + tuple(self.x) + (self.s / 2,)

    def in_mode(self, mode: str) -> "ChartPoint":
        return ChartPoint(
            to_scalar(self.t, mode), to_scalar(self.s, mode), tuple(to_scalar(v, mode) for v in self.x)
        )

    def shifted(self, index: int, h) -> "ChartPoint":
        """Move coordinate ``x^(index+1)`` by ``h`` (``index`` 0-based)."""
        n = len(self.x) + 2
        if index == 0:
            return ChartPoint(self.t + h, self.s, self.x)
        if index == n - 1:
            return ChartPoint(self.t, self.s + 2 * h, self.x)
        x = list(self.x)
        x[index - 1] += h
        return ChartPoint(self.t, self.s, tuple(x))


def make_point(model: ModelData, t, s, x, mode: str = EXACT) -> ChartPoint:
    point = ChartPoint(to_scalar(t, mode), to_scalar(s, mode), tuple(to_scalar(v, mode) for v in x))
    check_point(model, point)
    return point


def check_point(model: ModelData, point: ChartPoint) -> None:
    if len(point.x) != model.dim_v:
        raise ChartError(f"expected {model.dim_v} V-coordinates, got {len(point.x)}")
    if not model.contains(point.t):
        raise ChartError(f"t = {point.t} is outside I = ({model.lo}, {model.hi})")


def point_mode(point: ChartPoint) -> str:
    return FLOAT if isinstance(point.t, float) else EXACT


def _quad(m, x, y):
    return sum(x[i] * m[i][j] * y[j] for i in range(len(x)) for j in range(len(y)))


def kappa(model: ModelData, point: ChartPoint) -> Jet:
    """``kappa = f(t)<x,x> + <Ax,x>`` as a jet in ``t`` at fixed ``s, x``."""
    mode = point_mode(point)
    check_point(model, point)
    g, sym = model.forms(mode)
    x = point.x
    return eval_jet(model.f, point.t, mode) * _quad(g, x, x) + _quad(sym, x, x)


def kappa_gradient(model: ModelData, point: ChartPoint) -> list:
    """``[d_1 kappa, d_2 kappa, ..., d_n kappa]`` at the point (``d_n kappa = 0``)."""
    mode = point_mode(point)
    g, sym = model.forms(mode)
    fj = eval_jet(model.f, point.t, mode)
    x = point.x
    m = len(x)
    dt = fj.d(1) * _quad(g, x, x)
    dx = [2 * fj.value * sum(g[i][j] * x[j] for j in range(m)) + 2 * sum(sym[i][j] * x[j] for j in range(m)) for i in range(m)]
    return [dt] + dx + [dt * 0]


@dataclass(frozen=True)
class MetricValue:
    components: tuple
    inverse: tuple

    def matrix(self) -> list:
        return [list(r) for r in self.components]

    def inverse_matrix(self) -> list:
        return [list(r) for r in self.inverse]


def metric_matrix(model: ModelData, point: ChartPoint) -> list:
    mode = point_mode(point)
    n = model.n
    zero = to_scalar(0, mode)
    g = [[zero] * n for _ in range(n)]
    g[0][0] = kappa(model, point).value
    g[0][n - 1] = g[n - 1][0] = zero + 1
    gv, _ = model.forms(mode)
    for i in range(n - 2):
        for j in range(n - 2):
            g[i + 1][j + 1] = gv[i][j]
    return g


def metric_at(model: ModelData, point: ChartPoint) -> MetricValue:
    g = metric_matrix(model, point)
    inv = linalg.inverse(g)
    return MetricValue(tuple(tuple(r) for r in g), tuple(tuple(r) for r in inv))


def metric_signature(model: ModelData, point: ChartPoint) -> tuple[int, int]:
    g = metric_matrix(model, point)
    if point_mode(point) == FLOAT:
        g = [[Fraction(v) for v in row] for row in g]
    return linalg.validate_inner_product(g).signature


def christoffels_closed(model: ModelData, point: ChartPoint) -> dict:
    """Nonzero Christoffel symbols ``{(k, i, j): value}`` from the closed form.

    Only ``Gamma^n_11 = d_1 kappa/2``, ``Gamma^i_11 = -g^ij d_j kappa/2`` and
    ``Gamma^n_1i = Gamma^n_i1 = d_i kappa/2`` can be nonzero.
    """
    mode = point_mode(point)
    n = model.n
    grad = kappa_gradient(model, point)
    gv, _ = model.forms(mode)
    ginv = linalg.inverse(gv)
    out = {}

    def put(key, value):
        if value != 0:
            out[key] = value

    last = n - 1
    put((last, 0, 0), grad[0] / 2)
    for i in range(1, n - 1):
        put((i, 0, 0), -sum(ginv[i - 1][j - 1] * grad[j] for j in range(1, n - 1)) / 2)
        put((last, 0, i), grad[i] / 2)
        put((last, i, 0), grad[i] / 2)
    return out


def metric_series(model: ModelData, point: ChartPoint, order: int) -> dict:
    """Taylor expansion of every nonzero ``g_ab`` around ``point`` up to ``order``.

    The ``t`` dependence comes from the jet of ``f``; the ``x`` dependence is
    the exact quadratic form; nothing depends on ``s``.
    """
    mode = point_mode(point)
    check_point(model, point)
    n = model.n
    m = n - 2
    gv, sym = model.forms(mode)
    x = point.x
    fj = eval_jet(model.f, point.t, mode)
    f_series = Series({(0,) * k: c for k, c in enumerate(fj.coeffs) if k <= order}, order)

    def form_series(mat):
        terms = {(): _quad(mat, x, x)}
        for i in range(m):
            terms[(i + 1,)] = 2 * sum(mat[i][j] * x[j] for j in range(m))
            terms[(i + 1, i + 1)] = mat[i][i]
            for j in range(i + 1, m):
                terms[(i + 1, j + 1)] = mat[i][j] + mat[j][i]
        return Series(terms)

    kappa_s = (f_series * form_series(gv) + form_series(sym)).truncate(order)
    one = to_scalar(1, mode)
    g = {(0, 0): kappa_s, (0, n - 1): Series.const(one), (n - 1, 0): Series.const(one)}
    for i in range(m):
        for j in range(m):
            if gv[i][j] != 0:
                g[(i + 1, j + 1)] = Series.const(gv[i][j])
    return g
