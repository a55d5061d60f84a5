"""Affine isometry witnesses, equivariance laws, periods and leaf holonomy.

A witness ``(q, p, c, B)`` acts on the chart by
``(t, s, x) -> (q t + p, s / q + c, B x)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

from . import linalg
from .model import ChartError, ChartPoint, ModelData, metric_matrix, point_mode
from .scalar import (
    EXACT,
    FLOAT,
    Abs,
    Add,
    Const,
    EcsLabError,
    ExactnessError,
    Expr,
    Mul,
    Neg,
    Pow,
    RationalPow,
    Scalar,
    SingularPointError,
    Sub,
    Var,
    compile_float,
    differentiate,
    eval_jet,
    evaluate,
    float_tolerance,
    is_transcendental,
    is_zero,
    singular_points,
    to_scalar,
    POLE,
)


class NonzeroPeriodError(EcsLabError):
    pass


class DegenerateSpaceError(EcsLabError):
    pass


@dataclass(frozen=True)
class IsometryWitness:
    q: Scalar
    p: Scalar
    c: Scalar
    b: linalg.LinearIsometry

    def __post_init__(self):
        if not self.q > 0:
            raise ValueError("witness multiplier q must be positive")

    def act_t(self, t):
        return self.q * t + self.p

    def act(self, point: ChartPoint) -> ChartPoint:
        mode = point_mode(point)
        q, p, c = (to_scalar(v, mode) for v in (self.q, self.p, self.c))
        bm = [[to_scalar(v, mode) for v in row] for row in self.b.mat]
        return ChartPoint(q * point.t + p, point.s / q + c, tuple(linalg.matvec(bm, point.x)))

    def jacobian(self, n: int, mode: str) -> list:
        """``J[c][a] = d(gamma^c)/d(x^a)`` in the coordinates ``(t, x, s/2)``."""
        q = to_scalar(self.q, mode)
        zero = q * 0
        j = [[zero] * n for _ in range(n)]
        j[0][0] = q
        for i, row in enumerate(self.b.mat):
            for k, v in enumerate(row):
                j[i + 1][k + 1] = to_scalar(v, mode)
        j[n - 1][n - 1] = 1 / q
        return j

    def as_dict(self) -> dict:
        return {
            "q": str(self.q),
            "p": str(self.p),
            "c": str(self.c),
            "B": [[str(v) for v in row] for row in self.b.mat],
        }


def identity_witness(dim_v: int) -> IsometryWitness:
    one = Fraction(1)
    return IsometryWitness(one, Fraction(0), Fraction(0), linalg.LinearIsometry.of(linalg.identity(dim_v)))


@dataclass(frozen=True)
class DeckGroup:
    generators: tuple = ()


def verify_isometry(model: ModelData, witness: IsometryWitness, sample_points: list[ChartPoint]) -> Scalar:
    """Max residual of ``gamma^* g - g`` over the sample points."""
    worst = None
    for point in sample_points:
        mode = point_mode(point)
        image = witness.act(point)
        if not model.contains(image.t):
            raise ChartError(f"witness maps t = {point.t} to {image.t}, outside I")
        j = witness.jacobian(model.n, mode)
        pulled = linalg.matmul(linalg.matmul(linalg.transpose(j), metric_matrix(model, image)), j)
        r = linalg.max_abs(linalg.matsub(pulled, metric_matrix(model, point)))
        worst = r if worst is None else max(worst, r)
    return worst if worst is not None else Fraction(0)


def gradient_t_multiplier(model: ModelData, witness: IsometryWitness, point: ChartPoint) -> Scalar:
    """Multiplier ``k`` with ``gamma^* w = k w`` for ``w = grad t``.

    ``w`` is read off ``g^-1 dt`` at the point and at its image; the pullback
    of a vector field is ``J^-1 w(gamma P)``.
    """
    mode = point_mode(point)
    n = model.n
    image = witness.act(point)

    def grad_t(p):
        inv = linalg.inverse(metric_matrix(model, p))
        return [inv[a][0] for a in range(n)]

    w_here = grad_t(point)
    jinv = linalg.inverse(witness.jacobian(n, mode))
    pulled = linalg.matvec(jinv, grad_t(image))
    k = next(pulled[a] / w_here[a] for a in range(n) if w_here[a] != 0)
    if any(not is_zero(pulled[a] - k * w_here[a]) for a in range(n)):
        raise ArithmeticError("pullback of grad t is not proportional to grad t")
    return k


# -- function space F -------------------------------------------------------


@dataclass(frozen=True)
class FFunction:
    """Candidate member of F: a function of ``t`` (so ``chi dt`` is closed)."""

    expr: Expr
    label: str = ""

    def value(self, t, mode: str):
        return evaluate(self.expr, t, mode)


def standard_members(model: ModelData) -> dict[str, FFunction]:
    """``|f|^(1/2)`` and ``|f'|^(1/3)``."""
    half = RationalPow(Abs(model.f), Fraction(1, 2))
    third = RationalPow(Abs(differentiate(model.f)), Fraction(1, 3))
    return {"|f|^(1/2)": FFunction(half, "|f|^(1/2)"), "|f'|^(1/3)": FFunction(third, "|f'|^(1/3)")}


@dataclass(frozen=True)
class LawResidual:
    law: str
    residual: Scalar
    mode: str
    tolerance: float | None

    @property
    def ok(self) -> bool:
        if self.mode == EXACT:
            return self.residual == 0
        return abs(self.residual) <= self.tolerance


def _scaling_residual(fn: Callable, witness: IsometryWitness, exponent: int, samples, mode: str):
    q = to_scalar(witness.q, mode)
    p = to_scalar(witness.p, mode)
    worst = q * 0
    for t in samples:
        t = to_scalar(t, mode)
        lhs = fn(q * t + p)
        rhs = q**exponent * fn(t)
        worst = max(worst, abs(lhs - rhs))
    return worst


def law_residual(label: str, fn_of_mode, witness, exponent: int, samples, exact_ok: bool, tol=None) -> LawResidual:
    """Residual of ``chi(q t + p) = q^exponent chi(t)``; exact if possible."""
    if exact_ok:
        try:
            return LawResidual(label, _scaling_residual(fn_of_mode(EXACT), witness, exponent, samples, EXACT), EXACT, None)
        except ExactnessError:
            pass
    tol = float_tolerance() if tol is None else tol
    res = _scaling_residual(fn_of_mode(FLOAT), witness, exponent, samples, FLOAT)
    return LawResidual(label, res, FLOAT, tol)


def check_equivariance(
    model: ModelData, witness: IsometryWitness, samples, extra: dict[str, tuple[Expr, int]] | None = None
) -> list[LawResidual]:
    """Residuals of ``f o gamma = q^-2 f``, ``f' o gamma = q^-3 f'`` and of
    ``chi o gamma = q^-1 chi`` for the standard members of F.

    ``extra`` maps labels to ``(expr, a)`` for further laws ``chi o gamma = q^a chi``.
    """
    f = model.f
    exact_ok = not is_transcendental(f) and isinstance(witness.q, Fraction)
    out = [
        law_residual("f o gamma = q^-2 f", lambda m: (lambda t: evaluate(f, t, m)), witness, -2, samples, exact_ok),
        law_residual(
            "f' o gamma = q^-3 f'", lambda m: (lambda t: eval_jet(f, t, m).d(1)), witness, -3, samples, exact_ok
        ),
    ]
    members = {k: (v.expr, -1) for k, v in standard_members(model).items()}
    members.update(extra or {})
    for label, (expr, a) in members.items():
        out.append(
            law_residual(
                f"{label} o gamma = q^{a} {label}",
                lambda m, e=expr: (lambda t: evaluate(e, t, m)),
                witness,
                a,
                samples,
                exact_ok and not is_transcendental(expr),
            )
        )
    return out


def derivative_law(expr: Expr, witness: IsometryWitness, a: int, samples, tol=None) -> tuple[LawResidual, LawResidual]:
    """If ``chi o gamma = q^a chi`` then ``chi' o gamma = q^(a-1) chi'``.

    Returns the residuals of the hypothesis and of the conclusion, the
    derivative taken from jets.
    """
    exact_ok = not is_transcendental(expr) and isinstance(witness.q, Fraction)
    hyp = law_residual("chi o gamma = q^a chi", lambda m: (lambda t: evaluate(expr, t, m)), witness, a, samples, exact_ok, tol)
    concl = law_residual(
        "chi' o gamma = q^(a-1) chi'",
        lambda m: (lambda t: eval_jet(expr, t, m).d(1)),
        witness,
        a - 1,
        samples,
        exact_ok,
        tol,
    )
    return hyp, concl


# -- quadrature and periods ----------------------------------------------------


def adaptive_simpson(fn: Callable[[float], float], a: float, b: float, tol: float = 1e-10, max_depth: int = 60) -> float:
    """Adaptive Simpson rule with Richardson correction, absolute tolerance ``tol``."""
    if a == b:
        return 0.0

    def simpson(fa, fm, fb, h):
        return h / 6.0 * (fa + 4.0 * fm + fb)

    fa, fb = fn(a), fn(b)
    m = 0.5 * (a + b)
    fm = fn(m)
    total = 0.0
    stack = [(a, b, fa, fm, fb, simpson(fa, fm, fb, b - a), tol, 0)]
    while stack:
        a0, b0, fa0, fm0, fb0, whole, eps, depth = stack.pop()
        m0 = 0.5 * (a0 + b0)
        lm, rm = 0.5 * (a0 + m0), 0.5 * (m0 + b0)
        flm, frm = fn(lm), fn(rm)
        left = simpson(fa0, flm, fm0, m0 - a0)
        right = simpson(fm0, frm, fb0, b0 - m0)
        delta = left + right - whole
        if depth >= max_depth or abs(delta) <= 15.0 * eps:
            total += left + right + delta / 15.0
        else:
            stack.append((a0, m0, fa0, flm, fm0, left, eps / 2.0, depth + 1))
            stack.append((m0, b0, fm0, frm, fb0, right, eps / 2.0, depth + 1))
    return total


def antiderivative(expr: Expr) -> dict | None:
    """Exact antiderivative for sums of ``c t^k`` with ``k != -1``.

    Returns ``{k+1: c/(k+1)}`` or None when the expression is outside that
    family.
    """
    terms = _monomials(expr)
    if terms is None or -1 in terms:
        return None
    return {k + 1: c / (k + 1) for k, c in terms.items() if c != 0}


def _monomials(expr: Expr) -> dict | None:
    if isinstance(expr, Const):
        return {0: expr.value}
    if isinstance(expr, Var):
        return {1: Fraction(1)}
    if isinstance(expr, Neg):
        inner = _monomials(expr.arg)
        return None if inner is None else {k: -c for k, c in inner.items()}
    if isinstance(expr, (Add, Sub)):
        a, b = _monomials(expr.left), _monomials(expr.right)
        if a is None or b is None:
            return None
        sign = 1 if isinstance(expr, Add) else -1
        out = dict(a)
        for k, c in b.items():
            out[k] = out.get(k, 0) + sign * c
        return out
    if isinstance(expr, Mul):
        a, b = _monomials(expr.left), _monomials(expr.right)
        if a is None or b is None:
            return None
        out: dict = {}
        for k1, c1 in a.items():
            for k2, c2 in b.items():
                out[k1 + k2] = out.get(k1 + k2, 0) + c1 * c2
        return out
    if isinstance(expr, Pow):
        base = _monomials(expr.base)
        if base is None or len(base) != 1:
            return None
        (k, c), = base.items()
        if c == 0:
            return None
        return {k * expr.exponent: c**expr.exponent}
    return None


def _eval_antiderivative(anti: dict, t: Fraction) -> Fraction:
    return sum(c * t**k for k, c in anti.items())


def integrate(chi: Expr, a, b, tol: float = 1e-10):
    """``int_a^b chi dt``; exact when an antiderivative is known, else adaptive Simpson.

    Poles inside ``[a, b]`` raise :class:`SingularPointError`; kinks split
    the interval.
    """
    lo, hi = (a, b) if a <= b else (b, a)
    sign = 1 if a <= b else -1
    for t, kind in singular_points(chi, float(lo), float(hi), grid=400):
        if kind == POLE and float(lo) <= t <= float(hi):
            raise SingularPointError(f"integrand singular at t = {t:.12g}")
    anti = antiderivative(chi)
    if anti is not None and isinstance(a, Fraction) and isinstance(b, Fraction):
        return _eval_antiderivative(anti, b) - _eval_antiderivative(anti, a)
    fn = compile_float(chi)
    cuts = [float(lo)]
    cuts += [t for t, kind in singular_points(chi, float(lo), float(hi), grid=400) if float(lo) < t < float(hi)]
    cuts.append(float(hi))
    pieces = len(cuts) - 1
    return sign * sum(adaptive_simpson(fn, cuts[i], cuts[i + 1], tol / pieces) for i in range(pieces))


def period_integral(chi: FFunction, witness: IsometryWitness, t0, tol: float = 1e-10):
    """Integral of ``chi dt`` over the fundamental segment ``[t0, q t0 + p]``.

    This is the value of the class of ``chi dt`` on the loop generated by the
    witness; it vanishes exactly when the class dies on that loop.
    """
    return integrate(chi.expr, t0, witness.act_t(t0), tol)


@dataclass
class InvariantPrimitive:
    mu: Callable
    residual: float
    nonconstant: bool
    samples: list
    period: Scalar

    @property
    def constant(self) -> bool:
        return not self.nonconstant


def construct_invariant_primitive(
    chi: FFunction, witness: IsometryWitness, t0, samples: int = 50, tol: float = 1e-9
) -> InvariantPrimitive:
    """``mu(t) = int_{t0}^t chi`` together with the check ``mu o gamma = mu``.

    Raises :class:`NonzeroPeriodError` if the period of ``chi dt`` does not
    vanish, since ``mu`` then cannot descend to the quotient.
    """
    period = period_integral(chi, witness, t0)
    if abs(period) > tol:
        raise NonzeroPeriodError(f"period of chi dt is {float(period):.12g}, not 0")

    def mu(t):
        return integrate(chi.expr, t0, t)

    start = float(t0)
    end = float(witness.act_t(t0))
    ts = [start + (end - start) * k / samples for k in range(samples)]
    residual = 0.0
    values = []
    for t in ts:
        here = float(mu(t))
        there = float(mu(float(witness.act_t(t))))
        values.append(here)
        residual = max(residual, abs(there - here))
    nonconstant = max(values) - min(values) > tol
    return InvariantPrimitive(mu, residual, nonconstant, ts, period)


# -- leaf holonomy --------------------------------------------------------------


@dataclass(frozen=True)
class HolonomyResult:
    multipliers: tuple
    classification: str
    certificate: str
    words: int


TRIVIAL = "trivial"
INFINITE = "infinite"
INCONCLUSIVE = "inconclusive"


def _compose(f, g):
    # (f o g)(t) = f(g(t))
    return (f[0] * g[0], f[0] * g[1] + f[1])


def holonomy_group(deck: DeckGroup, t0, max_word_length: int = 6, interval=None) -> HolonomyResult:
    """Multipliers ``q`` of reduced words whose affine action fixes ``t0``.

    "infinite" as soon as some ``q != 1`` turns up (it generates an infinite
    subgroup of ``(0, inf)``); "trivial" only under a certificate: no
    generators, all generators translations, or a single dilation whose fixed
    point lies outside ``interval``; "inconclusive" otherwise.
    """
    t0 = Fraction(t0)
    gens = [(Fraction(g.q), Fraction(g.p)) for g in deck.generators]
    letters = []
    for i, (q, p) in enumerate(gens):
        letters.append((i, 1, (q, p)))
        letters.append((i, -1, (1 / q, -p / q)))
    found = {Fraction(1)}
    frontier = [((), (Fraction(1), Fraction(0)))]
    words = 0
    for _ in range(max_word_length):
        nxt = []
        for word, amap in frontier:
            for idx, sgn, lm in letters:
                if word and word[-1] == (idx, -sgn):
                    continue
                new = _compose(lm, amap)
                words += 1
                if new[0] * t0 + new[1] == t0:
                    found.add(new[0])
                nxt.append((word + ((idx, sgn),), new))
        frontier = nxt
    multipliers = tuple(sorted(found))
    if any(q != 1 for q in multipliers):
        return HolonomyResult(multipliers, INFINITE, f"word with q != 1 fixes t0 = {t0}", words)
    if not gens:
        return HolonomyResult(multipliers, TRIVIAL, "no generators", words)
    if all(q == 1 for q, _ in gens):
        return HolonomyResult(multipliers, TRIVIAL, "all generators are translations", words)
    if len(gens) == 1 and interval is not None:
        q, p = gens[0]
        fixed = p / (1 - q)
        lo, hi = interval
        if not lo < fixed < hi:
            return HolonomyResult(
                multipliers, TRIVIAL, f"single dilation with fixed point {fixed} outside I", words
            )
    return HolonomyResult(multipliers, INCONCLUSIVE, "only q = 1 found, no certificate applies", words)


# -- Lemma-style basis construction ---------------------------------------------


def geometric_mean(*vectors):
    """Pointwise geometric mean of absolute values; exact when the root is rational."""
    from .scalar import exact_power

    m = len(vectors)
    out = []
    for vals in zip(*vectors):
        prod = 1
        for v in vals:
            prod *= abs(v)
        if prod == 0:
            out.append(Fraction(0) if all(isinstance(v, Fraction) for v in vals) else 0.0)
            continue
        if isinstance(prod, Fraction):
            root = exact_power(prod, Fraction(1, m))
            out.append(root if root is not None else float(prod) ** (1.0 / m))
        else:
            out.append(float(prod) ** (1.0 / m))
    return out


@dataclass
class SampledFunctionSpace:
    labels: list
    basis: list
    pi: Callable = geometric_mean

    @property
    def dim(self) -> int:
        return len(self.basis)


@dataclass
class BasisResult:
    x0: list
    partition: list
    basis: list
    points: list
    evaluation: list = field(default_factory=list)


def _in_span(basis: list, v: list) -> bool:
    return linalg.rank(basis + [v]) == linalg.rank(basis)


def basis_construct(space: SampledFunctionSpace) -> BasisResult:
    """Basis of F with ``chi_j > 0`` exactly on ``X_j`` and ``0`` elsewhere.

    Picks evaluation points forming a dual basis, builds ``sigma_j`` that are
    positive at ``x_j`` and negative at the other chosen points, and sets
    ``chi_j = Pi(sigma_1^-, ..., sigma_j^+, ..., sigma_m^-)``.
    """
    basis = [[Fraction(v) if not isinstance(v, float) else v for v in vec] for vec in space.basis]
    m = len(basis)
    if m == 0:
        raise DegenerateSpaceError("F has dimension 0")
    if linalg.rank(basis) != m:
        raise DegenerateSpaceError("spanning vectors are linearly dependent")
    for vec in basis:
        if not _in_span(basis, [abs(v) for v in vec]):
            raise DegenerateSpaceError("F is not closed under absolute value")
    # evaluation points: pivot columns of the basis matrix
    _, pivots = linalg.row_reduce(basis)
    if len(pivots) < m:
        raise DegenerateSpaceError("no m points with independent evaluations")
    points = pivots[:m]
    evals = [[vec[x] for vec in basis] for x in points]  # evals[i][k] = F_k(x_i)
    sigmas = []
    for j in range(m):
        target = [Fraction(1) if i == j else Fraction(-1) for i in range(m)]
        coeffs = linalg.matvec(linalg.inverse(evals), target)
        sigmas.append([sum(c * vec[x] for c, vec in zip(coeffs, basis)) for x in range(len(space.labels))])
    for s in sigmas:
        if not _in_span(basis, [abs(v) for v in s]):
            raise DegenerateSpaceError("F is not closed under absolute value")
    plus = [[(abs(v) + v) / 2 for v in s] for s in sigmas]
    minus = [[(abs(v) - v) / 2 for v in s] for s in sigmas]
    chis = []
    for j in range(m):
        args = [plus[i] if i == j else minus[i] for i in range(m)]
        out = space.pi(*args)
        zero_set = {x for x in range(len(space.labels)) if any(a[x] == 0 for a in args)}
        if any(v < 0 for v in out) or {x for x, v in enumerate(out) if v == 0} != zero_set:
            raise DegenerateSpaceError("Pi violates its zero-set contract")
        chis.append(out)
    blocks = [[space.labels[x] for x, v in enumerate(chi) if v > 0] for chi in chis]
    covered = {lab for block in blocks for lab in block}
    x0 = [lab for lab in space.labels if lab not in covered]
    evaluation = [[chi[x] for chi in chis] for x in points]
    return BasisResult(x0, blocks, chis, [space.labels[x] for x in points], evaluation)
