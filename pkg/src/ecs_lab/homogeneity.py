"""Local-homogeneity criterion and homogeneous-model isometry witnesses.

Writing ``h = |f|^(-1/2)`` one has ``h'' = -(1/4)|f|^(-5/2) (2 f f'' - 3 f'^2)``,
so where ``f != 0`` the criterion ``h'' = 0`` is the polynomial identity
``2 f f'' = 3 f'^2``. That form is what gets tested in exact mode.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from . import linalg
from .model import INF, ModelData, make_point, sample_interior, make_model
from .scalar import (
    EXACT,
    FLOAT,
    Const,
    Div,
    EcsLabError,
    ExactnessError,
    Expr,
    Mul,
    Neg,
    Pow,
    SingularPointError,
    Var,
    eval_jet,
    evaluate,
    float_tolerance,
    is_transcendental,
)
from .symmetry import IsometryWitness, _monomials, verify_isometry


class HomogeneityError(EcsLabError):
    pass


@dataclass(frozen=True)
class HomogeneityVerdict:
    """Outcome of the criterion on a finite sample of ``I``.

    ``criterion_ii``: no sampled zero of ``f`` and ``h'' = 0`` everywhere
    sampled. ``criterion_iii``: ``h'' = 0`` at every sample where ``f != 0``.
    """

    f_vanishes: tuple
    criterion_ii: bool
    criterion_iii: bool
    canonical: tuple | None
    mode: str
    max_residual: float
    samples: int
    label: str = "criterion"

    def as_dict(self) -> dict:
        return {
            "f_vanishes": [str(t) for t in self.f_vanishes],
            "criterion_ii": self.criterion_ii,
            "criterion_iii": self.criterion_iii,
            "canonical": None if self.canonical is None else {"eps": str(self.canonical[0]), "b": str(self.canonical[1])},
            "mode": self.mode,
            "max_abs_h_second_derivative": self.max_residual,
            "samples": self.samples,
            "label": self.label,
        }


def h_second_derivative(f: Expr, t, mode: str):
    """``(|f|^(-1/2))''`` at ``t`` together with the reduced residual ``2ff'' - 3f'^2``.

    Returns ``(None, None)`` where ``f`` vanishes.
    """
    jet = eval_jet(f, t, mode)
    f0, f1, f2 = jet.value, jet.d(1), jet.d(2)
    if f0 == 0:
        return None, None
    reduced = 2 * f0 * f2 - 3 * f1 * f1
    h2 = -0.25 * abs(float(f0)) ** -2.5 * float(reduced)
    return h2, reduced


def _sign_change_zeros(f: Expr, samples: list) -> list:
    """Zeros of ``f`` bracketed by consecutive samples (poles excluded)."""
    out = []
    ts = sorted(float(t) for t in samples)
    vals = []
    for t in ts:
        try:
            vals.append(float(evaluate(f, t, FLOAT)))
        except (SingularPointError, ZeroDivisionError, ValueError, OverflowError):
            vals.append(None)
    for (a, fa), (b, fb) in zip(zip(ts, vals), zip(ts[1:], vals[1:])):
        if fa is None or fb is None or fa == 0 or fb == 0 or (fa > 0) == (fb > 0):
            continue
        lo, hi, flo = a, b, fa
        for _ in range(200):
            m = 0.5 * (lo + hi)
            try:
                fm = float(evaluate(f, m, FLOAT))
            except (SingularPointError, ZeroDivisionError):
                lo = None
                break
            if fm == 0:
                lo = hi = m
                break
            if (fm > 0) == (flo > 0):
                lo, flo = m, fm
            else:
                hi = m
        if lo is None:
            continue
        m = 0.5 * (lo + hi)
        try:
            if abs(float(evaluate(f, m, FLOAT))) < 1e-8:
                out.append(m)
        except SingularPointError:
            pass
    return out


def homogeneity_criterion(f: Expr, interval, samples, mode: str = EXACT) -> HomogeneityVerdict:
    """Evaluate the criterion at ``samples`` (all inside ``interval``).

    Exact mode falls back to float mode when ``f`` has no exact evaluation.
    """
    samples = list(samples)
    if not samples:
        raise HomogeneityError("no sample points")
    lo, hi = interval
    for t in samples:
        if not lo < t < hi:
            raise HomogeneityError(f"sample t = {t} outside I")
    if mode == EXACT and is_transcendental(f):
        mode = FLOAT
    tol = float_tolerance()
    zeros = []
    flags = []
    worst = 0.0
    for t in samples:
        try:
            h2, reduced = h_second_derivative(f, t, mode)
        except ExactnessError:
            mode = FLOAT
            h2, reduced = h_second_derivative(f, t, mode)
        if h2 is None:
            zeros.append(t)
            continue
        worst = max(worst, abs(h2))
        flags.append(reduced == 0 if mode == EXACT else abs(h2) <= tol)
    if not flags:
        raise HomogeneityError("every sample is a zero of f")
    zeros += _sign_change_zeros(f, samples)
    iii = all(flags)
    ii = iii and not zeros
    canon = detect_canonical(f, interval)
    return HomogeneityVerdict(tuple(zeros), ii, iii, canon, mode, worst, len(samples))


# -- canonical form eps (t - b)^-2 ------------------------------------------------


def _linear(expr: Expr):
    """``(a, c)`` with ``expr = a t + c`` and ``a != 0``, else None."""
    mono = _monomials(expr)
    if mono is None or set(k for k, v in mono.items() if v != 0) - {0, 1}:
        return None
    a = mono.get(1, 0)
    if a == 0:
        return None
    return Fraction(a), Fraction(mono.get(0, 0))


def _const(expr: Expr):
    mono = _monomials(expr)
    if mono is None or any(k != 0 and v != 0 for k, v in mono.items()):
        return None
    return Fraction(mono.get(0, 0))


def _structural(expr: Expr):
    """Match ``eps (t - b)^-2`` up to constant factors; returns ``(eps, b)`` or None."""
    if isinstance(expr, Pow) and expr.exponent == -2:
        lin = _linear(expr.base)
        if lin is None:
            return None
        a, c = lin
        return 1 / (a * a), -c / a
    if isinstance(expr, Neg):
        inner = _structural(expr.arg)
        return None if inner is None else (-inner[0], inner[1])
    if isinstance(expr, Mul):
        for k, other in ((expr.left, expr.right), (expr.right, expr.left)):
            c = _const(k)
            if c is not None and c != 0:
                inner = _structural(other)
                if inner is not None:
                    return c * inner[0], inner[1]
        return None
    if isinstance(expr, Div):
        c = _const(expr.right)
        if c is not None and c != 0:
            inner = _structural(expr.left)
            return None if inner is None else (inner[0] / c, inner[1])
        num = _const(expr.left)
        if num is not None and num != 0 and isinstance(expr.right, Pow) and expr.right.exponent == 2:
            lin = _linear(expr.right.base)
            if lin is not None:
                a, c0 = lin
                return num / (a * a), -c0 / a
    return None


def detect_canonical(f: Expr, interval=None, checks: int = 5):
    """Structural match of ``f = eps (t - b)^-2`` confirmed at ``checks`` points."""
    found = _structural(f)
    if found is None:
        return None
    eps, b = found
    lo, hi = interval if interval is not None else (b, INF)
    pts = [t for t in sample_interior(lo, hi, checks + 2) if t != b][:checks]
    mode = FLOAT if is_transcendental(f) else EXACT
    for t in pts:
        want = eps / (t - b) ** 2
        got = evaluate(f, t, mode)
        if mode == EXACT and got != want:
            return None
        if mode == FLOAT and abs(got - float(want)) > float_tolerance() * max(1.0, abs(float(want))):
            return None
    return eps, b


def canonicalize_model(model: ModelData) -> tuple[ModelData, Fraction]:
    """Shift ``t`` by the detected pole ``b`` so that ``f = eps t^-2``.

    Returns the new model and the shift ``b`` (``t_new = t - b``).
    """
    canon = detect_canonical(model.f, (model.lo, model.hi))
    if canon is None:
        raise HomogeneityError(f"f = {model.f} is not of the form eps (t - b)^-2")
    eps, b = canon
    f = Mul(Const(eps), Pow(Var(), -2)) if eps != 1 else Pow(Var(), -2)
    lo = model.lo if model.lo in (-INF, INF) else model.lo - b
    hi = model.hi if model.hi in (-INF, INF) else model.hi - b
    new = make_model(
        model.n,
        model.gram,
        model.a_matrix,
        f,
        (lo, hi),
        f_text=str(f),
        probe=model.probe,
        name=(model.name + " (canonical)").strip(),
    )
    return new, b


# -- witnesses ------------------------------------------------------------------


@dataclass(frozen=True)
class NoWitness:
    reason: str
    detail: str = ""


def _witness_samples(model: ModelData, count: int = 4) -> list:
    pts = []
    m = model.dim_v
    for k, t in enumerate(sample_interior(model.lo, model.hi, count), start=1):
        x = tuple(Fraction(k + i, i + 2) * (-1) ** i for i in range(m))
        pts.append(make_point(model, t, Fraction(k, 3), x))
    return pts


def build_homogeneous_witness(model: ModelData, q) -> IsometryWitness | NoWitness:
    """Dilation ``(t, s, x) -> (q t, s/q, B x)`` of a canonical model.

    ``B`` comes from the conjugacy solver; since ``kappa o gamma = q^-2 kappa``
    the pullback of ``g`` equals ``g``. The witness is verified before it is
    returned.
    """
    q = Fraction(q)
    canon = detect_canonical(model.f, (model.lo, model.hi))
    if canon is None or canon[1] != 0:
        return NoWitness("non-canonical", f"f = {model.f} is not eps t^-2")
    if (model.lo, model.hi) not in ((0, INF), (-INF, 0)):
        return NoWitness("non-canonical", "I is not invariant under dilations")
    sol = linalg.conjugacy_solve(model.gram, model.a_matrix, q)
    if isinstance(sol, linalg.NoSolution):
        return NoWitness(sol.kind, sol.detail)
    witness = IsometryWitness(q, Fraction(0), Fraction(0), sol)
    residual = verify_isometry(model, witness, _witness_samples(model))
    if residual != 0:
        return NoWitness("verification", f"pullback residual {residual}")
    return witness
