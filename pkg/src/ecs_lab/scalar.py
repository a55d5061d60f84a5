"""Scalars, truncated jets in ``t`` and the expression language for ``f``.

A computation runs either in ``"exact"`` mode (``fractions.Fraction``) or in
``"float"`` mode (binary floats compared against a global tolerance).
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Union

Scalar = Union[Fraction, float]

EXACT = "exact"
FLOAT = "float"
MODES = (EXACT, FLOAT)

JET_ORDER = 4
DEFAULT_TOL = 1e-9


class EcsLabError(Exception):
    """Base class for errors raised by this package."""


class ExactnessError(EcsLabError):
    """An exact-mode computation hit a value that is not rational."""


class SingularPointError(EcsLabError):
    """Evaluation at a point where the expression is not differentiable."""


class ParseError(EcsLabError):
    def __init__(self, message: str, position: int):
        super().__init__(f"{message} (at position {position})")
        self.position = position


class UnknownIdentifierError(ParseError):
    pass


def float_tolerance() -> float:
    """Global float tolerance, overridable through ``ECS_LAB_TOL``."""
    raw = os.environ.get("ECS_LAB_TOL")
    if raw is None:
        return DEFAULT_TOL
    return float(raw)


def check_mode(mode: str) -> str:
    if mode not in MODES:
        raise ValueError(f"unknown mode {mode!r}; expected one of {MODES}")
    return mode


def to_scalar(value, mode: str) -> Scalar:
    """Convert ints, strings, Fractions or floats into a scalar of ``mode``."""
    if mode == EXACT:
        if isinstance(value, float):
            # floats are exact binary rationals, but accepting them silently
            # usually means a rounded literal slipped in
            raise ExactnessError(f"float literal {value!r} in exact mode")
        return Fraction(value)
    if isinstance(value, str):
        return float(Fraction(value))
    return float(value)


def mode_of(value) -> str:
    return FLOAT if isinstance(value, float) else EXACT


def is_zero(value: Scalar, tol: float | None = None) -> bool:
    if isinstance(value, float):
        return abs(value) <= (float_tolerance() if tol is None else tol)
    return value == 0


def format_scalar(value: Scalar) -> str:
    if isinstance(value, Fraction):
        return str(value)
    return repr(float(value))


# -- exact roots -----------------------------------------------------------


def _integer_root(n: int, k: int) -> int | None:
    """Exact ``k``-th root of the nonnegative integer ``n`` or None."""
    if n < 2:
        return n
    x = 1 << ((n.bit_length() + k - 1) // k)
    while True:
        y = ((k - 1) * x + n // x ** (k - 1)) // k
        if y >= x:
            break
        x = y
    return x if x**k == n else None


def exact_power(base: Fraction, exponent: Fraction) -> Fraction | None:
    """``base ** exponent`` when the result is rational, else None.

    ``base`` must be positive unless the exponent is a nonnegative integer.
    """
    if exponent.denominator == 1:
        if base == 0 and exponent < 0:
            raise ZeroDivisionError("zero to a negative power")
        return base ** int(exponent)
    if base < 0:
        raise ValueError("fractional power of a negative number")
    if base == 0:
        return Fraction(0) if exponent > 0 else None
    k = exponent.denominator
    num = _integer_root(base.numerator, k)
    den = _integer_root(base.denominator, k)
    if num is None or den is None:
        return None
    return Fraction(num, den) ** exponent.numerator


# -- jets -------------------------------------------------------------------


def _mul_series(a, b, order: int):
    out = [a[0] * 0] * (order + 1)
    for i, ai in enumerate(a):
        if ai == 0:
            continue
        for j in range(order + 1 - i):
            if j < len(b):
                out[i + j] += ai * b[j]
    return out


@dataclass(frozen=True)
class Jet:
    """Truncated Taylor expansion of a function of ``t`` at one point.

    ``coeffs[k]`` holds ``f^(k)(t0) / k!``; :attr:`derivatives` gives the
    plain derivatives ``(f, f', f'', f''', f'''')``.
    """

    coeffs: tuple

    @classmethod
    def constant(cls, value: Scalar) -> "Jet":
        return cls((value,) + (value * 0,) * JET_ORDER)

    @classmethod
    def variable(cls, t0: Scalar) -> "Jet":
        zero = t0 * 0
        return cls((t0, zero + 1) + (zero,) * (JET_ORDER - 1))

    @classmethod
    def from_derivatives(cls, derivs) -> "Jet":
        return cls(tuple(d / math.factorial(k) for k, d in enumerate(derivs)))

    @property
    def value(self) -> Scalar:
        return self.coeffs[0]

    @property
    def derivatives(self) -> tuple:
        return tuple(c * math.factorial(k) for k, c in enumerate(self.coeffs))

    def d(self, k: int) -> Scalar:
        return self.coeffs[k] * math.factorial(k)

    def _lift(self, other) -> "Jet":
        if isinstance(other, Jet):
            return other
        return Jet.constant(self.coeffs[0] * 0 + other)

    def __add__(self, other):
        other = self._lift(other)
        return Jet(tuple(a + b for a, b in zip(self.coeffs, other.coeffs)))

    __radd__ = __add__

    def __neg__(self):
        return Jet(tuple(-a for a in self.coeffs))

    def __sub__(self, other):
        return self + (-self._lift(other))

    def __rsub__(self, other):
        return self._lift(other) - self

    def __mul__(self, other):
        other = self._lift(other)
        return Jet(tuple(_mul_series(self.coeffs, other.coeffs, JET_ORDER)))

    __rmul__ = __mul__

    def reciprocal(self) -> "Jet":
        a = self.coeffs
        if a[0] == 0:
            raise SingularPointError("division by a jet with zero value")
        inv = [1 / a[0]]
        for k in range(1, JET_ORDER + 1):
            acc = sum(a[j] * inv[k - j] for j in range(1, k + 1))
            inv.append(-acc / a[0])
        return Jet(tuple(inv))

    def __truediv__(self, other):
        return self * self._lift(other).reciprocal()

    def __rtruediv__(self, other):
        return self._lift(other) * self.reciprocal()

    def __pow__(self, k: int):
        if not isinstance(k, int):
            raise TypeError("use compose() for non-integer powers")
        if k < 0:
            return (self ** (-k)).reciprocal()
        result = Jet.constant(self.coeffs[0] * 0 + 1)
        base = self
        while k:
            if k & 1:
                result = result * base
            base = base * base
            k >>= 1
        return result

    def compose(self, derivs) -> "Jet":
        """Apply an outer function given its derivatives at ``self.value``.

        ``derivs[k]`` is the ``k``-th derivative of the outer function at the
        inner value; the result follows from the Taylor expansion of the
        outer function in powers of ``self - self.value``.
        """
        zero = self.coeffs[0] * 0
        shifted = (zero,) + self.coeffs[1:]
        out = [zero] * (JET_ORDER + 1)
        power = [zero + 1] + [zero] * JET_ORDER
        for k in range(JET_ORDER + 1):
            ck = derivs[k] / math.factorial(k)
            if ck != 0:
                for i in range(JET_ORDER + 1):
                    out[i] += ck * power[i]
            power = _mul_series(power, shifted, JET_ORDER)
        return Jet(tuple(out))


# -- expression tree --------------------------------------------------------


class Expr:
    """Node of a scalar expression in the single variable ``t``."""

    precedence = 100

    def jet(self, tj: Jet, mode: str) -> Jet:
        raise NotImplementedError

    def children(self) -> tuple:
        return ()

    def _wrap(self, child: "Expr", min_prec: int) -> str:
        text = str(child)
        return f"({text})" if child.precedence < min_prec else text


@dataclass(frozen=True)
class Const(Expr):
    value: Fraction

    def jet(self, tj, mode):
        return Jet.constant(to_scalar(self.value, mode))

    def __str__(self):
        return str(self.value)

    @property
    def precedence(self):
        return 100 if self.value >= 0 and self.value.denominator == 1 else 20


@dataclass(frozen=True)
class Pi(Expr):
    def jet(self, tj, mode):
        if mode == EXACT:
            raise ExactnessError("pi is not rational; use float mode")
        return Jet.constant(math.pi)

    def __str__(self):
        return "pi"


@dataclass(frozen=True)
class Var(Expr):
    def jet(self, tj, mode):
        return tj

    def __str__(self):
        return "t"


@dataclass(frozen=True)
class Neg(Expr):
    arg: Expr
    precedence = 25

    def jet(self, tj, mode):
        return -self.arg.jet(tj, mode)

    def children(self):
        return (self.arg,)

    def __str__(self):
        return "-" + self._wrap(self.arg, 30)


@dataclass(frozen=True)
class _Binary(Expr):
    left: Expr
    right: Expr
    symbol = "?"

    def children(self):
        return (self.left, self.right)

    def __str__(self):
        return (
            f"{self._wrap(self.left, self.precedence)} {self.symbol} "
            f"{self._wrap(self.right, self.precedence + 1)}"
        )


@dataclass(frozen=True)
class Add(_Binary):
    precedence = 10
    symbol = "+"

    def jet(self, tj, mode):
        return self.left.jet(tj, mode) + self.right.jet(tj, mode)


@dataclass(frozen=True)
class Sub(_Binary):
    precedence = 10
    symbol = "-"

    def jet(self, tj, mode):
        return self.left.jet(tj, mode) - self.right.jet(tj, mode)


@dataclass(frozen=True)
class Mul(_Binary):
    precedence = 20
    symbol = "*"

    def jet(self, tj, mode):
        return self.left.jet(tj, mode) * self.right.jet(tj, mode)


@dataclass(frozen=True)
class Div(_Binary):
    precedence = 20
    symbol = "/"

    def jet(self, tj, mode):
        den = self.right.jet(tj, mode)
        if den.value == 0:
            raise SingularPointError(f"denominator {self.right} vanishes")
        return self.left.jet(tj, mode) / den


@dataclass(frozen=True)
class Pow(Expr):
    base: Expr
    exponent: int
    precedence = 30

    def jet(self, tj, mode):
        b = self.base.jet(tj, mode)
        if self.exponent < 0 and b.value == 0:
            raise SingularPointError(f"{self.base} vanishes under a negative power")
        return b**self.exponent

    def children(self):
        return (self.base,)

    def __str__(self):
        return f"{self._wrap(self.base, 31)}^{self.exponent}"


@dataclass(frozen=True)
class RationalPow(Expr):
    base: Expr
    exponent: Fraction
    precedence = 30

    def jet(self, tj, mode):
        b = self.base.jet(tj, mode)
        u0 = b.value
        if u0 < 0:
            raise SingularPointError(f"fractional power of negative value {u0}")
        if u0 == 0:
            raise SingularPointError("fractional power is not differentiable at 0")
        r = self.exponent
        if mode == EXACT:
            head = exact_power(u0, r)
            if head is None:
                raise ExactnessError(f"{u0}^({r}) is irrational")
        else:
            head = u0 ** float(r)
        derivs = []
        coef = head * 0 + 1
        value = head
        for k in range(JET_ORDER + 1):
            derivs.append(coef * value)
            coef = coef * (r - k if mode == EXACT else float(r - k))
            value = value / u0
        return b.compose(derivs)

    def children(self):
        return (self.base,)

    def __str__(self):
        return f"{self._wrap(self.base, 31)}^({self.exponent})"


@dataclass(frozen=True)
class Func(Expr):
    arg: Expr
    name = "?"

    def children(self):
        return (self.arg,)

    def __str__(self):
        return f"{self.name}({self.arg})"

    def outer(self, u0, mode) -> list:
        raise NotImplementedError

    def jet(self, tj, mode):
        u = self.arg.jet(tj, mode)
        return u.compose(self.outer(u.value, mode))


class _Transcendental(Func):
    def jet(self, tj, mode):
        if mode == EXACT:
            raise ExactnessError(f"{self.name} has no exact evaluation; use float mode")
        return super().jet(tj, mode)


@dataclass(frozen=True)
class Abs(Func):
    name = "abs"

    def outer(self, u0, mode):
        if u0 == 0:
            raise SingularPointError("abs is not differentiable at 0")
        sign = 1 if u0 > 0 else -1
        zero = u0 * 0
        return [abs(u0), zero + sign, zero, zero, zero]


@dataclass(frozen=True)
class Ln(_Transcendental):
    name = "ln"

    def outer(self, u0, mode):
        if u0 <= 0:
            raise SingularPointError(f"ln of nonpositive value {u0}")
        return [math.log(u0), 1 / u0, -1 / u0**2, 2 / u0**3, -6 / u0**4]


@dataclass(frozen=True)
class Exp(_Transcendental):
    name = "exp"

    def outer(self, u0, mode):
        return [math.exp(u0)] * (JET_ORDER + 1)


@dataclass(frozen=True)
class Sin(_Transcendental):
    name = "sin"

    def outer(self, u0, mode):
        s, c = math.sin(u0), math.cos(u0)
        return [s, c, -s, -c, s]


@dataclass(frozen=True)
class Cos(_Transcendental):
    name = "cos"

    def outer(self, u0, mode):
        s, c = math.sin(u0), math.cos(u0)
        return [c, -s, -c, s, c]


FUNCTIONS = {"abs": Abs, "ln": Ln, "exp": Exp, "sin": Sin, "cos": Cos}
T = Var()


# -- parser -----------------------------------------------------------------


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    tokens = []
    i = 0
    while i < len(text):
        ch = text[i]
        if ch.isspace():
            i += 1
        elif ch.isdigit():
            j = i
            while j < len(text) and text[j].isdigit():
                j += 1
            tokens.append(("int", text[i:j], i))
            i = j
        elif ch.isalpha() or ch == "_":
            j = i
            while j < len(text) and (text[j].isalnum() or text[j] == "_"):
                j += 1
            tokens.append(("name", text[i:j], i))
            i = j
        elif ch in "+-*/^()":
            tokens.append(("op", ch, i))
            i += 1
        else:
            raise ParseError(f"unexpected character {ch!r}", i)
    tokens.append(("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.tokens = _tokenize(text)
        self.pos = 0

    def peek(self, offset: int = 0):
        return self.tokens[min(self.pos + offset, len(self.tokens) - 1)]

    def take(self):
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect(self, value: str):
        kind, text, where = self.take()
        if text != value or kind not in ("op",):
            found = text or "end of input"
            raise ParseError(f"expected {value!r}, found {found!r}", where)

    def at(self, value: str, offset: int = 0) -> bool:
        kind, text, _ = self.peek(offset)
        return kind == "op" and text == value

    def parse(self) -> Expr:
        node = self.expr()
        kind, text, where = self.peek()
        if kind != "end":
            raise ParseError(f"unexpected {text!r}", where)
        return node

    def expr(self) -> Expr:
        node = self.term()
        while self.at("+") or self.at("-"):
            op = self.take()[1]
            rhs = self.term()
            node = Add(node, rhs) if op == "+" else Sub(node, rhs)
        return node

    def term(self) -> Expr:
        node = self.unary()
        while self.at("*") or self.at("/"):
            op = self.take()[1]
            rhs = self.unary()
            node = Mul(node, rhs) if op == "*" else Div(node, rhs)
        return node

    def unary(self) -> Expr:
        if self.at("-"):
            if self.peek(1)[0] == "int":
                return self.factor()
            self.take()
            return Neg(self.unary())
        return self.factor()

    def factor(self) -> Expr:
        base = self.base()
        if not self.at("^"):
            return base
        self.take()
        exponent = self.exponent()
        if exponent.denominator == 1:
            return Pow(base, int(exponent))
        return RationalPow(base, exponent)

    def integer(self) -> int:
        sign = 1
        if self.at("-"):
            self.take()
            sign = -1
        kind, text, where = self.take()
        if kind != "int":
            raise ParseError(f"expected an integer, found {text or 'end of input'!r}", where)
        return sign * int(text)

    def positive_integer(self) -> int:
        kind, text, where = self.take()
        if kind != "int" or int(text) == 0:
            raise ParseError("expected a positive integer", where)
        return int(text)

    def rational(self) -> Fraction:
        num = self.integer()
        if self.at("/") and self.peek(1)[0] == "int":
            self.take()
            return Fraction(num, self.positive_integer())
        return Fraction(num)

    def exponent(self) -> Fraction:
        if self.at("("):
            self.take()
            num = self.integer()
            den = 1
            if self.at("/"):
                self.take()
                den = self.positive_integer()
            self.expect(")")
            return Fraction(num, den)
        return Fraction(self.integer())

    def base(self) -> Expr:
        kind, text, where = self.peek()
        if kind == "int" or (self.at("-") and self.peek(1)[0] == "int"):
            return Const(self.rational())
        if kind == "op" and text == "(":
            self.take()
            node = self.expr()
            self.expect(")")
            return node
        if kind == "name":
            self.take()
            if text == "t":
                return T
            if text == "pi":
                return Pi()
            if text in FUNCTIONS:
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return FUNCTIONS[text](arg)
            raise UnknownIdentifierError(f"unknown identifier {text!r}", where)
        raise ParseError(f"unexpected {text or 'end of input'!r}", where)


def parse_f(text: str) -> Expr:
    """Parse an expression in ``t``.

    >>> parse_f("t^-2")
    Pow(base=Var(), exponent=-2)
    """
    return _Parser(text).parse()


# -- evaluation ---------------------------------------------------------------


def is_transcendental(expr: Expr) -> bool:
    if isinstance(expr, (_Transcendental, Pi)):
        return True
    return any(is_transcendental(c) for c in expr.children())


def eval_jet(expr: Expr, t0, mode: str | None = None) -> Jet:
    """Value and first four ``t``-derivatives of ``expr`` at ``t0``."""
    if mode is None:
        mode = mode_of(t0)
    check_mode(mode)
    t0 = to_scalar(t0, mode)
    return expr.jet(Jet.variable(t0), mode)


def evaluate(expr: Expr, t0, mode: str | None = None) -> Scalar:
    """Plain value of ``expr`` at ``t0`` (no differentiability required)."""
    if mode is None:
        mode = mode_of(t0)
    t0 = to_scalar(t0, mode)
    return _value(expr, t0, mode)


def _value(expr: Expr, t: Scalar, mode: str) -> Scalar:
    if isinstance(expr, Abs):
        return abs(_value(expr.arg, t, mode))
    if isinstance(expr, RationalPow):
        u = _value(expr.base, t, mode)
        if u == 0 and expr.exponent > 0:
            return u * 0
        if u < 0:
            raise SingularPointError(f"fractional power of negative value {u}")
        if mode == EXACT:
            out = exact_power(u, expr.exponent)
            if out is None:
                raise ExactnessError(f"{u}^({expr.exponent}) is irrational")
            return out
        return u ** float(expr.exponent)
    return expr.jet(Jet.variable(t), mode).value


def differentiate(expr: Expr) -> Expr:
    """Symbolic ``d/dt`` of ``expr`` (no simplification)."""
    d = differentiate
    if isinstance(expr, (Const, Pi)):
        return Const(Fraction(0))
    if isinstance(expr, Var):
        return Const(Fraction(1))
    if isinstance(expr, Neg):
        return Neg(d(expr.arg))
    if isinstance(expr, Add):
        return Add(d(expr.left), d(expr.right))
    if isinstance(expr, Sub):
        return Sub(d(expr.left), d(expr.right))
    if isinstance(expr, Mul):
        return Add(Mul(d(expr.left), expr.right), Mul(expr.left, d(expr.right)))
    if isinstance(expr, Div):
        return Div(
            Sub(Mul(d(expr.left), expr.right), Mul(expr.left, d(expr.right))),
            Pow(expr.right, 2),
        )
    if isinstance(expr, Pow):
        k = expr.exponent
        if k == 0:
            return Const(Fraction(0))
        return Mul(Mul(Const(Fraction(k)), Pow(expr.base, k - 1)), d(expr.base))
    if isinstance(expr, RationalPow):
        r = expr.exponent
        return Mul(Mul(Const(r), RationalPow(expr.base, r - 1)), d(expr.base))
    if isinstance(expr, Abs):
        # sign(u) = u / |u| away from zeros of u
        return Mul(Div(expr.arg, expr), d(expr.arg))
    if isinstance(expr, Ln):
        return Div(d(expr.arg), expr.arg)
    if isinstance(expr, Exp):
        return Mul(expr, d(expr.arg))
    if isinstance(expr, Sin):
        return Mul(Cos(expr.arg), d(expr.arg))
    if isinstance(expr, Cos):
        return Neg(Mul(Sin(expr.arg), d(expr.arg)))
    raise TypeError(f"cannot differentiate {expr!r}")


# -- singular values ----------------------------------------------------------

POLE = "pole"
KINK = "kink"


def _critical_args(expr: Expr):
    """Yield ``(subexpression, kind, predicate)`` whose zero/sign set is singular."""
    if isinstance(expr, Div):
        yield expr.right, POLE
    elif isinstance(expr, Pow) and expr.exponent < 0:
        yield expr.base, POLE
    elif isinstance(expr, Ln):
        yield expr.arg, POLE
    elif isinstance(expr, RationalPow):
        yield expr.base, POLE if expr.exponent < 0 else KINK
    elif isinstance(expr, Abs):
        yield expr.arg, KINK
    for child in expr.children():
        yield from _critical_args(child)


def _safe_value(expr: Expr, t: float) -> float | None:
    try:
        return float(_value(expr, t, FLOAT))
    except (SingularPointError, ZeroDivisionError, OverflowError, ValueError):
        return None


def singular_points(
    expr: Expr, lo: float, hi: float, grid: int = 2000, window: float = 1e3
) -> list[tuple[float, str]]:
    """Locate singular values of ``expr`` in ``[lo, hi]``.

    Zeros of denominators, of bases under negative or fractional powers, of
    ``abs`` arguments and of ``ln`` arguments are found by sign-change scan on
    a uniform grid followed by bisection. Infinite ends are clipped to
    ``window``. Returns sorted ``(t, kind)`` pairs with kind ``"pole"`` or
    ``"kink"``.
    """
    lo = max(float(lo), -window)
    hi = min(float(hi), window)
    found: dict[float, str] = {}
    step = (hi - lo) / grid
    for sub, kind in _critical_args(expr):
        prev_t, prev_v = None, None
        for k in range(grid + 1):
            t = lo + k * step
            v = _safe_value(sub, t)
            if v is None:
                continue
            if v == 0:
                found[round(t, 12)] = _worse(found.get(round(t, 12)), kind)
            elif prev_v is not None and prev_v != 0 and (v > 0) != (prev_v > 0):
                root = _bisect(sub, prev_t, t, prev_v)
                if root is not None:
                    found[round(root, 12)] = _worse(found.get(round(root, 12)), kind)
            prev_t, prev_v = t, v
    return sorted(found.items())


def _worse(old: str | None, new: str) -> str:
    return POLE if POLE in (old, new) else new


def _bisect(expr: Expr, a: float, b: float, fa: float, iters: int = 200) -> float | None:
    for _ in range(iters):
        m = 0.5 * (a + b)
        fm = _safe_value(expr, m)
        if fm is None:
            return m
        if fm == 0 or b - a < 1e-15 * max(1.0, abs(m)):
            return m
        if (fm > 0) == (fa > 0):
            a, fa = m, fm
        else:
            b = m
    return 0.5 * (a + b)


def as_function(expr: Expr, mode: str = FLOAT) -> Callable:
    return lambda t: evaluate(expr, t, mode)


def compile_float(expr: Expr) -> Callable[[float], float]:
    """Plain float evaluator, much faster than :func:`evaluate` in loops."""
    if isinstance(expr, Const):
        v = float(expr.value)
        return lambda t: v
    if isinstance(expr, Pi):
        return lambda t: math.pi
    if isinstance(expr, Var):
        return lambda t: t
    if isinstance(expr, Neg):
        a = compile_float(expr.arg)
        return lambda t: -a(t)
    if isinstance(expr, _Binary):
        a, b = compile_float(expr.left), compile_float(expr.right)
        op = {Add: float.__add__, Sub: float.__sub__, Mul: float.__mul__, Div: float.__truediv__}
        fn = op[type(expr)]
        return lambda t: fn(float(a(t)), float(b(t)))
    if isinstance(expr, Pow):
        a, k = compile_float(expr.base), expr.exponent
        return lambda t: a(t) ** k
    if isinstance(expr, RationalPow):
        a, r = compile_float(expr.base), float(expr.exponent)
        return lambda t: a(t) ** r
    funcs = {Abs: abs, Ln: math.log, Exp: math.exp, Sin: math.sin, Cos: math.cos}
    a = compile_float(expr.arg)
    fn = funcs[type(expr)]
    return lambda t: fn(a(t))
