"""Truncated multivariate Taylor series around a chart point.

A monomial is a sorted tuple of coordinate indices, so ``(0, 0, 2)`` stands
for ``dx0^2 dx2``. A series knows its coefficients up to total degree
``prec``; products and derivatives propagate that precision.
"""

from __future__ import annotations

import math
from collections import defaultdict

EXACT_PREC = 10**6


class Series:
    __slots__ = ("terms", "prec")

    def __init__(self, terms: dict, prec: int = EXACT_PREC):
        self.terms = {m: c for m, c in terms.items() if c != 0 and len(m) <= prec}
        self.prec = prec

    @classmethod
    def const(cls, value, prec: int = EXACT_PREC) -> "Series":
        return cls({(): value}, prec)

    def value(self, zero=0):
        return self.terms.get((), zero)

    def is_zero(self) -> bool:
        return not self.terms

    def truncate(self, prec: int) -> "Series":
        if prec >= self.prec:
            return self
        return Series(self.terms, prec)

    def __add__(self, other: "Series") -> "Series":
        out = dict(self.terms)
        for m, c in other.terms.items():
            out[m] = out.get(m, 0) + c
        return Series(out, min(self.prec, other.prec))

    def __sub__(self, other: "Series") -> "Series":
        out = dict(self.terms)
        for m, c in other.terms.items():
            out[m] = out.get(m, 0) - c
        return Series(out, min(self.prec, other.prec))

    def __neg__(self) -> "Series":
        return Series({m: -c for m, c in self.terms.items()}, self.prec)

    def scale(self, c) -> "Series":
        if c == 0:
            return Series({}, self.prec)
        return Series({m: c * v for m, v in self.terms.items()}, self.prec)

    def __mul__(self, other: "Series") -> "Series":
        prec = min(self.prec, other.prec)
        out: dict = defaultdict(int)
        for m1, c1 in self.terms.items():
            room = prec - len(m1)
            for m2, c2 in other.terms.items():
                if len(m2) <= room:
                    key = tuple(sorted(m1 + m2)) if m1 and m2 else (m1 or m2)
                    out[key] += c1 * c2
        return Series(out, prec)

    def deriv(self, var: int) -> "Series":
        out: dict = {}
        for m, c in self.terms.items():
            k = m.count(var)
            if k:
                i = m.index(var)
                reduced = m[:i] + m[i + 1 :]
                out[reduced] = out.get(reduced, 0) + c * k
        return Series(out, self.prec - 1)

    def derivative_at(self, mono: tuple):
        """Partial derivative at the base point for the multi-index ``mono``."""
        mono = tuple(sorted(mono))
        c = self.terms.get(mono, 0)
        factor = 1
        for var in set(mono):
            factor *= math.factorial(mono.count(var))
        return c * factor

    def __repr__(self) -> str:
        return f"Series({self.terms!r}, prec={self.prec})"


def series_matmul(a: dict, b: dict, n: int) -> dict:
    """Product of sparse ``n x n`` matrices of series keyed by ``(i, j)``."""
    rows: dict = defaultdict(list)
    for (i, k), s in a.items():
        rows[k].append((i, s))
    out: dict = {}
    for (k, j), s in b.items():
        for i, r in rows.get(k, ()):
            term = r * s
            if term.is_zero():
                continue
            key = (i, j)
            out[key] = out[key] + term if key in out else term
    return out


def series_inverse(g: dict, g0_inv: dict, n: int, prec: int) -> dict:
    """Inverse of a matrix series given the inverse of its constant part.

    Uses ``g^-1 = sum_k (-g0^-1 h)^k g0^-1`` with ``h = g - g(0)``; the sum
    stops once a term vanishes or the degree passes ``prec``.
    """
    h = {}
    for key, s in g.items():
        rest = Series({m: c for m, c in s.terms.items() if m}, s.prec)
        if not rest.is_zero():
            h[key] = rest
    neg_m = {key: -s for key, s in series_matmul(g0_inv, h, n).items()}
    total = dict(g0_inv)
    term = dict(g0_inv)
    for _ in range(prec):
        term = series_matmul(neg_m, term, n)
        term = {k: s.truncate(prec) for k, s in term.items() if not s.is_zero()}
        if not term:
            break
        for key, s in term.items():
            total[key] = total[key] + s if key in total else s
    return {k: s.truncate(prec) for k, s in total.items() if not s.is_zero()}
