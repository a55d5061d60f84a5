"""Pseudo-Euclidean linear algebra on the fibre space V.

Matrices are lists of rows. Entries are Fractions (exact) or floats; the
elimination routines pick pivots accordingly. Endomorphisms follow the column
convention: column ``j`` of ``A`` is the image of basis vector ``j``, so
``<Ax, y> = y^T G A x``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction

from .scalar import EcsLabError, Scalar, float_tolerance, is_zero

Matrix = list


class DegenerateFormError(EcsLabError):
    pass


class SingularMatrixError(EcsLabError):
    pass


class UnsupportedDimensionError(EcsLabError):
    pass


# -- basic matrix helpers ----------------------------------------------------


def shape(m: Matrix) -> tuple[int, int]:
    return len(m), (len(m[0]) if m else 0)


def identity(n: int, one=Fraction(1)) -> Matrix:
    zero = one * 0
    return [[one if i == j else zero for j in range(n)] for i in range(n)]


def zeros(r: int, c: int, zero=Fraction(0)) -> Matrix:
    return [[zero] * c for _ in range(r)]


def transpose(m: Matrix) -> Matrix:
    return [list(col) for col in zip(*m)]


def matmul(a: Matrix, b: Matrix) -> Matrix:
    bt = transpose(b)
    return [[sum(x * y for x, y in zip(row, col)) for col in bt] for row in a]


def matvec(a: Matrix, v) -> list:
    return [sum(x * y for x, y in zip(row, v)) for row in a]


def matsub(a: Matrix, b: Matrix) -> Matrix:
    return [[x - y for x, y in zip(ra, rb)] for ra, rb in zip(a, b)]


def scale(m: Matrix, c) -> Matrix:
    return [[c * x for x in row] for row in m]


def trace(m: Matrix):
    return sum(m[i][i] for i in range(len(m)))


def max_abs(m: Matrix):
    return max((abs(x) for row in m for x in row), default=0)


def is_symmetric(m: Matrix, tol: float | None = None) -> bool:
    n = len(m)
    return all(
        is_zero(m[i][j] - m[j][i], tol) for i in range(n) for j in range(i + 1, n)
    )


def is_zero_matrix(m: Matrix, tol: float | None = None) -> bool:
    return all(is_zero(x, tol) for row in m for x in row)


def matpow(m: Matrix, k: int) -> Matrix:
    out = identity(len(m), m[0][0] * 0 + 1)
    for _ in range(k):
        out = matmul(out, m)
    return out


def _is_float(m: Matrix) -> bool:
    return any(isinstance(x, float) for row in m for x in row)


def row_reduce(m: Matrix, tol: float | None = None) -> tuple[Matrix, list[int]]:
    """Reduced row echelon form and pivot columns.

    Exact entries use the first nonzero pivot; floats use partial pivoting
    with entries below ``tol`` (relative to the largest entry) treated as 0.
    """
    a = [list(row) for row in m]
    rows, cols = shape(a)
    floating = _is_float(a)
    if floating:
        base = float_tolerance() if tol is None else tol
        thresh = base * max(1.0, float(max_abs(a)) if a else 0.0)
    pivots = []
    r = 0
    for c in range(cols):
        if r >= rows:
            break
        if floating:
            p = max(range(r, rows), key=lambda i: abs(a[i][c]))
            if abs(a[p][c]) <= thresh:
                continue
        else:
            p = next((i for i in range(r, rows) if a[i][c] != 0), None)
            if p is None:
                continue
        a[r], a[p] = a[p], a[r]
        piv = a[r][c]
        a[r] = [x / piv for x in a[r]]
        for i in range(rows):
            if i != r and a[i][c] != 0:
                f = a[i][c]
                a[i] = [x - f * y for x, y in zip(a[i], a[r])]
        pivots.append(c)
        r += 1
    return a, pivots


def rank(m: Matrix, tol: float | None = None) -> int:
    if not m:
        return 0
    return len(row_reduce(m, tol)[1])


def kernel(m: Matrix, ncols: int | None = None, tol: float | None = None) -> list[list]:
    """Basis of the null space, one vector per free column."""
    if not m:
        n = ncols or 0
        return [row for row in identity(n)]
    rref, pivots = row_reduce(m, tol)
    ncols = shape(m)[1]
    zero = m[0][0] * 0
    free = [c for c in range(ncols) if c not in pivots]
    basis = []
    for fc in free:
        v = [zero] * ncols
        v[fc] = zero + 1
        for r, pc in enumerate(pivots):
            v[pc] = -rref[r][fc]
        basis.append(v)
    return basis


def inverse(m: Matrix, tol: float | None = None) -> Matrix:
    n = len(m)
    one = m[0][0] * 0 + 1
    aug = [list(row) + e for row, e in zip(m, identity(n, one))]
    rref, pivots = row_reduce(aug, tol)
    if pivots[:n] != list(range(n)):
        raise SingularMatrixError("matrix is singular")
    return [row[n:] for row in rref]


def determinant(m: Matrix):
    a = [list(row) for row in m]
    n = len(a)
    det = a[0][0] * 0 + 1
    for c in range(n):
        p = next((i for i in range(c, n) if a[i][c] != 0), None)
        if p is None:
            return det * 0
        if p != c:
            a[c], a[p] = a[p], a[c]
            det = -det
        det *= a[c][c]
        for i in range(c + 1, n):
            f = a[i][c] / a[c][c]
            if f != 0:
                a[i] = [x - f * y for x, y in zip(a[i], a[c])]
    return det


def charpoly(m: Matrix) -> list:
    """Coefficients ``[1, c1, ..., cn]`` of ``det(lambda I - m)`` (Faddeev-LeVerrier)."""
    n = len(m)
    one = m[0][0] * 0 + 1
    coeffs = [one]
    mk = [[x * 0 for x in row] for row in m]
    for k in range(1, n + 1):
        prev = coeffs[-1]
        mk = matmul(m, [[mk[i][j] + (prev if i == j else 0) for j in range(n)] for i in range(n)])
        coeffs.append(-trace(mk) / k)
    return coeffs


def is_nilpotent(a: Matrix, tol: float | None = None) -> bool:
    return is_zero_matrix(matpow(a, len(a)), tol)


# -- inner products ----------------------------------------------------------


def lagrange_diagonal(gram: Matrix) -> list:
    """Diagonal of a congruent diagonalization by completing squares."""
    a = [list(row) for row in gram]
    n = len(a)
    diag = []
    for k in range(n):
        if a[k][k] == 0:
            j = next((j for j in range(k + 1, n) if a[j][j] != 0), None)
            if j is not None:
                a[k], a[j] = a[j], a[k]
                for row in a:
                    row[k], row[j] = row[j], row[k]
            else:
                j = next((j for j in range(k + 1, n) if a[k][j] != 0), None)
                if j is None:
                    raise DegenerateFormError("inner product is degenerate")
                # replace e_k by e_k + e_j: a_kk becomes 2 a_kj (a_jj = 0)
                a[k] = [x + y for x, y in zip(a[k], a[j])]
                for row in a:
                    row[k] = row[k] + row[j]
        piv = a[k][k]
        if is_zero(piv):
            raise DegenerateFormError("inner product is degenerate")
        diag.append(piv)
        for i in range(k + 1, n):
            f = a[i][k] / piv
            if f != 0:
                a[i] = [x - f * y for x, y in zip(a[i], a[k])]
        for i in range(k + 1, n):
            a[k][i] = a[k][i] * 0
    return diag


@dataclass(frozen=True)
class InnerProduct:
    gram: tuple
    signature: tuple[int, int]

    @property
    def dim(self) -> int:
        return len(self.gram)

    @property
    def matrix(self) -> Matrix:
        return [list(row) for row in self.gram]

    @property
    def definite(self) -> bool:
        return 0 in self.signature


def validate_inner_product(gram: Matrix) -> InnerProduct:
    """Check symmetry and nondegeneracy; compute the signature."""
    n, c = shape(gram)
    if n != c or n == 0:
        raise DegenerateFormError("Gram matrix must be square and nonempty")
    if not is_symmetric(gram):
        raise DegenerateFormError("Gram matrix is not symmetric")
    if is_zero(determinant(gram)):
        raise DegenerateFormError("Gram matrix is degenerate (zero determinant)")
    diag = lagrange_diagonal(gram)
    plus = sum(1 for d in diag if d > 0)
    return InnerProduct(tuple(tuple(r) for r in gram), (plus, n - plus))


def inner(gram: Matrix, x, y):
    return sum(x[i] * gram[i][j] * y[j] for i in range(len(x)) for j in range(len(y)))


# -- endomorphisms and isometries ---------------------------------------------


@dataclass(frozen=True)
class AdmissibilityReport:
    nonzero: bool
    traceless: bool
    self_adjoint: bool

    @property
    def ok(self) -> bool:
        return self.nonzero and self.traceless and self.self_adjoint

    @property
    def failures(self) -> list[str]:
        names = ("nonzero", "traceless", "self-adjoint")
        flags = (self.nonzero, self.traceless, self.self_adjoint)
        return [name for name, flag in zip(names, flags) if not flag]


def validate_endomorphism(gram: Matrix, a: Matrix) -> AdmissibilityReport:
    if shape(gram) != shape(a):
        raise ValueError("dimension mismatch between Gram matrix and endomorphism")
    return AdmissibilityReport(
        nonzero=not is_zero_matrix(a),
        traceless=is_zero(trace(a)),
        self_adjoint=is_symmetric(matmul(gram, a)),
    )


@dataclass(frozen=True)
class LinearIsometry:
    mat: tuple

    @property
    def matrix(self) -> Matrix:
        return [list(row) for row in self.mat]

    @classmethod
    def of(cls, m: Matrix) -> "LinearIsometry":
        return cls(tuple(tuple(row) for row in m))


@dataclass(frozen=True)
class NoSolution:
    """Failure of the conjugacy solver.

    ``kind`` is ``"spectral"`` for a certified obstruction, or
    ``"inconclusive"`` when the finite search ran out.
    """

    kind: str
    detail: str

    @property
    def certified(self) -> bool:
        return self.kind == "spectral"


def isometry_residual(gram: Matrix, b: Matrix):
    return max_abs(matsub(matmul(matmul(transpose(b), gram), b), gram))


def is_isometry(gram: Matrix, b: Matrix, tol: float | None = None) -> bool:
    return is_zero(isometry_residual(gram, b), tol)


def scaling_orbit_check(gram: Matrix, a: Matrix, b: Matrix, q) -> Scalar:
    """Max-norm of ``B A B^-1 - q^2 A``."""
    binv = inverse(b)
    lhs = matmul(matmul(b, a), binv)
    return max_abs(matsub(lhs, scale(a, q * q)))


def _spectral_obstruction(a: Matrix, q) -> str | None:
    if q == 1 or is_nilpotent(a):
        return None
    p = charpoly(a)
    pq = charpoly(scale(a, q * q))
    if any(not is_zero(x - y) for x, y in zip(p, pq)):
        return (
            f"characteristic polynomials of A and q^2 A differ "
            f"({[str(x) for x in p]} vs {[str(x) for x in pq]}) while A is not nilpotent"
        )
    return None


def _nilpotency_index(a: Matrix) -> int | None:
    m = identity(len(a), a[0][0] * 0 + 1)
    for k in range(1, len(a) + 1):
        m = matmul(m, a)
        if is_zero_matrix(m):
            return k
    return None


def _cyclic_vector(gram: Matrix, a: Matrix, k: int):
    """A vector v with ``<A^(k-1) v, v> != 0`` for a single Jordan block."""
    n = len(a)
    top = matpow(a, k - 1)
    one = a[0][0] * 0 + 1
    basis = identity(n, one)
    candidates = list(basis) + [
        [x + y for x, y in zip(basis[i], basis[j])] for i in range(n) for j in range(i + 1, n)
    ]
    for v in candidates:
        if not is_zero(inner(gram, matvec(top, v), v)):
            return v
    return None


def _flag_solution(gram: Matrix, a: Matrix, q):
    """Diagonal scaling along the null flag of a single nilpotent Jordan block."""
    n = len(a)
    if _nilpotency_index(a) != n:
        return None
    v = _cyclic_vector(gram, a, n)
    if v is None:
        return None
    powers = [v]
    for _ in range(n - 1):
        powers.append(matvec(a, powers[-1]))
    h = [inner(gram, powers[r], v) for r in range(n)]
    # replace v by sum_m c_m A^m v so that <A^j v, v> = 0 for j < n - 1
    c = [h[0] * 0 + 1]
    for m in range(1, n):
        j = n - 1 - m
        acc = sum(
            c[x] * c[y] * h[j + x + y]
            for x in range(m)
            for y in range(m)
            if j + x + y < n
        )
        c.append(-acc / (2 * h[n - 1]))
    w = [sum(c[m] * powers[m][i] for m in range(n)) for i in range(n)]
    chain = [w]
    for _ in range(n - 1):
        chain.append(matvec(a, chain[-1]))
    # basis e_j = A^(n-j) w, so A e_(j+1) = e_j
    p = transpose(list(reversed(chain)))
    d = [q ** (n + 1 - 2 * (j + 1)) for j in range(n)]
    b = matmul(matmul(p, [[d[i] if i == j else d[i] * 0 for j in range(n)] for i in range(n)]), inverse(p))
    return b


def _grid_search(gram: Matrix, a: Matrix, q, bases: list[Matrix]):
    n = len(a)
    exps = range(-(n - 1), n)
    for p in bases:
        try:
            pinv = inverse(p)
        except SingularMatrixError:
            continue
        for combo in itertools.product(exps, repeat=n):
            d = [[(q ** combo[i]) if i == j else q * 0 for j in range(n)] for i in range(n)]
            b = matmul(matmul(p, d), pinv)
            if is_isometry(gram, b) and is_zero(scaling_orbit_check(gram, a, b, q)):
                return b
    return None


def _search_bases(gram: Matrix, a: Matrix) -> list[Matrix]:
    n = len(a)
    one = a[0][0] * 0 + 1
    bases = [identity(n, one)]
    # Jordan-chain style bases from each standard vector
    for i in range(n):
        v = identity(n, one)[i]
        chain = [v]
        for _ in range(n - 1):
            chain.append(matvec(a, chain[-1]))
        m = transpose(chain)
        if rank(m) == n:
            bases.append(m)
            bases.append(transpose(list(reversed(chain))))
    return bases


SEARCH_MAX_DIM = 4


def conjugacy_solve(gram: Matrix, a: Matrix, q) -> LinearIsometry | NoSolution:
    """Find a G-isometry ``B`` with ``B A B^-1 = q^2 A``.

    Strategy: identity for ``q = 1``; spectral obstruction; diagonal scaling
    along the null flag of a single nilpotent Jordan block; finally a search
    over diagonal scalings ``q^k`` in a few candidate bases (``dim <= 4``).
    Every returned witness has been checked exactly (or within tolerance).
    """
    n = len(a)
    if q <= 0:
        raise ValueError("q must be positive")
    if q == 1:
        return LinearIsometry.of(identity(n, a[0][0] * 0 + 1))
    reason = _spectral_obstruction(a, q)
    if reason is not None:
        return NoSolution("spectral", reason)
    candidates = []
    flag = _flag_solution(gram, a, q)
    if flag is not None:
        candidates.append(flag)
    for b in candidates:
        if is_isometry(gram, b) and is_zero(scaling_orbit_check(gram, a, b, q)):
            return LinearIsometry.of(b)
    if n > SEARCH_MAX_DIM:
        raise UnsupportedDimensionError(
            f"dim V = {n} exceeds the search bound {SEARCH_MAX_DIM} and no flag solution applies"
        )
    b = _grid_search(gram, a, q, _search_bases(gram, a))
    if b is not None:
        return LinearIsometry.of(b)
    return NoSolution(
        "inconclusive",
        f"no witness among diagonal q-power scalings in {len(_search_bases(gram, a))} bases",
    )
