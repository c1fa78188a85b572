"""Exact rational linear algebra on tuples of Fractions.

Everything here works on immutable tuples so results can be hashed and
shared freely.  Floats are converted exactly (no rounding) via Fraction.
"""

from __future__ import annotations

from fractions import Fraction
from math import gcd, isqrt
from typing import Iterable, Sequence

Vec = tuple[Fraction, ...]
Mat = tuple[Vec, ...]

ZERO = Fraction(0)
ONE = Fraction(1)


def frac(x) -> Fraction:
    """Exact conversion; decimal strings are parsed as exact decimals."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, float):
        return Fraction(x)
    if isinstance(x, str):
        return Fraction(x)
    item = getattr(x, "item", None)
    if item is not None:  # numpy scalars
        v = item()
        if isinstance(v, (int, float)):
            return Fraction(v)
    raise TypeError(f"cannot convert {type(x).__name__} to Fraction")


def vec(xs: Iterable) -> Vec:
    return tuple(frac(x) for x in xs)


def mat(rows: Iterable[Iterable]) -> Mat:
    return tuple(vec(r) for r in rows)


def vec_float(v: Sequence[Fraction]) -> list[float]:
    return [float(x) for x in v]


def dot(a: Sequence[Fraction], b: Sequence[Fraction]) -> Fraction:
    return sum((x * y for x, y in zip(a, b)), ZERO)


def add(a: Sequence[Fraction], b: Sequence[Fraction]) -> Vec:
    return tuple(x + y for x, y in zip(a, b))


def sub(a: Sequence[Fraction], b: Sequence[Fraction]) -> Vec:
    return tuple(x - y for x, y in zip(a, b))


def scale(a: Sequence[Fraction], s: Fraction) -> Vec:
    return tuple(x * s for x in a)


def neg(a: Sequence[Fraction]) -> Vec:
    return tuple(-x for x in a)


def is_zero(a: Sequence[Fraction]) -> bool:
    return all(x == 0 for x in a)


def norm_sq(a: Sequence[Fraction]) -> Fraction:
    return sum((x * x for x in a), ZERO)


def matvec(m: Mat, v: Sequence[Fraction]) -> Vec:
    return tuple(dot(row, v) for row in m)


def matmul(a: Mat, b: Mat) -> Mat:
    bt = transpose(b)
    return tuple(tuple(dot(ra, cb) for cb in bt) for ra in a)


def transpose(m: Mat) -> Mat:
    if not m:
        return ()
    return tuple(zip(*m))


def identity(n: int) -> Mat:
    return tuple(tuple(ONE if i == j else ZERO for j in range(n)) for i in range(n))


def primitive(v: Sequence[Fraction]) -> Vec:
    """Scale to the integer vector with coprime entries, orientation kept."""
    den = 1
    for x in v:
        den = den * x.denominator // gcd(den, x.denominator)
    ints = [int(x * den) for x in v]
    g = 0
    for x in ints:
        g = gcd(g, abs(x))
    if g == 0:
        return tuple(ZERO for _ in v)
    return tuple(Fraction(x, g) for x in ints)


def canon_sign(v: Sequence[Fraction]) -> Vec:
    """Primitive vector with first nonzero entry positive (for lineality)."""
    p = primitive(v)
    for x in p:
        if x != 0:
            return p if x > 0 else neg(p)
    return p


def rref(m: Mat) -> tuple[Mat, list[int]]:
    """Reduced row-echelon form, returns (rows, pivot column indices)."""
    rows = [list(r) for r in m]
    nrows = len(rows)
    ncols = len(rows[0]) if nrows else 0
    pivots: list[int] = []
    r = 0
    for c in range(ncols):
        piv = None
        for i in range(r, nrows):
            if rows[i][c] != 0:
                piv = i
                break
        if piv is None:
            continue
        rows[r], rows[piv] = rows[piv], rows[r]
        inv = ONE / rows[r][c]
        rows[r] = [x * inv for x in rows[r]]
        for i in range(nrows):
            if i != r and rows[i][c] != 0:
                f = rows[i][c]
                rows[i] = [x - f * y for x, y in zip(rows[i], rows[r])]
        pivots.append(c)
        r += 1
        if r == nrows:
            break
    kept = tuple(tuple(row) for row in rows[:r])
    return kept, pivots


def rank(m: Mat) -> int:
    if not m:
        return 0
    return len(rref(m)[1])


def nullspace(m: Mat, n: int | None = None) -> Mat:
    """Basis of {x : m x = 0}; `n` gives the column count when m is empty."""
    if not m:
        if n is None:
            raise ValueError("need column count for empty matrix")
        return identity(n)
    ncols = len(m[0])
    red, pivots = rref(m)
    free = [c for c in range(ncols) if c not in pivots]
    basis = []
    for fc in free:
        v = [ZERO] * ncols
        v[fc] = ONE
        for ri, pc in enumerate(pivots):
            v[pc] = -red[ri][fc]
        basis.append(tuple(v))
    return tuple(basis)


def solve(m: Mat, b: Sequence[Fraction]) -> Vec | None:
    """One solution of m x = b, or None when inconsistent."""
    if not m:
        return None
    ncols = len(m[0])
    aug = tuple(tuple(row) + (bv,) for row, bv in zip(m, b))
    red, pivots = rref(aug)
    if ncols in pivots:
        return None
    x = [ZERO] * ncols
    for ri, pc in enumerate(pivots):
        x[pc] = red[ri][ncols]
    return tuple(x)


def inv(m: Mat) -> Mat | None:
    n = len(m)
    aug = tuple(tuple(row) + tuple(ONE if i == j else ZERO for j in range(n))
                for i, row in enumerate(m))
    red, pivots = rref(aug)
    if pivots != list(range(n)):
        return None
    return tuple(row[n:] for row in red)


def projector_onto_span(basis: Mat, n: int) -> Mat:
    """Orthogonal projector onto span of the given rows (rational)."""
    rows = [r for r in basis if not is_zero(r)]
    if not rows:
        return tuple(tuple(ZERO for _ in range(n)) for _ in range(n))
    b = tuple(rows)
    red, _ = rref(b)
    b = red  # independent spanning rows
    g = matmul(b, transpose(b))
    gi = inv(g)
    assert gi is not None
    return matmul(transpose(b), matmul(gi, b))


def project_onto_affine(eq_rows: Mat, eq_rhs: Vec, z: Vec) -> Vec | None:
    """Nearest point of {x : E x = f} to z; None when the system is infeasible."""
    aug = tuple(tuple(r) + (v,) for r, v in zip(eq_rows, eq_rhs))
    red, pivots = rref(aug)
    n = len(z)
    if n in pivots:
        return None
    rows = tuple(r[:n] for r in red)
    rhs = tuple(r[n] for r in red)
    if not rows:
        return z
    # z - E^T (E E^T)^{-1} (E z - f) with E of full row rank
    g = matmul(rows, transpose(rows))
    gi = inv(g)
    assert gi is not None
    resid = sub(matvec(rows, z), rhs)
    corr = matvec(transpose(rows), matvec(gi, resid))
    return sub(z, corr)


def sqrt_fraction(x: Fraction) -> float:
    """Float sqrt of a nonnegative rational, stable for huge numerators."""
    if x < 0:
        raise ValueError("negative")
    num, den = x.numerator, x.denominator
    # exact when possible
    rn, rd = isqrt(num), isqrt(den)
    if rn * rn == num and rd * rd == den:
        return rn / rd
    return float(num) ** 0.5 / float(den) ** 0.5
