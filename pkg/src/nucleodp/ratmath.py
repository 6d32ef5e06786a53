"""Exact linear algebra over the rationals and over prime fields."""

from __future__ import annotations

import enum
from fractions import Fraction
from typing import Iterable, Sequence

Rational = Fraction


class Singular(str, enum.Enum):
    """Outcome of :func:`solve_linear_system` when no unique solution exists."""

    INCONSISTENT = "inconsistent"
    UNDERDETERMINED = "underdetermined"


def format_rational(q: Fraction | int) -> str:
    q = Fraction(q)
    if q.denominator == 1:
        return str(q.numerator)
    return f"{q.numerator}/{q.denominator}"


def parse_rational(value: str | int | Fraction) -> Fraction:
    """Parse ``"p/q"``, ``"p"`` or an int. Floats are rejected to keep data exact."""
    if isinstance(value, bool):
        raise ValueError(f"not a rational: {value!r}")
    if isinstance(value, (int, Fraction)):
        return Fraction(value)
    if not isinstance(value, str):
        raise ValueError(f"not a rational: {value!r}")
    text = value.strip()
    num, sep, den = text.partition("/")
    try:
        if sep:
            q = Fraction(int(num), int(den))
        else:
            q = Fraction(int(num))
    except (ValueError, ZeroDivisionError) as exc:
        raise ValueError(f"not a rational: {value!r}") from exc
    return q


def _to_fraction_rows(M: Iterable[Sequence]) -> list[list[Fraction]]:
    return [[Fraction(v) for v in row] for row in M]


def _rref(rows: list[list[Fraction]], ncols: int) -> list[int]:
    """Reduce ``rows`` in place to reduced row echelon form; return pivot columns."""
    pivots: list[int] = []
    r = 0
    for c in range(ncols):
        if r == len(rows):
            break
        k = next((i for i in range(r, len(rows)) if rows[i][c] != 0), None)
        if k is None:
            continue
        rows[r], rows[k] = rows[k], rows[r]
        piv = rows[r][c]
        if piv != 1:
            rows[r] = [v / piv for v in rows[r]]
        prow = rows[r]
        for i in range(len(rows)):
            if i != r and rows[i][c] != 0:
                f = rows[i][c]
                rows[i] = [a - f * b for a, b in zip(rows[i], prow)]
        pivots.append(c)
        r += 1
    return pivots


def rank_over_q(M: Iterable[Sequence]) -> int:
    rows = _to_fraction_rows(M)
    if not rows:
        return 0
    return len(_rref(rows, len(rows[0])))


class RationalSpan:
    """Incrementally maintained row space over Q with cheap membership tests."""

    def __init__(self, dim: int, vectors: Iterable[Sequence] = ()):
        self.dim = dim
        self._basis: list[tuple[int, list[Fraction]]] = []  # (pivot column, row)
        for v in vectors:
            self.add(v)

    @property
    def rank(self) -> int:
        return len(self._basis)

    def _reduce(self, v: Sequence) -> list[Fraction]:
        if len(v) != self.dim:
            raise ValueError(f"vector length {len(v)} != {self.dim}")
        w = [Fraction(a) for a in v]
        for c, row in self._basis:
            f = w[c]
            if f:
                w = [a - f * b for a, b in zip(w, row)]
        return w

    def contains(self, v: Sequence) -> bool:
        return not any(self._reduce(v))

    def add(self, v: Sequence) -> bool:
        """Add ``v``; return True when it enlarged the span."""
        w = self._reduce(v)
        c = next((i for i, a in enumerate(w) if a), None)
        if c is None:
            return False
        piv = w[c]
        w = [a / piv for a in w]
        for k, (bc, row) in enumerate(self._basis):
            f = row[c]
            if f:
                self._basis[k] = (bc, [a - f * b for a, b in zip(row, w)])
        self._basis.append((c, w))
        return True


def in_span_over_q(v: Sequence, V: Sequence[Sequence]) -> bool:
    return RationalSpan(len(v), V).contains(v)


def rank_mod_p(M: Iterable[Sequence[int]], p: int) -> int:
    rows = [[int(a) % p for a in row] for row in M]
    if not rows:
        return 0
    return len(_rref_mod_p(rows, len(rows[0]), p))


def _rref_mod_p(rows: list[list[int]], ncols: int, p: int) -> list[int]:
    pivots: list[int] = []
    r = 0
    for c in range(ncols):
        if r == len(rows):
            break
        k = next((i for i in range(r, len(rows)) if rows[i][c]), None)
        if k is None:
            continue
        rows[r], rows[k] = rows[k], rows[r]
        inv = pow(rows[r][c], -1, p)
        rows[r] = [(a * inv) % p for a in rows[r]]
        prow = rows[r]
        for i in range(len(rows)):
            f = rows[i][c]
            if i != r and f:
                rows[i] = [(a - f * b) % p for a, b in zip(rows[i], prow)]
        pivots.append(c)
        r += 1
    return pivots


def orthogonal_basis_mod_p(V: Sequence[Sequence[int]], n: int, p: int) -> list[tuple[int, ...]]:
    """Basis of ``{u in F_p^n : u.v = 0 mod p for all v in V}``.

    This is the null space of the matrix whose rows are ``V``; one basis vector
    per free column of its reduced echelon form.
    """
    rows = [[int(a) % p for a in v] for v in V]
    for v in rows:
        if len(v) != n:
            raise ValueError(f"vector length {len(v)} != {n}")
    pivots = _rref_mod_p(rows, n, p) if rows else []
    pivot_set = set(pivots)
    basis = []
    for free in range(n):
        if free in pivot_set:
            continue
        u = [0] * n
        u[free] = 1
        for r, c in enumerate(pivots):
            u[c] = (-rows[r][free]) % p
        basis.append(tuple(u))
    return basis


def solve_linear_system(A: Sequence[Sequence], rhs: Sequence) -> tuple[Fraction, ...] | Singular:
    """Exact solution of ``A x = rhs`` when it is unique."""
    if len(A) != len(rhs):
        raise ValueError("row count of A and rhs differ")
    if not A:
        return Singular.UNDERDETERMINED
    ncols = len(A[0])
    rows = [[Fraction(a) for a in row] + [Fraction(b)] for row, b in zip(A, rhs)]
    pivots = _rref(rows, ncols + 1)
    if ncols in pivots:
        return Singular.INCONSISTENT
    if len(pivots) < ncols:
        return Singular.UNDERDETERMINED
    return tuple(rows[i][ncols] for i in range(ncols))


def dot(u: Sequence, v: Sequence):
    return sum(a * b for a, b in zip(u, v))
