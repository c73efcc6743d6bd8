"""Exact sparse linear algebra over the rationals.

Everything downstream (homology of complexes, solving in spans, operation
tables on homology bases) reduces to the routines here.  All arithmetic is
over ``fractions.Fraction``; there is no floating point anywhere.  Outputs
are deterministic: row reduction produces the (unique) reduced row echelon
form, so kernels, images and homology presentations are canonical.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

Q = Fraction

ZERO = Fraction(0)
ONE = Fraction(1)


class NotAComplexError(Exception):
    """d_out o d_in != 0; carries the offending column index."""

    def __init__(self, column: int):
        self.column = column
        super().__init__(f"composition nonzero on column {column}: not a complex")


class DimensionMismatchError(Exception):
    pass


def _as_fraction(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    return Fraction(x)


class ExactMatrix:
    """Sparse matrix over Q; entries stored as {(row, col): Fraction}, no zeros."""

    __slots__ = ("rows", "cols", "entries")

    def __init__(self, rows: int, cols: int, entries: dict[tuple[int, int], Fraction] | None = None):
        self.rows = rows
        self.cols = cols
        self.entries: dict[tuple[int, int], Fraction] = {}
        if entries:
            for (i, j), v in entries.items():
                if not (0 <= i < rows and 0 <= j < cols):
                    raise IndexError(f"entry ({i},{j}) out of range for {rows}x{cols}")
                v = _as_fraction(v)
                if v != 0:
                    self.entries[(i, j)] = v

    @classmethod
    def from_rows(cls, data: Sequence[Sequence]) -> "ExactMatrix":
        rows = len(data)
        cols = len(data[0]) if rows else 0
        entries = {}
        for i, row in enumerate(data):
            if len(row) != cols:
                raise DimensionMismatchError("ragged rows")
            for j, v in enumerate(row):
                v = _as_fraction(v)
                if v != 0:
                    entries[(i, j)] = v
        return cls(rows, cols, entries)

    @classmethod
    def from_columns(cls, columns: Sequence[Sequence], rows: int | None = None) -> "ExactMatrix":
        if rows is None:
            rows = len(columns[0]) if columns else 0
        entries = {}
        for j, col in enumerate(columns):
            if len(col) != rows:
                raise DimensionMismatchError("ragged columns")
            for i, v in enumerate(col):
                v = _as_fraction(v)
                if v != 0:
                    entries[(i, j)] = v
        return cls(rows, len(columns), entries)

    @classmethod
    def zero(cls, rows: int, cols: int) -> "ExactMatrix":
        return cls(rows, cols, {})

    @classmethod
    def identity(cls, n: int) -> "ExactMatrix":
        return cls(n, n, {(i, i): ONE for i in range(n)})

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, ExactMatrix)
            and self.rows == other.rows
            and self.cols == other.cols
            and self.entries == other.entries
        )

    def __repr__(self) -> str:
        return f"ExactMatrix({self.rows}x{self.cols}, {len(self.entries)} nonzero)"

    def is_zero(self) -> bool:
        return not self.entries

    def column(self, j: int) -> tuple[Fraction, ...]:
        return tuple(self.entries.get((i, j), ZERO) for i in range(self.rows))

    def columns(self) -> list[tuple[Fraction, ...]]:
        return [self.column(j) for j in range(self.cols)]

    def row_dicts(self) -> list[dict[int, Fraction]]:
        rows: list[dict[int, Fraction]] = [dict() for _ in range(self.rows)]
        for (i, j), v in self.entries.items():
            rows[i][j] = v
        return rows

    def transpose(self) -> "ExactMatrix":
        return ExactMatrix(self.cols, self.rows, {(j, i): v for (i, j), v in self.entries.items()})

    def matmul(self, other: "ExactMatrix") -> "ExactMatrix":
        if self.cols != other.rows:
            raise DimensionMismatchError(f"{self.rows}x{self.cols} @ {other.rows}x{other.cols}")
        # group other's entries by row for sparse accumulation
        by_row: dict[int, list[tuple[int, Fraction]]] = {}
        for (k, j), v in other.entries.items():
            by_row.setdefault(k, []).append((j, v))
        acc: dict[tuple[int, int], Fraction] = {}
        for (i, k), a in self.entries.items():
            for j, b in by_row.get(k, ()):
                key = (i, j)
                s = acc.get(key, ZERO) + a * b
                if s == 0:
                    acc.pop(key, None)
                else:
                    acc[key] = s
        return ExactMatrix(self.rows, other.cols, acc)

    def apply(self, vec: Sequence[Fraction]) -> tuple[Fraction, ...]:
        if len(vec) != self.cols:
            raise DimensionMismatchError("vector length != cols")
        out = [ZERO] * self.rows
        for (i, j), v in self.entries.items():
            c = vec[j]
            if c:
                out[i] += v * c
        return tuple(out)

    def rank(self) -> int:
        reduced, pivots = rref(self.row_dicts(), self.cols)
        return len(pivots)


def rref(rows: Iterable[dict[int, Fraction]], ncols: int) -> tuple[list[dict[int, Fraction]], list[int]]:
    """Reduced row echelon form of sparse rows.

    Returns (nonzero reduced rows sorted by pivot column, pivot columns).
    The RREF is unique, hence the output is canonical for the row span.
    """
    reduced: list[dict[int, Fraction]] = []  # rows with pivots, kept normalized
    pivots: list[int] = []
    for row in rows:
        r = dict(row)
        # eliminate against existing pivots
        for p, pr in zip(pivots, reduced):
            c = r.get(p)
            if c:
                for j, v in pr.items():
                    s = r.get(j, ZERO) - c * v
                    if s == 0:
                        r.pop(j, None)
                    else:
                        r[j] = s
        if not r:
            continue
        p = min(r)
        inv = ONE / r[p]
        r = {j: v * inv for j, v in r.items()}
        # back-substitute into existing rows
        for idx, (q, pr) in enumerate(zip(pivots, reduced)):
            c = pr.get(p)
            if c:
                for j, v in r.items():
                    s = pr.get(j, ZERO) - c * v
                    if s == 0:
                        pr.pop(j, None)
                    else:
                        pr[j] = s
        pivots.append(p)
        reduced.append(r)
    order = sorted(range(len(pivots)), key=lambda k: pivots[k])
    return [reduced[k] for k in order], sorted(pivots)


def _row_to_vec(row: dict[int, Fraction], n: int) -> tuple[Fraction, ...]:
    return tuple(row.get(j, ZERO) for j in range(n))


def kernel_basis(M: ExactMatrix) -> list[tuple[Fraction, ...]]:
    """Canonical basis of ker M, ordered by free column index.

    Built from the RREF of M: one vector per free column, with unit entry at
    the free column and the negated pivot-row coefficients above it.
    """
    reduced, pivots = rref(M.row_dicts(), M.cols)
    pivot_set = set(pivots)
    basis = []
    for f in range(M.cols):
        if f in pivot_set:
            continue
        vec = [ZERO] * M.cols
        vec[f] = ONE
        for p, row in zip(pivots, reduced):
            c = row.get(f)
            if c:
                vec[p] = -c
        basis.append(tuple(vec))
    return basis


def span_basis(vectors: Iterable[Sequence[Fraction]], dim: int) -> list[tuple[Fraction, ...]]:
    """Canonical (RREF) basis of the span of the given vectors."""
    rows = []
    for v in vectors:
        if len(v) != dim:
            raise DimensionMismatchError("vector length mismatch")
        rows.append({j: _as_fraction(c) for j, c in enumerate(v) if c != 0})
    reduced, _ = rref(rows, dim)
    return [_row_to_vec(r, dim) for r in reduced]


def image_basis(M: ExactMatrix) -> list[tuple[Fraction, ...]]:
    """Canonical basis of the column space of M."""
    return span_basis(M.columns(), M.rows)


def solve_in_span(vectors: Sequence[Sequence[Fraction]], target: Sequence[Fraction]):
    """Coefficients expressing target in the span of vectors, or None.

    Raises DimensionMismatchError if the vectors and target do not share a
    dimension.  The returned coefficients reproduce the target exactly.
    """
    if not vectors:
        if any(_as_fraction(c) != 0 for c in target):
            return None
        return ()
    dim = len(vectors[0])
    for v in vectors:
        if len(v) != dim:
            raise DimensionMismatchError("span vectors of unequal dimension")
    if len(target) != dim:
        raise DimensionMismatchError("target dimension mismatch")
    # eliminate rows of [v | e_k] so the augmented part tracks coefficients
    n = len(vectors)
    rows = []
    for k, v in enumerate(vectors):
        r = {j: _as_fraction(c) for j, c in enumerate(v) if c != 0}
        r[dim + k] = ONE
        rows.append(r)
    reduced, pivots = rref(rows, dim + n)
    t = {j: _as_fraction(c) for j, c in enumerate(target) if c != 0}
    coeffs = [ZERO] * n
    for p, row in zip(pivots, reduced):
        if p >= dim:
            continue
        c = t.get(p)
        if not c:
            continue
        for j, v in row.items():
            if j < dim:
                s = t.get(j, ZERO) - c * v
                if s == 0:
                    t.pop(j, None)
                else:
                    t[j] = s
            else:
                coeffs[j - dim] += c * v
    if t:
        return None
    return tuple(coeffs)


@dataclass(frozen=True)
class HomologyPresentation:
    """A chosen basis of ker(d_out)/im(d_in) with a deterministic reduction.

    ``cycle_basis`` holds homology representatives, ``boundary_basis`` the
    canonical image basis; ``reduce`` maps any cycle to its coordinates in
    the homology basis (zero on boundaries, e_i on the i-th representative).
    """

    ambient_dim: int
    cycle_basis: tuple[tuple[Fraction, ...], ...]
    boundary_basis: tuple[tuple[Fraction, ...], ...]

    @property
    def dim(self) -> int:
        return len(self.cycle_basis)

    def reduce(self, vec: Sequence[Fraction]) -> tuple[Fraction, ...]:
        """Coordinates of a cycle in the homology basis.

        Raises ValueError if vec is not in the cycle space modulo boundaries
        (i.e. not expressible at all).
        """
        gens = list(self.boundary_basis) + list(self.cycle_basis)
        coeffs = solve_in_span(gens, vec)
        if coeffs is None:
            raise ValueError("vector is not a cycle of this presentation")
        nb = len(self.boundary_basis)
        return tuple(coeffs[nb:])

    def is_zero_class(self, vec: Sequence[Fraction]) -> bool:
        return all(c == 0 for c in self.reduce(vec))


def homology_presentation(d_in: ExactMatrix, d_out: ExactMatrix) -> HomologyPresentation:
    """Presentation of ker(d_out)/im(d_in); checks d_out o d_in = 0 first."""
    if d_in.cols and d_out.rows is not None:
        if d_in.rows != d_out.cols:
            raise DimensionMismatchError("d_in target dimension != d_out source dimension")
        comp = d_out.matmul(d_in)
        if not comp.is_zero():
            bad = min(j for (_, j) in comp.entries)
            raise NotAComplexError(bad)
    dim = d_out.cols
    kernel = kernel_basis(d_out)
    boundaries = image_basis(d_in)
    # representatives: kernel vectors reduced mod boundaries, then RREF'd for
    # canonical, mutually reduced output
    brows = [{j: c for j, c in enumerate(b) if c != 0} for b in boundaries]
    bred, bpivots = rref(brows, dim)
    candidates = []
    for v in kernel:
        r = {j: c for j, c in enumerate(v) if c != 0}
        for p, row in zip(bpivots, bred):
            c = r.get(p)
            if c:
                for j, w in row.items():
                    s = r.get(j, ZERO) - c * w
                    if s == 0:
                        r.pop(j, None)
                    else:
                        r[j] = s
        if r:
            candidates.append(r)
    hred, _ = rref(candidates, dim)
    reps = tuple(_row_to_vec(r, dim) for r in hred)
    rank_in = len(boundaries)
    if len(reps) != len(kernel) - rank_in:
        raise AssertionError("homology dimension bookkeeping failed")
    return HomologyPresentation(dim, reps, tuple(boundaries))
