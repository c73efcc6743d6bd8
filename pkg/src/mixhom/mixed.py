"""Mixed complexes and their cyclic homologies.

A :class:`MixedComplexSlice` is a finite bigraded window (degree, weight) of
a mixed complex with its b and B matrices; the axioms b² = B² = bB + Bb = 0
are checked exhaustively at construction.  All four sources used here
(Hochschild chains, dual Hochschild cochains of a Frobenius algebra,
Poisson chains, dual Poisson cochains) preserve the weight, and each
weight-w sub-slice is a complete bounded complex, so homology within the
window is exact.

Negative cyclic homology is computed from the u-truncated complex
(C ⊗ k[u]/u^{N+1}, b + uB); a stabilization report compares truncations N
and N+1 and flags unstable (degree, weight) pieces.  The connecting map β
follows the chain-level recipe: lift a b-cycle, apply b + uB, divide by u.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from .algebra import GradedAlgebra
from .hochschild import (
    B_star,
    DualCochain,
    boundary_b,
    chain_basis,
    connes_B,
    dual_coboundary,
    shifted_degree,
)
from .linalg import ExactMatrix, HomologyPresentation, homology_presentation
from . import poisson as po

Q = Fraction

Piece = tuple[int, int]  # (degree, weight)


class SliceAxiomError(Exception):
    def __init__(self, identity: str, piece: Piece, label):
        self.identity = identity
        self.piece = piece
        self.label = label
        super().__init__(f"{identity} fails at {piece} on basis element {label!r}")


class MixedComplexSlice:
    """Finite bigraded window of a mixed complex with b (deg -1) and B (deg +1)."""

    def __init__(self, pieces: dict[Piece, list], b_mats: dict[Piece, ExactMatrix],
                 B_mats: dict[Piece, ExactMatrix], name: str = "mixed"):
        self.pieces = {k: list(v) for k, v in pieces.items() if v}
        self.b_mats = b_mats
        self.B_mats = B_mats
        self.name = name
        self._hh: dict[Piece, HomologyPresentation] = {}
        self._validate()

    def dim(self, piece: Piece) -> int:
        return len(self.pieces.get(piece, ()))

    def degrees(self) -> list[int]:
        return sorted({d for (d, _w) in self.pieces})

    def weights(self) -> list[int]:
        return sorted({w for (_d, w) in self.pieces})

    def b_matrix(self, piece: Piece) -> ExactMatrix:
        got = self.b_mats.get(piece)
        if got is None:
            d, w = piece
            return ExactMatrix.zero(self.dim((d - 1, w)), self.dim(piece))
        return got

    def B_matrix(self, piece: Piece) -> ExactMatrix:
        got = self.B_mats.get(piece)
        if got is None:
            d, w = piece
            return ExactMatrix.zero(self.dim((d + 1, w)), self.dim(piece))
        return got

    def _validate(self):
        for (d, w) in self.pieces:
            b1 = self.b_matrix((d, w))
            b2 = self.b_matrix((d - 1, w))
            if not b2.matmul(b1).is_zero():
                bad = min(j for (_, j) in b2.matmul(b1).entries)
                raise SliceAxiomError("b²=0", (d, w), self.pieces[(d, w)][bad])
            B1 = self.B_matrix((d, w))
            B2 = self.B_matrix((d + 1, w))
            if not B2.matmul(B1).is_zero():
                bad = min(j for (_, j) in B2.matmul(B1).entries)
                raise SliceAxiomError("B²=0", (d, w), self.pieces[(d, w)][bad])
            anti = self.b_matrix((d + 1, w)).matmul(B1)
            for (i, j), v in self.B_matrix((d - 1, w)).matmul(b1).entries.items():
                cur = anti.entries.get((i, j), Q(0)) + v
                if cur == 0:
                    anti.entries.pop((i, j), None)
                else:
                    anti.entries[(i, j)] = cur
            if anti.entries:
                bad = min(j for (_, j) in anti.entries)
                raise SliceAxiomError("bB+Bb=0", (d, w), self.pieces[(d, w)][bad])

    # -- b-homology ---------------------------------------------------------

    def hh(self, piece: Piece) -> HomologyPresentation:
        if piece not in self._hh:
            d, w = piece
            self._hh[piece] = homology_presentation(
                self.b_matrix((d + 1, w)), self.b_matrix(piece)
            )
        return self._hh[piece]

    def hh_dims(self) -> dict[Piece, int]:
        return {p: self.hh(p).dim for p in sorted(self.pieces)}

    def element_vector(self, piece: Piece, element: dict) -> tuple[Fraction, ...]:
        labels = self.pieces.get(piece, [])
        idx = {t: i for i, t in enumerate(labels)}
        vec = [Q(0)] * len(labels)
        for t, c in element.items():
            if c == 0:
                continue
            if t not in idx:
                raise KeyError(f"label {t!r} not in piece {piece}")
            vec[idx[t]] = c
        return tuple(vec)


# -- slice builders ------------------------------------------------------------


def _mats_from_operator(pieces: dict[Piece, list], apply_op, shift: int) -> dict[Piece, ExactMatrix]:
    index = {piece: {t: i for i, t in enumerate(labels)} for piece, labels in pieces.items()}
    mats: dict[Piece, ExactMatrix] = {}
    for (d, w), labels in pieces.items():
        tgt = (d + shift, w)
        tgt_idx = index.get(tgt, {})
        entries = {}
        for j, t in enumerate(labels):
            out = apply_op(t)
            for s, c in out.items():
                if c == 0:
                    continue
                if s not in tgt_idx:
                    raise KeyError(
                        f"operator image leaves the window: {s!r} from {t!r} at {(d, w)}"
                    )
                entries[(tgt_idx[s], j)] = c
        mats[(d, w)] = ExactMatrix(len(pieces.get(tgt, ())), len(labels), entries)
    return mats


def slice_from_hochschild(A: GradedAlgebra, w_max: int, name: str | None = None) -> MixedComplexSlice:
    """Mixed complex of reduced Hochschild chains, weights <= w_max."""
    pieces: dict[Piece, list] = {}
    for w in range(w_max + 1):
        for p in range(w + 1):
            for t in chain_basis(A, p, w):
                pieces.setdefault((shifted_degree(A, t), w), []).append(t)
    for labels in pieces.values():
        labels.sort()
    b_mats = _mats_from_operator(pieces, lambda t: boundary_b(A, {t: Q(1)}), -1)
    B_mats = _mats_from_operator(pieces, lambda t: connes_B(A, {t: Q(1)}), +1)
    return MixedComplexSlice(pieces, b_mats, B_mats, name or f"hochschild({A.name})")


def slice_from_hochschild_dual(A: GradedAlgebra, w_max: int, name: str | None = None) -> MixedComplexSlice:
    """Mixed complex of dual Hochschild cochains (functionals on chains).

    The piece (d, w) holds the dual basis of the chains of degree -d and
    weight w; the differentials are the twisted transposes of b and B.
    """
    chain_pieces: dict[Piece, list] = {}
    for w in range(w_max + 1):
        for p in range(w + 1):
            for t in chain_basis(A, p, w):
                chain_pieces.setdefault((shifted_degree(A, t), w), []).append(t)
    for labels in chain_pieces.values():
        labels.sort()
    pieces = {(-d, w): labels for (d, w), labels in chain_pieces.items()}
    all_chains = [t for labels in chain_pieces.values() for t in labels]

    def dual_b(t):
        # functional degree of the dual basis vector of chain t
        deg = -shifted_degree(A, t)
        phi = DualCochain(A, deg, {t: Q(1)})
        return dual_coboundary(phi, all_chains).table

    def dual_B(t):
        deg = -shifted_degree(A, t)
        phi = DualCochain(A, deg, {t: Q(1)})
        return B_star(phi, all_chains).table

    b_mats = _mats_from_operator(pieces, dual_b, -1)
    B_mats = _mats_from_operator(pieces, dual_B, +1)
    return MixedComplexSlice(pieces, b_mats, B_mats, name or f"hochschild-dual({A.name})")


def slice_from_poisson(ctx: po.PoissonContext, pi: dict, w_max: int, name: str | None = None) -> MixedComplexSlice:
    """Mixed Poisson chain complex (Ω, ∂, d) of a polynomial-side structure."""
    po.check_jacobi(ctx, pi)
    F = ctx.forms
    pieces: dict[Piece, list] = {}
    for m in F.monomials([w_max] * ctx.n + [1] * ctx.n):
        w = F.weight(m)
        if w <= w_max:
            pieces.setdefault((F.degree(m), w), []).append(m)
    for labels in pieces.values():
        labels.sort()
    b_mats = _mats_from_operator(pieces, lambda m: po.poisson_boundary(ctx, pi, {m: Q(1)}), -1)
    B_mats = _mats_from_operator(pieces, lambda m: po.de_rham(ctx, {m: Q(1)}), +1)
    return MixedComplexSlice(pieces, b_mats, B_mats, name or f"poisson({ctx.n})")


def slice_from_poisson_dual(dual: po.DualSide, name: str | None = None) -> MixedComplexSlice:
    """Mixed dual Poisson cochain complex (functionals on exterior-side forms)."""
    F = dual.ctx.forms
    pieces: dict[Piece, list] = {}
    for m in dual.domain:
        pieces.setdefault((-F.degree(m), F.weight(m)), []).append(m)
    for labels in pieces.values():
        labels.sort()
    b_mats = _mats_from_operator(pieces, lambda m: dual.coboundary({m: Q(1)}), -1)
    B_mats = _mats_from_operator(pieces, lambda m: dual.d_star({m: Q(1)}), +1)
    return MixedComplexSlice(pieces, b_mats, B_mats, name or f"poisson-dual({dual.ctx.n})")


def make_mixed(source: str, *, algebra=None, ctx=None, pi=None, dual=None, w_max: int = 4) -> MixedComplexSlice:
    """Dispatch to one of the four mixed-complex constructions."""
    if source == "hochschild":
        return slice_from_hochschild(algebra, w_max)
    if source == "hochschild-dual":
        return slice_from_hochschild_dual(algebra, w_max)
    if source == "poisson":
        return slice_from_poisson(ctx, pi, w_max)
    if source == "poisson-dual":
        return slice_from_poisson_dual(dual)
    raise ValueError(f"unknown mixed-complex source {source!r}")


# -- negative cyclic homology ----------------------------------------------------


@dataclass
class NegativeCyclic:
    """HC⁻ of a slice via the u-truncated complex, with π* and β.

    A degree-d class has components x_i in degree d + 2i for u-powers
    i <= N; the truncated differential drops the u^{N+1} overflow, and the
    stabilization report marks the (degree, weight) pieces whose dimension
    changes between truncation orders N and N+1.
    """

    slice: MixedComplexSlice
    N: int
    pres: dict[Piece, HomologyPresentation] = field(default_factory=dict)
    stable: dict[Piece, bool] = field(default_factory=dict)

    def __post_init__(self):
        dims_N = self._compute(self.N)
        dims_N1 = self._compute(self.N + 1, presentations=False)
        for piece in self.pres:
            self.stable[piece] = dims_N[piece] == dims_N1.get(piece, 0)

    # basis of the truncated complex in degree d: pairs (i, index into piece)
    def stacked_basis(self, d: int, w: int, N: int | None = None) -> list[tuple[int, int]]:
        N = self.N if N is None else N
        out = []
        for i in range(N + 1):
            for k in range(self.slice.dim((d + 2 * i, w))):
                out.append((i, k))
        return out

    def _matrix(self, d: int, w: int, N: int) -> ExactMatrix:
        src = self.stacked_basis(d, w, N)
        tgt = self.stacked_basis(d - 1, w, N)
        tgt_idx = {t: i for i, t in enumerate(tgt)}
        entries = {}
        for j, (i, k) in enumerate(src):
            bm = self.slice.b_matrix((d + 2 * i, w))
            for (r, c), v in bm.entries.items():
                if c == k and (i, r) in tgt_idx:
                    entries[(tgt_idx[(i, r)], j)] = v
            if i + 1 <= N:
                Bm = self.slice.B_matrix((d + 2 * i, w))
                for (r, c), v in Bm.entries.items():
                    if c == k and (i + 1, r) in tgt_idx:
                        entries[(tgt_idx[(i + 1, r)], j)] = v
        return ExactMatrix(len(tgt), len(src), entries)

    def _compute(self, N: int, presentations: bool = True) -> dict[Piece, int]:
        dims: dict[Piece, int] = {}
        degrees = self.slice.degrees()
        weights = self.slice.weights()
        if not degrees:
            return dims
        d_lo, d_hi = min(degrees), max(degrees)
        for w in weights:
            for d in range(d_lo - 2 * N, d_hi + 1):
                if not self.stacked_basis(d, w, N):
                    continue
                d_in = self._matrix(d + 1, w, N)
                d_out = self._matrix(d, w, N)
                pres = homology_presentation(d_in, d_out)
                dims[(d, w)] = pres.dim
                if presentations:
                    self.pres[(d, w)] = pres
        return dims

    def dims(self) -> dict[Piece, int]:
        return {p: v.dim for p, v in sorted(self.pres.items())}

    def stable_dims(self) -> dict[Piece, int]:
        return {p: v.dim for p, v in sorted(self.pres.items()) if self.stable.get(p)}

    def stable_pieces(self) -> list[Piece]:
        return [p for p in sorted(self.pres) if self.stable.get(p)]

    # -- the long exact sequence maps ---------------------------------------

    def pi_star(self, piece: Piece, coords) -> tuple[Fraction, ...]:
        """HC⁻ class (coordinates in pres) -> b-homology class of the u⁰ part."""
        d, w = piece
        pres = self.pres[piece]
        vec = [Q(0)] * pres.ambient_dim
        for c, rep in zip(coords, pres.cycle_basis):
            if c:
                for i, v in enumerate(rep):
                    vec[i] += c * v
        x0 = vec[: self.slice.dim((d, w))]
        return self.slice.hh((d, w)).reduce(tuple(x0))

    def beta(self, piece: Piece, coords) -> tuple[Fraction, ...]:
        """b-homology class -> HC⁻ class of B(representative) one degree up.

        The chain-level recipe: lift the cycle, apply b + uB, divide by u;
        on a b-cycle x that is (b + uB)(x) = u·B(x), so the class of B(x)
        viewed as the constant term of an HC⁻ cycle in degree d + 1.
        """
        d, w = piece
        hh = self.slice.hh((d, w))
        rep = [Q(0)] * hh.ambient_dim
        for c, r in zip(coords, hh.cycle_basis):
            if c:
                for i, v in enumerate(r):
                    rep[i] += c * v
        img = self.slice.B_matrix((d, w)).apply(tuple(rep))
        target = self.pres.get((d + 1, w))
        if target is None:
            if not any(img):
                return ()
            raise KeyError(f"no HC⁻ presentation at {(d + 1, w)}")
        stacked = self.stacked_basis(d + 1, w)
        vec = [Q(0)] * len(stacked)
        for idx, val in enumerate(img):
            if val:
                vec[stacked.index((0, idx))] = val
        return target.reduce(tuple(vec))

    def hh_class_vector(self, piece: Piece, coords) -> tuple[Fraction, ...]:
        hh = self.slice.hh(piece)
        rep = [Q(0)] * hh.ambient_dim
        for c, r in zip(coords, hh.cycle_basis):
            if c:
                for i, v in enumerate(r):
                    rep[i] += c * v
        return tuple(rep)


@dataclass
class LESReport:
    beta_after_pi_zero: bool
    pi_after_beta_is_B: bool
    kernel_beta_is_image_pi: bool
    failures: list[str]

    @property
    def passed(self) -> bool:
        return self.beta_after_pi_zero and self.pi_after_beta_is_B and self.kernel_beta_is_image_pi


def les_check(hc: NegativeCyclic) -> LESReport:
    """Long-exact-sequence diagnostics on every stable piece.

    β∘π* = 0, π*∘β = B (on b-homology classes), and rank bookkeeping
    ker β = im π* per piece.  Pieces flagged unstable by the truncation
    comparison are excluded: their coordinates are truncation artifacts.
    """
    sl = hc.slice
    failures: list[str] = []
    ok_bp = ok_pb = ok_rank = True
    for piece in hc.stable_pieces():
        d, w = piece
        if not hc.stable.get((d + 1, w), (d + 1, w) not in hc.pres):
            continue
        pres = hc.pres[piece]
        # β∘π* on every HC⁻ basis class
        for i in range(pres.dim):
            coords = tuple(Q(1) if j == i else Q(0) for j in range(pres.dim))
            hh_coords = hc.pi_star(piece, coords)
            if any(hh_coords) and (d + 1, w) in hc.pres:
                img = hc.beta(piece, hh_coords)
                if any(img):
                    ok_bp = False
                    failures.append(f"β∘π* ≠ 0 at {piece} class {i}")
        # π*∘β = B on every HH basis class
        hh = sl.hh(piece)
        if (d + 1, w) in hc.pres:
            for i in range(hh.dim):
                coords = tuple(Q(1) if j == i else Q(0) for j in range(hh.dim))
                bcls = hc.beta(piece, coords)
                lhs = hc.pi_star((d + 1, w), bcls)
                rep = hc.hh_class_vector(piece, coords)
                rhs = sl.hh((d + 1, w)).reduce(sl.B_matrix(piece).apply(rep))
                if lhs != rhs:
                    ok_pb = False
                    failures.append(f"π*∘β ≠ B at {piece} class {i}")
        # rank bookkeeping: dim ker β = rank π* on HH at this piece
        if (d + 1, w) in hc.pres:
            beta_cols = []
            for i in range(hh.dim):
                coords = tuple(Q(1) if j == i else Q(0) for j in range(hh.dim))
                beta_cols.append(hc.beta(piece, coords))
            rank_beta = (
                ExactMatrix.from_columns(beta_cols).rank() if beta_cols and any(any(c) for c in beta_cols) else 0
            )
            pi_cols = []
            for i in range(pres.dim):
                coords = tuple(Q(1) if j == i else Q(0) for j in range(pres.dim))
                pi_cols.append(hc.pi_star(piece, coords))
            rank_pi = (
                ExactMatrix.from_columns(pi_cols).rank() if pi_cols and any(any(c) for c in pi_cols) else 0
            )
            if hh.dim - rank_beta != rank_pi:
                ok_rank = False
                failures.append(f"ker β ≠ im π* at {piece}: dim HH {hh.dim}, rk β {rank_beta}, rk π* {rank_pi}")
    return LESReport(ok_bp, ok_pb, ok_rank, failures)


# -- cyclic and periodic ----------------------------------------------------------


def cyclic_homology(sl: MixedComplexSlice) -> dict[Piece, int]:
    """HC of the slice: (C[u,u⁻¹]/uC[u], b + uB), exact since C is bounded."""
    degrees = sl.degrees()
    weights = sl.weights()
    dims: dict[Piece, int] = {}
    if not degrees:
        return dims
    d_lo, d_hi = min(degrees), max(degrees)

    def basis(d, w):
        out = []
        i = 0
        while d - 2 * i >= d_lo:
            for k in range(sl.dim((d - 2 * i, w))):
                out.append((i, k))
            i += 1
        return out

    def matrix(d, w):
        src = basis(d, w)
        tgt = basis(d - 1, w)
        tgt_idx = {t: i for i, t in enumerate(tgt)}
        entries = {}
        for j, (i, k) in enumerate(src):
            for (r, c), v in sl.b_matrix((d - 2 * i, w)).entries.items():
                if c == k and (i, r) in tgt_idx:
                    entries[(tgt_idx[(i, r)], j)] = v
            if i - 1 >= 0:
                for (r, c), v in sl.B_matrix((d - 2 * i, w)).entries.items():
                    if c == k and (i - 1, r) in tgt_idx:
                        entries[(tgt_idx[(i - 1, r)], j)] = v
        return ExactMatrix(len(tgt), len(src), entries)

    for w in weights:
        for d in range(d_lo, d_hi + 2 * (d_hi - d_lo) + 1):
            if not basis(d, w):
                continue
            dims[(d, w)] = homology_presentation(matrix(d + 1, w), matrix(d, w)).dim
    return dims


def periodic_homology(sl: MixedComplexSlice, N: int) -> tuple[dict[Piece, int], list[int]]:
    """Periodic cyclic homology on the Laurent window u^{-N}..u^{N}.

    Returns (dims, unreliable_degrees): degrees within 2 of the window edge
    are reported as unreliable, since the full periodic complex uses
    unbounded Laurent series.
    """
    degrees = sl.degrees()
    weights = sl.weights()
    dims: dict[Piece, int] = {}
    if not degrees:
        return dims, []
    d_lo, d_hi = min(degrees), max(degrees)

    def basis(d, w):
        out = []
        for i in range(-N, N + 1):
            for k in range(sl.dim((d + 2 * i, w))):
                out.append((i, k))
        return out

    def matrix(d, w):
        src = basis(d, w)
        tgt = basis(d - 1, w)
        tgt_idx = {t: i for i, t in enumerate(tgt)}
        entries = {}
        for j, (i, k) in enumerate(src):
            for (r, c), v in sl.b_matrix((d + 2 * i, w)).entries.items():
                if c == k and (i, r) in tgt_idx:
                    entries[(tgt_idx[(i, r)], j)] = v
            if i + 1 <= N:
                for (r, c), v in sl.B_matrix((d + 2 * i, w)).entries.items():
                    if c == k and (i + 1, r) in tgt_idx:
                        entries[(tgt_idx[(i + 1, r)], j)] = v
        return ExactMatrix(len(tgt), len(src), entries)

    for w in weights:
        for d in range(d_lo - 2 * N, d_hi + 2 * N + 1):
            if not basis(d, w):
                continue
            dims[(d, w)] = homology_presentation(matrix(d + 1, w), matrix(d, w)).dim
    edge = [d for d in range(d_lo - 2 * N, d_hi + 2 * N + 1) if abs(d - d_lo) <= 2 or abs(d - d_hi) <= 2]
    return dims, edge


def default_truncation(sl: MixedComplexSlice) -> int:
    degrees = sl.degrees()
    if not degrees:
        return 1
    height = max(degrees) - min(degrees)
    return height // 2 + (height % 2) + 1
