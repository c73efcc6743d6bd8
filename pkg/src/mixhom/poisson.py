"""Poisson chain and cochain complexes for polynomial and exterior algebras.

Kähler forms and polyvector fields are represented inside free graded-
commutative algebras on explicit generators:

  forms, polynomial side:    x_i (deg 0, wt 1),  dx_i (deg 1, wt 1)
  polyvectors, polynomial:   x_i (deg 0, wt 1),  ∂_i  (deg -1, wt -1)
  forms, exterior side:      ξ_i (deg -1, wt 1), dξ_i (deg 0, wt 1)
  polyvectors, exterior:     ξ_i (deg -1, wt 1), ∂ξ_i (deg 0, wt -1)

The free-algebra degree is the total homological degree (a polyvector's
arity shift is already carried by the ∂ generators), so the Poisson
coboundary has degree -1 and the de Rham differential degree +1 on every
side, and for a quadratic bivector all four differentials preserve weight.

Operators are built from one Koszul-signed engine: contraction by a
polyvector monomial is coefficient multiplication after the form-side
partial derivatives, the Poisson boundary is the contraction/de Rham
commutator, the coboundary is the Schouten bracket with the bivector, and
the Schouten bracket itself is generated by the odd Laplacian of the
standard coordinates.  The displayed shuffle-sum formulas are implemented
separately (for argument-wise evaluation) and serve as independent oracles
on the ungraded side.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations, permutations

Q = Fraction

Monomial = tuple[int, ...]  # exponents aligned with the generator list
GCAElement = dict[Monomial, Fraction]


@dataclass(frozen=True)
class Generator:
    name: str
    degree: int
    weight: int


class FreeGCA:
    """Free graded-commutative algebra on homogeneous generators.

    Monomials are exponent tuples in generator order; odd generators square
    to zero.  Products and derivatives carry Koszul signs computed from the
    generator degrees.
    """

    def __init__(self, generators: list[Generator]):
        self.gens = tuple(generators)
        self.n = len(self.gens)
        self.odd = tuple(g.degree % 2 == 1 for g in self.gens)
        self.one: Monomial = (0,) * self.n

    def degree(self, m: Monomial) -> int:
        return sum(e * g.degree for e, g in zip(m, self.gens))

    def weight(self, m: Monomial) -> int:
        return sum(e * g.weight for e, g in zip(m, self.gens))

    def mul_monomials(self, a: Monomial, b: Monomial):
        """(sign, monomial) or None if an odd generator repeats."""
        sign = 1
        out = list(a)
        # parity of odd-generator content of a at positions > j, scanned once
        odd_tail = 0
        tails = [0] * self.n  # number of odd exponents of a strictly after i
        for i in range(self.n - 1, -1, -1):
            tails[i] = odd_tail
            if self.odd[i] and a[i] % 2:
                odd_tail += 1
        for j in range(self.n):
            e = b[j]
            if not e:
                continue
            if self.odd[j]:
                if a[j]:
                    return None
                if e > 1:
                    return None
                if tails[j] % 2:
                    sign = -sign
                out[j] = 1
            else:
                out[j] = a[j] + e
        return sign, tuple(out)

    def multiply(self, a: GCAElement, b: GCAElement) -> GCAElement:
        out: GCAElement = {}
        for ma, ca in a.items():
            for mb, cb in b.items():
                got = self.mul_monomials(ma, mb)
                if got is None:
                    continue
                s, m = got
                v = out.get(m, Q(0)) + s * ca * cb
                if v == 0:
                    out.pop(m, None)
                else:
                    out[m] = v
        return out

    def partial(self, i: int, m: Monomial):
        """Left partial derivative by generator i: (coeff, monomial) or None."""
        if m[i] == 0:
            return None
        out = list(m)
        out[i] -= 1
        if self.odd[i]:
            # odd operator passes the generators before position i
            passed = sum(m[j] * self.gens[j].degree for j in range(i)) % 2
            return (Q(-1) if passed else Q(1)), tuple(out)
        return Q(m[i]), tuple(out)

    def partial_element(self, i: int, el: GCAElement) -> GCAElement:
        out: GCAElement = {}
        for m, c in el.items():
            got = self.partial(i, m)
            if got is None:
                continue
            coeff, mm = got
            v = out.get(mm, Q(0)) + coeff * c
            if v == 0:
                out.pop(mm, None)
            else:
                out[mm] = v
        return out

    def monomials(self, max_exponents: list[int]) -> list[Monomial]:
        out = [()]
        for i in range(self.n):
            cap = min(1, max_exponents[i]) if self.odd[i] else max_exponents[i]
            out = [m + (e,) for m in out for e in range(cap + 1)]
        return [tuple(m) for m in out]

    def format_monomial(self, m: Monomial) -> str:
        parts = []
        for e, g in zip(m, self.gens):
            if e == 1:
                parts.append(g.name)
            elif e > 1:
                parts.append(f"{g.name}^{e}")
        return "".join(parts) if parts else "1"

    def format_element(self, el: GCAElement) -> str:
        if not el:
            return "0"
        return " + ".join(f"{c}*{self.format_monomial(m)}" for m, c in sorted(el.items()))


def scale(el: GCAElement, c: Fraction) -> GCAElement:
    return {m: c * v for m, v in el.items()} if c else {}


def add_into(acc: GCAElement, el: GCAElement, c: Fraction = Q(1)):
    for m, v in el.items():
        s = acc.get(m, Q(0)) + c * v
        if s == 0:
            acc.pop(m, None)
        else:
            acc[m] = s


def sub(a: GCAElement, b: GCAElement) -> GCAElement:
    out = dict(a)
    add_into(out, b, Q(-1))
    return out


def is_zero(el: GCAElement) -> bool:
    return all(v == 0 for v in el.values())


# -- the four spaces ---------------------------------------------------------


def form_space(n: int, side: str = "poly") -> FreeGCA:
    if side == "poly":
        gens = [Generator(f"x{i+1}", 0, 1) for i in range(n)]
        gens += [Generator(f"dx{i+1}", 1, 1) for i in range(n)]
    else:
        gens = [Generator(f"ξ{i+1}", -1, 1) for i in range(n)]
        gens += [Generator(f"dξ{i+1}", 0, 1) for i in range(n)]
    return FreeGCA(gens)


def multivector_space(n: int, side: str = "poly") -> FreeGCA:
    if side == "poly":
        gens = [Generator(f"x{i+1}", 0, 1) for i in range(n)]
        gens += [Generator(f"∂{i+1}", -1, -1) for i in range(n)]
    else:
        gens = [Generator(f"ξ{i+1}", -1, 1) for i in range(n)]
        gens += [Generator(f"∂ξ{i+1}", 0, -1) for i in range(n)]
    return FreeGCA(gens)


@dataclass
class PoissonContext:
    """The paired form/polyvector spaces for one side of the duality."""

    n: int
    side: str
    forms: FreeGCA
    vectors: FreeGCA

    @classmethod
    def make(cls, n: int, side: str = "poly") -> "PoissonContext":
        return cls(n, side, form_space(n, side), multivector_space(n, side))

    def vector_arity(self, m: Monomial) -> int:
        return sum(m[self.n :])

    def form_arity(self, m: Monomial) -> int:
        return sum(m[self.n :])

    def coeff_part(self, m: Monomial) -> Monomial:
        return m[: self.n] + (0,) * self.n


# -- core operators ----------------------------------------------------------


def de_rham(ctx: PoissonContext, omega: GCAElement) -> GCAElement:
    """d: sends each coordinate generator to its differential (odd derivation)."""
    F = ctx.forms
    out: GCAElement = {}
    for m, c in omega.items():
        for i in range(ctx.n):
            got = F.partial(i, m)
            if got is None:
                continue
            coeff, mm = got
            dgen = tuple(1 if j == ctx.n + i else 0 for j in range(2 * ctx.n))
            prod = F.mul_monomials(dgen, mm)
            if prod is None:
                continue
            s, mo = prod
            v = out.get(mo, Q(0)) + c * coeff * s
            if v == 0:
                out.pop(mo, None)
            else:
                out[mo] = v
    return out


def contract_monomial(ctx: PoissonContext, P: Monomial, omega: GCAElement) -> GCAElement:
    """Contraction by one polyvector monomial.

    ι for ∂_{k_1}∧..∧∂_{k_p} (k_1 < .. < k_p) applies the form-side partial
    with respect to dg_{k_1} first; the coefficient part multiplies on the
    left afterwards.  This matches the displayed shuffle-sum convention.
    """
    F = ctx.forms
    n = ctx.n
    acc = omega
    for k in range(n):
        for _ in range(P[n + k]):
            acc = F.partial_element(n + k, acc)
            if not acc:
                return {}
    coeff_m = P[:n] + (0,) * n
    coeff = {coeff_m: Q(1)}
    return F.multiply(coeff, acc)


def contraction(ctx: PoissonContext, P: GCAElement, omega: GCAElement) -> GCAElement:
    out: GCAElement = {}
    for m, c in P.items():
        add_into(out, contract_monomial(ctx, m, omega), c)
    return out


def poisson_boundary(ctx: PoissonContext, pi: GCAElement, omega: GCAElement) -> GCAElement:
    """∂ = ι_π∘d - d∘ι_π (for the even-degree bivectors used here)."""
    first = contraction(ctx, pi, de_rham(ctx, omega))
    second = de_rham(ctx, contraction(ctx, pi, omega))
    return sub(first, second)


def bracket_of_functions(ctx: PoissonContext, pi: GCAElement, f: GCAElement, g: GCAElement) -> GCAElement:
    """{f, g} = ι_π(df ∧ dg) for coefficient-only elements f, g."""
    F = ctx.forms
    return contraction(ctx, pi, F.multiply(de_rham(ctx, f), de_rham(ctx, g)))


# -- Schouten bracket via the odd Laplacian -----------------------------------


def odd_laplacian(ctx: PoissonContext, P: GCAElement) -> GCAElement:
    """Δ₀ = Σ_i ∂²/∂g_i ∂θ_i on polyvectors (divergence of the flat volume)."""
    V = ctx.vectors
    out: GCAElement = {}
    for m, c in P.items():
        for i in range(ctx.n):
            got = V.partial(ctx.n + i, m)
            if got is None:
                continue
            c1, m1 = got
            got2 = V.partial(i, m1)
            if got2 is None:
                continue
            c2, m2 = got2
            v = out.get(m2, Q(0)) + c * c1 * c2
            if v == 0:
                out.pop(m2, None)
            else:
                out[m2] = v
    return out


def schouten(ctx: PoissonContext, P: GCAElement, Q_: GCAElement) -> GCAElement:
    """Schouten bracket, generated by the odd Laplacian:

    [P, Q] = -(-1)^{|P|} (Δ₀(PQ) - Δ₀(P)Q - (-1)^{|P|} P Δ₀(Q)).

    Calibrated against the displayed two-shuffle-sum bracket: [∂_i, f ∂_j]
    = ∂_i(f) ∂_j, with graded antisymmetry [P,Q] = -(-1)^{(p-1)(q-1)}[Q,P]
    in the polyvector grading.
    """
    V = ctx.vectors
    out: GCAElement = {}
    for m1, c1 in P.items():
        s = -1 if V.degree(m1) % 2 else 1
        for m2, c2 in Q_.items():
            c = -c1 * c2
            prod = V.mul_monomials(m1, m2)
            if prod is not None:
                sg, mm = prod
                add_into(out, odd_laplacian(ctx, {mm: Q(1)}), s * sg * c)
            add_into(out, V.multiply(odd_laplacian(ctx, {m1: Q(1)}), {m2: Q(1)}), -s * c)
            add_into(out, V.multiply({m1: Q(1)}, odd_laplacian(ctx, {m2: Q(1)})), -c)
    return out


def poisson_coboundary(ctx: PoissonContext, pi: GCAElement, P: GCAElement) -> GCAElement:
    """δ = [π, -] (Lichnerowicz); degree -1 in the total grading."""
    return schouten(ctx, pi, P)


def wedge(ctx: PoissonContext, P: GCAElement, Q_: GCAElement) -> GCAElement:
    return ctx.vectors.multiply(P, Q_)


# -- literal shuffle-sum formulas (ungraded oracles) ---------------------------


def _multider_eval(ctx: PoissonContext, P: Monomial, args: list[int]) -> GCAElement:
    """Evaluate a polyvector monomial on coordinate generators (by index)."""
    V = ctx.vectors
    n = ctx.n
    ks = [k for k in range(n) for _ in range(P[n + k])]
    p = len(ks)
    if p != len(args):
        return {}
    coeff = {P[:n] + (0,) * n: Q(1)}
    total: GCAElement = {}
    for tau in permutations(range(p)):
        sgn = _perm_sign(tau)
        ok = all(ks[tau[j]] == args[j] for j in range(p))
        if ok:
            add_into(total, coeff, Q(sgn))
    return total


def _perm_sign(tau) -> int:
    sgn = 1
    for i in range(len(tau)):
        for j in range(i + 1, len(tau)):
            if tau[i] > tau[j]:
                sgn = -sgn
    return sgn


def contraction_shuffle(ctx: PoissonContext, P: Monomial, f0: Monomial, dargs: list[int]) -> GCAElement:
    """ι_P(f_0 df_{a_1}∧..∧df_{a_m}) per the displayed shuffle sum (ungraded side)."""
    F = ctx.forms
    V = ctx.vectors
    n = ctx.n
    p = sum(P[n:])
    m = len(dargs)
    if m < p:
        return {}
    out: GCAElement = {}
    for subset in combinations(range(m), p):
        rest = [i for i in range(m) if i not in subset]
        sgn = _shuffle_sign(subset, rest)
        val = _multider_eval(ctx, P, [dargs[i] for i in subset])
        if not val:
            continue
        # rebuild the remaining form part
        tail = {tuple(0 for _ in range(2 * n)): Q(1)}
        for i in rest:
            dg = tuple(1 if j == n + dargs[i] else 0 for j in range(2 * n))
            tail = F.multiply(tail, {dg: Q(1)})
        # coefficient f0 and P's coefficients are x-monomials on the poly side
        piece = F.multiply({f0 + (0,) * n: Q(1)}, F.multiply({k + (0,) * n: v for k2, v in val.items() for k in (k2[:n],)}, tail))
        add_into(out, piece, Q(sgn))
    return out


def _shuffle_sign(first: tuple[int, ...], rest: list[int]) -> int:
    seq = list(first) + list(rest)
    return _perm_sign(tuple(seq))


def schouten_shuffle(ctx: PoissonContext, Pm: Monomial, Qm: Monomial) -> GCAElement:
    """[P, Q] per the displayed two-shuffle-sum formula (polynomial side).

    Evaluated as a multiderivation on coordinate functions and re-assembled;
    valid when all generators are even coordinates (the ungraded case).
    """
    V = ctx.vectors
    n = ctx.n
    p = sum(Pm[n:])
    q = sum(Qm[n:])
    r = p + q - 1
    if r < 0:
        return {}
    out: GCAElement = {}
    # evaluate on all argument tuples of coordinate functions; reconstruct by
    # skew-symmetry: the value on (x_{k_1},..,x_{k_r}) with k_1<..<k_r gives
    # the coefficient of ∂_{k_1}∧..∧∂_{k_r}
    for ks in combinations(range(n), r):
        val: GCAElement = {}
        for subset in combinations(range(r), q):
            rest = [i for i in range(r) if i not in subset]
            sgn = _shuffle_sign(subset, rest)
            inner = _multider_eval(ctx, Qm, [ks[i] for i in subset])
            for mono, c in inner.items():
                # P(Q(..), rest): first argument is a polynomial; expand by
                # derivation-in-first-argument over its variables
                outer = _multider_eval_first_poly(ctx, Pm, mono[:n], [ks[i] for i in rest])
                add_into(val, outer, Q(sgn) * c)
        sgn2 = -1 if ((p - 1) * (q - 1)) % 2 else 1
        for subset in combinations(range(r), p):
            rest = [i for i in range(r) if i not in subset]
            sgn = _shuffle_sign(subset, rest)
            inner = _multider_eval(ctx, Pm, [ks[i] for i in subset])
            for mono, c in inner.items():
                outer = _multider_eval_first_poly(ctx, Qm, mono[:n], [ks[i] for i in rest])
                add_into(val, outer, -Q(sgn2 * sgn) * c)
        if val:
            tm = tuple(0 for _ in range(n)) + tuple(1 if k in ks else 0 for k in range(n))
            for mono, c in val.items():
                m_out = V.mul_monomials(mono[:n] + (0,) * n, tm)
                if m_out is not None:
                    s, mo = m_out
                    v = out.get(mo, Q(0)) + s * c
                    if v == 0:
                        out.pop(mo, None)
                    else:
                        out[mo] = v
    return out


def _multider_eval_first_poly(ctx: PoissonContext, Pm: Monomial, first_poly: tuple[int, ...], rest_args: list[int]) -> GCAElement:
    """P(g, x_{rest}) with a polynomial first slot, expanded by Leibniz."""
    V = ctx.vectors
    n = ctx.n
    out: GCAElement = {}
    for k in range(n):
        if first_poly[k] == 0:
            continue
        dg = list(first_poly)
        dg[k] -= 1
        coeff = Q(first_poly[k])
        val = _multider_eval(ctx, Pm, [k] + rest_args)
        piece = V.multiply({tuple(dg) + (0,) * n: coeff}, val)
        add_into(out, piece, Q(1))
    return out


def poisson_boundary_literal(ctx: PoissonContext, pi: GCAElement, f0: Monomial, dargs: list[int]) -> GCAElement:
    """Def-style ∂(f_0 df_{a_1}∧..∧df_{a_p}): the two displayed sums (ungraded)."""
    F = ctx.forms
    n = ctx.n
    p = len(dargs)
    out: GCAElement = {}
    f0el = {f0 + (0,) * n: Q(1)}
    for i in range(1, p + 1):
        xi = {tuple(1 if j == dargs[i - 1] else 0 for j in range(n)) + (0,) * n: Q(1)}
        br = bracket_of_functions(ctx, pi, f0el, xi)
        tail = {F.one: Q(1)}
        for j in range(1, p + 1):
            if j == i:
                continue
            dg = tuple(1 if t == n + dargs[j - 1] else 0 for t in range(2 * n))
            tail = F.multiply(tail, {dg: Q(1)})
        add_into(out, F.multiply(br, tail), Q((-1) ** (i - 1)))
    for i in range(1, p + 1):
        for j in range(i + 1, p + 1):
            xi = {tuple(1 if t == dargs[i - 1] else 0 for t in range(n)) + (0,) * n: Q(1)}
            xj = {tuple(1 if t == dargs[j - 1] else 0 for t in range(n)) + (0,) * n: Q(1)}
            br = bracket_of_functions(ctx, pi, xi, xj)
            dbr = de_rham(ctx, br)
            tail = {F.one: Q(1)}
            for t in range(1, p + 1):
                if t in (i, j):
                    continue
                dg = tuple(1 if s == n + dargs[t - 1] else 0 for s in range(2 * n))
                tail = F.multiply(tail, {dg: Q(1)})
            piece = F.multiply(f0el, F.multiply(dbr, tail))
            add_into(out, piece, Q((-1) ** (j - i)))
    return out


def poisson_coboundary_literal(ctx: PoissonContext, pi: GCAElement, Pm: Monomial) -> GCAElement:
    """Def-style δ(P)(f_0,..,f_p): the two displayed sums (ungraded side)."""
    V = ctx.vectors
    n = ctx.n
    p = sum(Pm[n:])
    out: GCAElement = {}
    for ks in combinations(range(n), p + 1):
        val: GCAElement = {}
        for i in range(p + 1):
            others = [ks[t] for t in range(p + 1) if t != i]
            inner = _multider_eval(ctx, Pm, others)
            xi = {tuple(1 if t == ks[i] else 0 for t in range(n)) + (0,) * n: Q(1)}
            for mono, c in inner.items():
                br = bracket_of_functions(ctx, pi, xi, {mono[:n] + (0,) * n: Q(1)})
                add_into(val, {m[:n] + (0,) * n: v for m, v in br.items()}, Q((-1) ** i) * c)
        for i in range(p + 1):
            for j in range(i + 1, p + 1):
                xi = {tuple(1 if t == ks[i] else 0 for t in range(n)) + (0,) * n: Q(1)}
                xj = {tuple(1 if t == ks[j] else 0 for t in range(n)) + (0,) * n: Q(1)}
                br = bracket_of_functions(ctx, pi, xi, xj)
                others = [ks[t] for t in range(p + 1) if t not in (i, j)]
                for mono, c in br.items():
                    piece = _multider_eval_first_poly(ctx, Pm, mono[:n], others)
                    add_into(val, piece, Q((-1) ** (i + j)) * c)
        tm = tuple(0 for _ in range(n)) + tuple(1 if k in ks else 0 for k in range(n))
        for mono, c in val.items():
            got = V.mul_monomials(mono[:n] + (0,) * n, tm)
            if got is not None:
                s, mo = got
                v = out.get(mo, Q(0)) + s * c
                if v == 0:
                    out.pop(mo, None)
                else:
                    out[mo] = v
    return out


# -- quadratic bivectors -------------------------------------------------------


class JacobiError(Exception):
    pass


def quadratic_bivector(ctx: PoissonContext, coeffs: dict[tuple[int, int, int, int], Fraction]) -> GCAElement:
    """Build Σ c_{i1 i2}^{j1 j2} g_{i1} g_{i2} ∂_{j1}∧∂_{j2} from a coefficient table.

    Keys are (i1, i2, j1, j2) with 1-based indices.  The table is
    normalized on the fly: coefficient parts symmetrize or antisymmetrize
    according to the parity of the generators of the side.
    """
    V = ctx.vectors
    n = ctx.n
    out: GCAElement = {}
    for (i1, i2, j1, j2), c in coeffs.items():
        if not all(1 <= t <= n for t in (i1, i2, j1, j2)):
            raise ValueError(f"generator index out of range in {(i1, i2, j1, j2)}")
        if c == 0:
            continue
        gi1 = tuple(1 if t == i1 - 1 else 0 for t in range(n)) + (0,) * n
        gi2 = tuple(1 if t == i2 - 1 else 0 for t in range(n)) + (0,) * n
        tj1 = (0,) * n + tuple(1 if t == j1 - 1 else 0 for t in range(n))
        tj2 = (0,) * n + tuple(1 if t == j2 - 1 else 0 for t in range(n))
        term = {gi1: c}
        for m in (gi2, tj1, tj2):
            term = V.multiply(term, {m: Q(1)})
        add_into(out, term, Q(1))
    return out


def jacobi_obstruction(ctx: PoissonContext, pi: GCAElement) -> GCAElement:
    return schouten(ctx, pi, pi)


def check_jacobi(ctx: PoissonContext, pi: GCAElement):
    ob = jacobi_obstruction(ctx, pi)
    if not is_zero(ob):
        raise JacobiError(f"[π, π] ≠ 0: {ctx.vectors.format_element(ob)}")


def modular_vector_field(ctx: PoissonContext, pi: GCAElement) -> GCAElement:
    """Divergence oracle: the modular field of π against the flat volume.

    Computed as Δ₀(π); π is unimodular for the coordinate volume form
    exactly when this vanishes.
    """
    return odd_laplacian(ctx, pi)


# -- duals: functionals on the exterior-side forms -----------------------------


def dual_functional_degree(ctx: PoissonContext, m: Monomial) -> int:
    return -ctx.forms.degree(m)


def twisted_transpose(op, degree_of, functional: dict[Monomial, Fraction], domain: list[Monomial]):
    """T*(φ) = (-1)^{|φ|} φ∘T for a functional on form monomials."""
    out: dict[Monomial, Fraction] = {}
    for m in domain:
        img = op({m: Q(1)})
        total = Q(0)
        for mm, c in img.items():
            v = functional.get(mm)
            if v:
                total += c * v
        if total:
            deg = degree_of(functional)
            out[m] = (Q(-1) if deg % 2 else Q(1)) * total
    return out


# -- the dual side: functionals on exterior-side forms ------------------------


class DualSide:
    """𝔛(A^!; A^¡) realized as linear functionals on the exterior-side forms.

    A functional is a dict keyed by form monomials of the exterior context.
    Its degree is minus the form degree of its support, its weight the form
    weight; the Poisson coboundary with dual coefficients is the twisted
    transpose of the Poisson boundary, and d* the twisted transpose of the
    de Rham differential, so (δ, d*) is again a mixed pair.
    """

    def __init__(self, ctx: PoissonContext, pi: GCAElement, w_max: int):
        if ctx.side != "ext":
            raise ValueError("dual side is built over an exterior context")
        self.ctx = ctx
        self.pi = pi
        self.w_max = w_max
        F = ctx.forms
        self.domain = [
            m
            for m in F.monomials([1] * ctx.n + [w_max] * ctx.n)
            if F.weight(m) <= w_max
        ]
        # per-monomial operator images, computed once
        self._boundary_img = {
            m: poisson_boundary(self.ctx, self.pi, {m: Q(1)}) for m in self.domain
        }
        self._d_img = {m: de_rham(self.ctx, {m: Q(1)}) for m in self.domain}

    def functional_degree(self, phi: dict[Monomial, Fraction]) -> int:
        degs = {-self.ctx.forms.degree(m) for m, c in phi.items() if c}
        if len(degs) > 1:
            raise ValueError("inhomogeneous functional")
        return degs.pop() if degs else 0

    def _twisted(self, images, phi: dict[Monomial, Fraction]) -> dict[Monomial, Fraction]:
        deg = self.functional_degree(phi)
        sign = Q(-1) if deg % 2 else Q(1)
        out: dict[Monomial, Fraction] = {}
        for m in self.domain:
            total = Q(0)
            for mm, c in images[m].items():
                v = phi.get(mm)
                if v:
                    total += c * v
            if total:
                out[m] = sign * total
        return out

    def coboundary(self, phi: dict[Monomial, Fraction]) -> dict[Monomial, Fraction]:
        """δ with values in the dual module: (-1)^{|φ|} φ∘∂."""
        return self._twisted(self._boundary_img, phi)

    def d_star(self, phi: dict[Monomial, Fraction]) -> dict[Monomial, Fraction]:
        """Dual de Rham differential: (-1)^{|φ|} φ∘d."""
        return self._twisted(self._d_img, phi)

    def contract(self, P: GCAElement, phi: dict[Monomial, Fraction]) -> dict[Monomial, Fraction]:
        """Module action of polyvectors: (ι_P φ)(ω) = (-1)^{|P||φ|} φ(ι_P ω)."""
        deg_p = {self.ctx.vectors.degree(m) for m, c in P.items() if c}
        dp = deg_p.pop() if deg_p else 0
        dphi = self.functional_degree(phi)
        sign = Q(-1) if (dp % 2) and (dphi % 2) else Q(1)
        out: dict[Monomial, Fraction] = {}
        for m in self.domain:
            total = Q(0)
            for mm, c in contraction(self.ctx, P, {m: Q(1)}).items():
                v = phi.get(mm)
                if v:
                    total += c * v
            if total:
                out[m] = sign * total
        return out

    def dual_volume(self) -> dict[Monomial, Fraction]:
        """η^!: the functional picking the top ξ-coefficient of A^!."""
        top = (1,) * self.ctx.n + (0,) * self.ctx.n
        return {top: Q(1)}


@dataclass
class FrobeniusPoissonReport:
    volume_is_cycle: bool
    diagram_commutes: bool
    failures: list[str]

    @property
    def unimodular(self) -> bool:
        return self.volume_is_cycle and self.diagram_commutes


def frobenius_poisson_check(dual: DualSide, eta_dual: dict[Monomial, Fraction] | None = None,
                            w_max: int | None = None) -> FrobeniusPoissonReport:
    """Unimodular-Frobenius diagnostics on the exterior side.

    Checks that the dual volume functional is a Poisson cycle (δη^! = 0) and
    that contraction into η^! intertwines δ on polyvectors with δ on the
    dual module.  With the frozen conventions the dual square commutes on
    the nose (no sign), unlike the primal one.
    """
    ctx = dual.ctx
    if eta_dual is None:
        eta_dual = dual.dual_volume()
    if w_max is None:
        w_max = dual.w_max
    failures: list[str] = []
    cycle = not dual.coboundary(eta_dual)
    V = ctx.vectors
    diagram = True
    cap = max(2, ctx.n)
    for m in V.monomials([1] * ctx.n + [cap] * ctx.n):
        P = {m: Q(1)}
        lhs = dual.contract(poisson_coboundary(ctx, dual.pi, P), eta_dual)
        rhs = dual.coboundary(dual.contract(P, eta_dual))
        diff = dict(lhs)
        for k, v in rhs.items():
            diff[k] = diff.get(k, Q(0)) - v
        if any(v != 0 for v in diff.values()):
            diagram = False
            failures.append(f"dual diagram fails on {V.format_monomial(m)}")
            if len(failures) > 8:
                break
    return FrobeniusPoissonReport(cycle, diagram, failures)


# -- unimodularity -------------------------------------------------------------


@dataclass
class UnimodularityReport:
    boundary_of_volume_zero: bool
    diagram_commutes: bool
    modular_field_zero: bool
    failures: list[str]

    @property
    def unimodular(self) -> bool:
        return self.boundary_of_volume_zero and self.diagram_commutes and self.modular_field_zero


def volume_form(ctx: PoissonContext) -> GCAElement:
    m = (0,) * ctx.n + (1,) * ctx.n
    return {m: Q(1)}


def unimodularity_check(
    ctx: PoissonContext,
    pi: GCAElement,
    eta: GCAElement | None = None,
    w_max: int = 4,
    p_max: int | None = None,
) -> UnimodularityReport:
    """Three unimodularity diagnostics for a polynomial-side Poisson structure.

    (1) ∂η = 0; (2) the contraction diagram ∂(ι_P η) = (-1)^{p+1} ι_{δP} η
    on every polyvector monomial in the window (the sign is what the frozen
    contraction and coboundary conventions put into the square; it is
    recorded here once and is the same on every tested structure);
    (3) the divergence oracle (modular vector field vanishes).  All three
    verdicts must agree for honest π and η; discrepancies are reported.
    """
    check_jacobi(ctx, pi)
    if eta is None:
        eta = volume_form(ctx)
    if p_max is None:
        p_max = ctx.n
    failures: list[str] = []
    closed = is_zero(poisson_boundary(ctx, pi, eta))
    V = ctx.vectors
    diagram = True
    for m in V.monomials([w_max] * ctx.n + [1] * ctx.n):
        p = sum(m[ctx.n :])
        if p > p_max:
            continue
        P = {m: Q(1)}
        lhs = poisson_boundary(ctx, pi, contraction(ctx, P, eta))
        rhs = contraction(ctx, poisson_coboundary(ctx, pi, P), eta)
        eps = Q(1) if (p + 1) % 2 == 0 else Q(-1)
        if not is_zero(sub(lhs, scale(rhs, eps))):
            diagram = False
            failures.append(f"diagram fails on {V.format_monomial(m)}")
            if len(failures) > 8:
                break
    mod = modular_vector_field(ctx, pi)
    return UnimodularityReport(closed, diagram, is_zero(mod), failures)
