"""Reduced Hochschild chains and cochains of a weight-graded algebra.

Chains are linear combinations of tuples (a_0, ā_1, ..., ā_p) with the bar
entries in the augmentation.  For internally graded algebras every sign is
the Koszul sign computed with shifted degrees: a bar entry ā contributes
|ā| + 1, the leading entry a_0 contributes |a_0|.  With this discipline the
displayed ungraded signs ((-1)^i faces, (-1)^{mi} cyclic rotations,
(-1)^{nm} cup, (-1)^{(|g|+1)i} circle insertions) are recovered verbatim
when all internal degrees vanish, and the mixed-complex identities
b^2 = B^2 = bB + Bb = 0 hold exactly in every computed window.

Cochains come in two coefficient modes: mode A (values in the algebra,
supporting cup / circle / bracket / cap) and mode A-dual (linear functionals
on chains, supporting the dualized operators).  Dual operators follow the
uniform twisted rule T*(g) = (-1)^{|g|} g∘T, which makes the dual of a mixed
complex again a mixed complex.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from .algebra import Element, GradedAlgebra, WindowOverflowError

Q = Fraction

ChainKey = tuple[int, ...]  # (i0, i1, ..., ip) basis indices; i1.. in augmentation
Chain = dict[ChainKey, Fraction]


def _add_into(acc: dict, key, coeff: Fraction):
    if coeff == 0:
        return
    s = acc.get(key, Q(0)) + coeff
    if s == 0:
        acc.pop(key, None)
    else:
        acc[key] = s


def shifted_degree(A: GradedAlgebra, t: ChainKey) -> int:
    """Total degree |a_0| + sum(|ā_i| + 1) of a basis chain."""
    d = A.degrees[t[0]]
    for i in t[1:]:
        d += A.degrees[i] + 1
    return d


def chain_weight(A: GradedAlgebra, t: ChainKey) -> int:
    return sum(A.weights[i] for i in t)


def chain_basis(A: GradedAlgebra, p: int, w: int) -> list[ChainKey]:
    """All basis chains of tensor length p and total weight w, sorted."""
    aug = A.augmentation_indices()
    out: list[ChainKey] = []

    def extend(prefix: tuple[int, ...], remaining: int, slots: int):
        if slots == 0:
            if remaining == 0:
                out.append(prefix)
            return
        for i in aug:
            wi = A.weights[i]
            if wi <= remaining - (slots - 1):  # each further slot needs weight >= 1
                extend(prefix + (i,), remaining - wi, slots - 1)

    for i0 in range(A.dim):
        w0 = A.weights[i0]
        if w0 > w:
            continue
        if p == 0:
            if w0 == w:
                out.append((i0,))
        else:
            if w - w0 >= p:
                extend((i0,), w - w0, p)
    return sorted(out)


def _bar_project(A: GradedAlgebra, a: Element) -> Element:
    """Project an algebra element to the augmentation (drop the unit part)."""
    return {k: c for k, c in a.items() if k != A.unit}


def boundary_b(A: GradedAlgebra, chain: Chain) -> Chain:
    """Hochschild boundary; lowers tensor length by one, preserves weight."""
    out: Chain = {}
    for t, coeff in chain.items():
        p = len(t) - 1
        if p == 0:
            continue
        # merging faces d_0 .. d_{p-1}
        sgn_exp = A.degrees[t[0]]
        for i in range(p):
            sign = -1 if sgn_exp % 2 else 1
            prod = A.mult_basis(t[i], t[i + 1])
            if not isinstance(prod, dict):
                raise WindowOverflowError(A.weights[t[i]] + A.weights[t[i + 1]])
            for k, c in prod.items():
                if i == 0:
                    _add_into(out, (k,) + t[2:], coeff * c * sign)
                else:
                    if k == A.unit:
                        continue  # reduced complex: unit in a bar slot dies
                    _add_into(out, t[:i] + (k,) + t[i + 2 :], coeff * c * sign)
            sgn_exp += A.degrees[t[i + 1]] + 1
        # rotation face d_p: (a_p a_0, ā_1, ..., ā_{p-1}); the constant -1 is
        # what survives of the classical (-1)^p after the Koszul block sign
        rest = A.degrees[t[0]] + sum(A.degrees[i] + 1 for i in t[1 : p])
        last = A.degrees[t[p]] + 1
        sign = -1 if (last * rest + 1) % 2 else 1
        prod = A.mult_basis(t[p], t[0])
        for k, c in prod.items():
            _add_into(out, (k,) + t[1:p], coeff * c * sign)
    return out


def connes_B(A: GradedAlgebra, chain: Chain) -> Chain:
    """Connes operator; raises tensor length by one, preserves weight."""
    out: Chain = {}
    for t, coeff in chain.items():
        m = len(t) - 1
        # shifted degrees with a_0 entering the bar zone
        shifts = [A.degrees[i] + 1 for i in t]
        for i in range(m + 1):
            if i > 0 and t[0] == A.unit:
                continue  # ā_0 lands in a bar slot and dies
            front = sum(shifts[:i]) % 2
            back = sum(shifts[i:]) % 2
            sign = -1 if (front and back) else 1
            if i == 0:
                if t[0] == A.unit:
                    continue  # (1, 1̄, ...) dies in the reduced complex
                key = (A.unit,) + t
            else:
                key = (A.unit,) + t[i:] + t[:i]
            _add_into(out, key, coeff * sign)
    return out


# -- mode A cochains ---------------------------------------------------------


@dataclass
class Cochain:
    """Mode-A cochain: a table on bar tuples with values in the algebra.

    ``arity`` is the number of bar inputs; ``table`` maps input tuples (of
    augmentation indices) to Elements.  ``degree`` is the total degree
    (value degree minus the shifted degree of the inputs) and must be
    uniform across the table; it is supplied because the zero table has no
    intrinsic degree.
    """

    algebra: GradedAlgebra
    arity: int
    degree: int
    table: dict[tuple[int, ...], Element]

    def value(self, key: tuple[int, ...]) -> Element:
        return self.table.get(key, {})

    def check_homogeneous(self):
        A = self.algebra
        for key, val in self.table.items():
            if not val:
                continue
            din = sum(A.degrees[i] + 1 for i in key)
            dval = A.element_degree(val)
            if dval is None:
                continue
            if dval - din != self.degree:
                raise ValueError("inhomogeneous cochain table")


def unit_cochain(A: GradedAlgebra) -> Cochain:
    return Cochain(A, 0, 0, {(): A.one()})


def multiplication_cochain(A: GradedAlgebra) -> Cochain:
    """The product as a 2-cochain (degree -2).

    Out-of-window pairs are omitted: a chain of in-window weight never
    probes them, since adjacent entries of a weight-w chain multiply to
    weight at most w.
    """
    table = {}
    aug = A.augmentation_indices()
    for i in aug:
        for j in aug:
            prod = A.mult_basis(i, j)
            if isinstance(prod, dict) and prod:
                table[(i, j)] = dict(prod)
    return Cochain(A, 2, -2, table)


def _tuples_of_weight(A: GradedAlgebra, q: int, w: int) -> list[tuple[int, ...]]:
    aug = A.augmentation_indices()
    out: list[tuple[int, ...]] = []

    def extend(prefix, remaining, slots):
        if slots == 0:
            if remaining == 0:
                out.append(prefix)
            return
        for i in aug:
            wi = A.weights[i]
            if wi <= remaining - (slots - 1):
                extend(prefix + (i,), remaining - wi, slots - 1)

    if q == 0:
        return [()] if w == 0 else []
    if w >= q:
        extend((), w, q)
    return sorted(out)


def all_tuples_up_to_weight(A: GradedAlgebra, q: int, w_max: int) -> list[tuple[int, ...]]:
    out = []
    for w in range(q, w_max + 1):
        out.extend(_tuples_of_weight(A, q, w))
    if q == 0:
        out = [()]
    return out


def cup(f: Cochain, g: Cochain) -> Cochain:
    """Cup product; arities add.  Sign: Koszul for g passing the f inputs."""
    A = f.algebra
    if g.algebra is not A:
        raise ValueError("cochains over different algebras")
    table: dict[tuple[int, ...], Element] = {}
    for kf, vf in f.table.items():
        shift_f = sum(A.degrees[i] + 1 for i in kf)
        sign = -1 if (g.degree % 2) and (shift_f % 2) else 1
        for kg, vg in g.table.items():
            try:
                val = A.multiply(vf, vg)
            except WindowOverflowError:
                raise
            if not val:
                continue
            key = kf + kg
            acc = table.setdefault(key, {})
            for k, c in val.items():
                _add_into(acc, k, sign * c)
            if not acc:
                table.pop(key, None)
    return Cochain(A, f.arity + g.arity, f.degree + g.degree, table)


def circle(f: Cochain, g: Cochain, tuples_by_arity: dict[int, list[tuple[int, ...]]]) -> Cochain:
    """Insertion f∘g: sum of g plugged into each slot of f, with Koszul signs.

    Needs the input tuples on which the result should be tabulated, supplied
    as tuples_by_arity[f.arity + g.arity - 1].
    """
    A = f.algebra
    n, m = f.arity, g.arity
    if n == 0:
        return Cochain(A, 0, f.degree + g.degree + 1, {})
    arity = n + m - 1
    g_shift = (g.degree + 1) % 2
    table: dict[tuple[int, ...], Element] = {}
    for key in tuples_by_arity[arity]:
        acc: Element = {}
        for i in range(n):
            inner = key[i : i + m]
            gval = g.value(inner)
            if not gval:
                continue
            passed = sum(A.degrees[k] + 1 for k in key[:i]) % 2
            sign = -1 if (g_shift and passed) else 1
            gbar = _bar_project(A, gval)
            for gk, gc in gbar.items():
                outer = key[:i] + (gk,) + key[i + m :]
                fval = f.value(outer)
                for fk, fc in fval.items():
                    _add_into(acc, fk, sign * gc * fc)
        if acc:
            table[key] = acc
    return Cochain(A, arity, f.degree + g.degree + 1, table)


def gerstenhaber_bracket(
    f: Cochain, g: Cochain, tuples_by_arity: dict[int, list[tuple[int, ...]]]
) -> Cochain:
    """{f, g} = f∘g - (-1)^{(|f|+1)(|g|+1)} g∘f."""
    fg = circle(f, g, tuples_by_arity)
    gf = circle(g, f, tuples_by_arity)
    sign = -1 if ((f.degree + 1) % 2) and ((g.degree + 1) % 2) else 1
    table = {k: dict(v) for k, v in fg.table.items()}
    for key, val in gf.table.items():
        acc = table.setdefault(key, {})
        for k, c in val.items():
            _add_into(acc, k, -sign * c)
        if not acc:
            table.pop(key, None)
    return Cochain(f.algebra, fg.arity, f.degree + g.degree + 1, table)


def coboundary(f: Cochain, tuples_by_arity: dict[int, list[tuple[int, ...]]]) -> Cochain:
    """Hochschild coboundary on mode-A cochains.

    δf(ā_1..ā_{q+1}) = (-1)^{|a_1||f|} a_1 f(ā_2..)
                     + Σ_i (-1)^{‖ā_1‖+..+‖ā_i‖} f(.., ā_i ā_{i+1}, ..)
                     - (-1)^{‖ā_1‖+..+‖ā_q‖} f(ā_1..ā_q) a_{q+1}

    The graded commutator with the contraction recovers the coboundary:
    b∘ι_f - (-1)^{|f|} ι_f∘b = -(-1)^{|f|} ι_{δf}, so cap descends to
    homology; the ungraded shadow is the classical normalized formula.
    """
    A = f.algebra
    q = f.arity
    table: dict[tuple[int, ...], Element] = {}
    for key in tuples_by_arity[q + 1]:
        acc: Element = {}
        fa = f.value(key[1:])
        if fa:
            sign = -1 if (A.degrees[key[0]] * f.degree) % 2 else 1
            for k, c in A.multiply(A.basis_element(key[0]), fa).items():
                _add_into(acc, k, sign * c)
        run = 0
        for i in range(1, q + 1):
            run += A.degrees[key[i - 1]] + 1
            prod = A.mult_basis(key[i - 1], key[i])
            if isinstance(prod, dict):
                sign = -1 if run % 2 else 1
                for m, cm in prod.items():
                    if m == A.unit:
                        continue
                    for k, c in f.value(key[: i - 1] + (m,) + key[i + 1 :]).items():
                        _add_into(acc, k, sign * cm * c)
        fb = f.value(key[:q])
        if fb:
            run_all = sum(A.degrees[i] + 1 for i in key[:q])
            sign = -1 if (run_all + 1) % 2 else 1
            for k, c in A.multiply(fb, A.basis_element(key[q])).items():
                _add_into(acc, k, sign * c)
        if acc:
            table[key] = acc
    return Cochain(A, q + 1, f.degree - 1, table)


def cap(f: Cochain, chain: Chain) -> Chain:
    """Cap product f∩(a_0, ā_1, ..) = ±(a_0·f(ā_1..ā_n), ā_{n+1}, ..)."""
    A = f.algebra
    n = f.arity
    out: Chain = {}
    for t, coeff in chain.items():
        m = len(t) - 1
        if m < n:
            continue
        fval = f.value(t[1 : n + 1])
        if not fval:
            continue
        sign = -1 if (f.degree % 2) and (A.degrees[t[0]] % 2) else 1
        head = A.multiply(A.basis_element(t[0]), fval)
        for k, c in head.items():
            _add_into(out, (k,) + t[n + 1 :], coeff * c * sign)
    return out


def lie_derivative(f: Cochain, chain: Chain) -> Chain:
    """L_f = B∘ι_f - (-1)^{|f|} ι_f∘B on chains."""
    A = f.algebra
    first = connes_B(A, cap(f, chain))
    second = cap(f, connes_B(A, chain))
    sign = -1 if f.degree % 2 else 1
    out = dict(first)
    for k, c in second.items():
        _add_into(out, k, -sign * c)
    return out


# -- mode A-dual cochains ----------------------------------------------------


@dataclass
class DualCochain:
    """Mode A-dual cochain: a linear functional on chains.

    ``table`` maps chain basis tuples to rationals; ``degree`` is the
    functional degree (minus the shifted degree of the chains it pairs
    with).  Under the identification Hom(Ā^q, A*) = Hom(A ⊗ Ā^q, k) this is
    exactly a reduced cochain with values in the dual bimodule.
    """

    algebra: GradedAlgebra
    degree: int
    table: dict[ChainKey, Fraction]

    def evaluate(self, chain: Chain) -> Fraction:
        total = Q(0)
        for t, c in chain.items():
            v = self.table.get(t)
            if v:
                total += c * v
        return total


def dual_of_operator(g: DualCochain, op, chains: list[ChainKey], op_degree: int) -> DualCochain:
    """Twisted dual T*(g) = (-1)^{|g|} g∘T, tabulated on the given chains."""
    A = g.algebra
    sign = -1 if g.degree % 2 else 1
    table: dict[ChainKey, Fraction] = {}
    for t in chains:
        img = op(A, {t: Q(1)})
        val = g.evaluate(img)
        if val:
            table[t] = sign * val
    return DualCochain(A, g.degree - op_degree, table)


def dual_coboundary(g: DualCochain, chains: list[ChainKey]) -> DualCochain:
    """δ on mode A-dual cochains: the twisted dual of the boundary b."""
    return dual_of_operator(g, boundary_b, chains, op_degree=-1)


def B_star(g: DualCochain, chains: list[ChainKey]) -> DualCochain:
    """B*(g) = (-1)^{|g|} g∘B."""
    return dual_of_operator(g, connes_B, chains, op_degree=+1)


def cap_star(f: Cochain, g: DualCochain, chains: list[ChainKey]) -> DualCochain:
    """(f, g) ↦ (-1)^{|f||g|} g∘ι_f."""
    A = g.algebra
    sign = -1 if (f.degree % 2) and (g.degree % 2) else 1
    table: dict[ChainKey, Fraction] = {}
    for t in chains:
        val = g.evaluate(cap(f, {t: Q(1)}))
        if val:
            table[t] = sign * val
    return DualCochain(A, g.degree - f.degree, table)


def frobenius_pd(f: Cochain, pairing, chains: list[ChainKey]) -> DualCochain:
    """Composition with the Frobenius pairing: mode A -> mode A-dual.

    (PD f)(a_0, ā_1, .., ā_q) = (-1)^{|f||a_0|} <a_0, f(ā_1..ā_q)>.

    Satisfies δ(PD f) = (-1)^{|f|} PD(δf), so cocycles map to cocycles and
    the map descends to cohomology.  PD of the unit cochain is the pairing
    itself, viewed as a functional on 0-chains.
    """
    A = f.algebra
    q = f.arity
    table: dict[ChainKey, Fraction] = {}
    for t in chains:
        if len(t) - 1 != q:
            continue
        val = f.value(t[1:])
        if not val:
            continue
        a0 = t[0]
        tot = Q(0)
        for k, c in val.items():
            tot += c * pairing.value(a0, k)
        if tot:
            sign = -1 if (f.degree % 2) and (A.degrees[a0] % 2) else 1
            table[t] = sign * tot
    # a chain it pairs with has degree -(|f| + n), so the functional degree
    # is |f| + n regardless of the table being empty
    return DualCochain(A, f.degree + pairing.degree, table)
