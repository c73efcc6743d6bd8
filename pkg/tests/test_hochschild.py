from fractions import Fraction
from itertools import product as iproduct

import pytest

from mixhom.algebra import (
    exterior_pairing,
    make_exterior_algebra,
    make_truncated_polynomial_algebra,
)
from mixhom.hochschild import (
    B_star,
    Cochain,
    DualCochain,
    all_tuples_up_to_weight,
    boundary_b,
    cap,
    cap_star,
    chain_basis,
    coboundary,
    connes_B,
    cup,
    dual_coboundary,
    frobenius_pd,
    gerstenhaber_bracket,
    lie_derivative,
    multiplication_cochain,
    shifted_degree,
    unit_cochain,
)
from mixhom.linalg import ExactMatrix, solve_in_span

Q = Fraction


def chains_in_window(A, p_max, w_max):
    return [t for p in range(p_max + 1) for w in range(w_max + 1) for t in chain_basis(A, p, w)]


def chain_eq(a, b):
    d = dict(a)
    for k, v in b.items():
        d[k] = d.get(k, Q(0)) - v
    return all(v == 0 for v in d.values())


def elementary(A, q, t, k):
    deg = A.degrees[k] - sum(A.degrees[i] + 1 for i in t)
    return Cochain(A, q, deg, {t: {k: Q(1)}})


@pytest.fixture(scope="module")
def lam2():
    return make_exterior_algebra(2)


@pytest.fixture(scope="module")
def poly1():
    return make_truncated_polynomial_algebra(1, 6)


class TestMixedComplexAxioms:
    @pytest.mark.parametrize(
        "maker",
        [
            lambda: make_exterior_algebra(1),
            lambda: make_exterior_algebra(2),
            lambda: make_truncated_polynomial_algebra(2, 4),
        ],
    )
    def test_b2_B2_anticommute(self, maker):
        A = maker()
        for t in chains_in_window(A, 4, 4):
            c = {t: Q(1)}
            assert not boundary_b(A, boundary_b(A, c))
            assert not connes_B(A, connes_B(A, c))
            anti = boundary_b(A, connes_B(A, c))
            for k, v in connes_B(A, boundary_b(A, c)).items():
                anti[k] = anti.get(k, Q(0)) + v
            assert all(v == 0 for v in anti.values())


class TestBoundaryAndB:
    def test_b_kills_zero_chains(self, poly1):
        x = poly1.index["x1"]
        assert boundary_b(poly1, {(x,): Q(1)}) == {}

    def test_b_three_term_expansion(self, poly1):
        # b(1, x̄, x̄) = (x, x̄) - (1, x̄²) + (x, x̄), expanded by hand
        A = poly1
        one, x, x2 = A.unit, A.index["x1"], A.index["x1^2"]
        out = boundary_b(A, {(one, x, x): Q(1)})
        assert out == {(x, x): Q(2), (one, x2): Q(-1)}

    def test_B_on_zero_chain(self, poly1):
        A = poly1
        x = A.index["x1"]
        assert connes_B(A, {(x,): Q(1)}) == {(A.unit, x): Q(1)}

    def test_B_of_unit_is_zero(self, poly1):
        assert connes_B(poly1, {(poly1.unit,): Q(1)}) == {}

    def test_B_two_cyclic_terms_cancel(self, poly1):
        # B((x, x̄)) = (1, x̄, x̄) - (1, x̄, x̄) = 0
        A = poly1
        x = A.index["x1"]
        assert connes_B(A, {(x, x): Q(1)}) == {}

    def test_b_preserves_weight_and_drops_degree(self, lam2):
        A = lam2
        for t in chains_in_window(A, 3, 4):
            for k in boundary_b(A, {t: Q(1)}):
                assert sum(A.weights[i] for i in k) == sum(A.weights[i] for i in t)
                assert shifted_degree(A, k) == shifted_degree(A, t) - 1


class TestCupAndBracket:
    def test_cup_with_unit(self, poly1):
        A = poly1
        x = A.index["x1"]
        f = elementary(A, 1, (x,), x)
        left = cup(unit_cochain(A), f)
        right = cup(f, unit_cochain(A))
        assert left.table == f.table
        assert right.table == f.table

    def test_cup_sign_on_arity_one(self, poly1):
        # f = g = (x̄ ↦ x): (f∪g)(x̄, x̄) = (-1)^{1·1} x·x = -x²
        A = poly1
        x, x2 = A.index["x1"], A.index["x1^2"]
        f = elementary(A, 1, (x,), x)
        fg = cup(f, f)
        assert fg.table[(x, x)] == {x2: Q(-1)}

    def test_bracket_mu_mu_zero(self, lam2):
        A = lam2
        tba = {q: all_tuples_up_to_weight(A, q, 2 * q if q else 0) for q in range(6)}
        mu = multiplication_cochain(A)
        assert not gerstenhaber_bracket(mu, mu, tba).table

    def test_bracket_antisymmetry_exhaustive(self, lam2):
        A = lam2
        tba = {q: all_tuples_up_to_weight(A, q, 2 * q if q else 0) for q in range(6)}
        cochains = [elementary(A, 1, t, k) for t in tba[1] for k in range(A.dim)]
        cochains += [elementary(A, 0, (), k) for k in range(A.dim)]
        for f, g in iproduct(cochains, repeat=2):
            fg = gerstenhaber_bracket(f, g, tba)
            gf = gerstenhaber_bracket(g, f, tba)
            sign = -1 if ((f.degree + 1) % 2) and ((g.degree + 1) % 2) else 1
            merged = {k: dict(v) for k, v in fg.table.items()}
            for key, val in gf.table.items():
                acc = merged.setdefault(key, {})
                for k, c in val.items():
                    acc[k] = acc.get(k, Q(0)) + sign * c
            assert all(c == 0 for v in merged.values() for c in v.values())

    def test_self_bracket_odd_shifted_is_double_circle(self, poly1):
        # for ‖f‖ odd, {f, f} = 2 f∘f
        from mixhom.hochschild import circle

        A = poly1
        x = A.index["x1"]
        f = elementary(A, 1, (x,), x)  # degree -1, shifted degree 0... use arity-2
        g = Cochain(A, 2, -2, {(x, x): {A.index["x1^2"]: Q(1)}})
        assert (g.degree + 1) % 2 == 1
        tba = {q: all_tuples_up_to_weight(A, q, 5) for q in range(7)}
        br = gerstenhaber_bracket(g, g, tba)
        cc = circle(g, g, tba)
        doubled = {k: {a: 2 * b for a, b in v.items()} for k, v in cc.table.items()}
        assert br.table == doubled

    def test_coboundary_squares_to_zero(self, lam2):
        A = lam2
        tba = {q: all_tuples_up_to_weight(A, q, 2 * q if q else 0) for q in range(6)}
        for q in (0, 1, 2):
            for t in tba[q]:
                for k in range(A.dim):
                    f = elementary(A, q, t, k)
                    assert not coboundary(coboundary(f, tba), tba).table

    def test_cup_leibniz_right_convention(self, lam2):
        # δ(f∪g) = (-1)^{|g|} δf∪g + f∪δg, exhaustively on arity-1 pairs
        A = lam2
        tba = {q: all_tuples_up_to_weight(A, q, 2 * q if q else 0) for q in range(7)}
        cochains = [elementary(A, 1, t, k) for t in tba[1] for k in range(A.dim)]
        for f, g in iproduct(cochains, repeat=2):
            lhs = coboundary(cup(f, g), tba)
            s = -1 if g.degree % 2 else 1
            acc = {k: dict(v) for k, v in lhs.table.items()}
            for key, val in cup(coboundary(f, tba), g).table.items():
                a = acc.setdefault(key, {})
                for k, c in val.items():
                    a[k] = a.get(k, Q(0)) - s * c
            for key, val in cup(f, coboundary(g, tba)).table.items():
                a = acc.setdefault(key, {})
                for k, c in val.items():
                    a[k] = a.get(k, Q(0)) - c
            assert all(c == 0 for v in acc.values() for c in v.values())


class TestCap:
    def test_unit_cap_is_identity(self, lam2):
        A = lam2
        for t in chains_in_window(A, 3, 4):
            assert cap(unit_cochain(A), {t: Q(1)}) == {t: Q(1)}

    def test_cap_formula_example(self, poly1):
        A = poly1
        x = A.index["x1"]
        f = elementary(A, 1, (x,), x)
        assert cap(f, {(A.unit, x): Q(1)}) == {(x,): Q(1)}

    def test_cap_zero_when_arity_exceeds_length(self, poly1):
        A = poly1
        x = A.index["x1"]
        f = Cochain(A, 3, -3, {(x, x, x): {A.index["x1^3"]: Q(1)}})
        assert cap(f, {(A.unit, x): Q(1)}) == {}

    def test_contraction_composition_rule(self, lam2):
        # ι_f ι_g = (-1)^{|f||g|} ι_{g∪f} exhaustively in window
        A = lam2
        tba = {q: all_tuples_up_to_weight(A, q, 2 * q if q else 0) for q in range(6)}
        cochains = [elementary(A, 1, t, k) for t in tba[1] for k in range(A.dim)]
        cochains += [elementary(A, 2, t, k) for t in tba[2] for k in range(A.dim)]
        chains = chains_in_window(A, 4, 6)
        for f, g in iproduct(cochains[:24], cochains[:24]):
            gf = cup(g, f)
            sign = -1 if (f.degree % 2) and (g.degree % 2) else 1
            for t in chains:
                lhs = cap(f, cap(g, {t: Q(1)}))
                rhs = {k: sign * v for k, v in cap(gf, {t: Q(1)}).items()}
                assert chain_eq(lhs, rhs)

    def test_cap_descends_to_homology(self, lam2):
        # b(ι_f α) - (-1)^{|f|} ι_f(b α) = -(-1)^{|f|} ι_{δf} α
        A = lam2
        tba = {q: all_tuples_up_to_weight(A, q, 2 * q if q else 0) for q in range(6)}
        chains = chains_in_window(A, 3, 6)
        for q in (1, 2):
            for t in tba[q]:
                for k in range(A.dim):
                    f = elementary(A, q, t, k)
                    df = coboundary(f, tba)
                    s = -1 if f.degree % 2 else 1
                    for c in chains:
                        av = {c: Q(1)}
                        lhs = boundary_b(A, cap(f, av))
                        for kk, v in cap(f, boundary_b(A, av)).items():
                            lhs[kk] = lhs.get(kk, Q(0)) - s * v
                        rhs = {kk: -s * v for kk, v in cap(df, av).items()}
                        assert chain_eq(lhs, rhs)


class TestLieDerivative:
    def test_L_unit_vanishes(self, lam2):
        A = lam2
        for t in chains_in_window(A, 3, 4):
            assert lie_derivative(unit_cochain(A), {t: Q(1)}) == {}

    def test_L_f_on_zero_chain_is_B_then_contract(self, poly1):
        A = poly1
        x = A.index["x1"]
        f = elementary(A, 1, (x,), x)
        z = {(x,): Q(1)}
        expect = cap(f, connes_B(A, z))
        sign = -1 if f.degree % 2 else 1
        got = lie_derivative(f, z)
        # ι_f kills 0-chains, so L_f = B ι_f - (-1)^{|f|} ι_f B = -(-1)^{|f|} ι_f B
        assert got == {k: -sign * v for k, v in expect.items()}

    def test_L_mu_is_boundary_on_cycles(self, lam2):
        # the product cochain's Lie derivative agrees with b on homology:
        # on every b-cycle it lands in the image of b
        A = lam2
        mu = multiplication_cochain(A)
        for p in range(4):
            for w in range(5):
                basis = chain_basis(A, p, w)
                if not basis:
                    continue
                below = chain_basis(A, p - 1, w) if p else []
                above = chain_basis(A, p + 1, w)
                idx = {t: i for i, t in enumerate(basis)}
                bidx = {t: i for i, t in enumerate(below)}
                cols = []
                for t in basis:
                    col = [Q(0)] * len(below)
                    for k, v in boundary_b(A, {t: Q(1)}).items():
                        col[bidx[k]] = v
                    cols.append(col)
                # kernel of b on this piece
                M = ExactMatrix.from_columns(cols) if below else ExactMatrix.zero(0, len(basis))
                from mixhom.linalg import kernel_basis

                # L_mu has degree -1: on a cycle z in (p, w), L_mu(z) lives in
                # (p-1, w) and must be a boundary of this piece
                img_cols = [tuple(col) for col in cols]
                for kv in kernel_basis(M):
                    z = {t: c for t, c in zip(basis, kv) if c}
                    lz = lie_derivative(mu, z)
                    vec = [Q(0)] * len(below)
                    for k, v in lz.items():
                        vec[bidx[k]] = v
                    if img_cols:
                        assert solve_in_span(img_cols, vec) is not None
                    else:
                        assert all(v == 0 for v in vec)


class TestDualCochains:
    def test_B_star_definition_unfolds(self, lam2):
        A = lam2
        chains = chains_in_window(A, 4, 6)
        g = DualCochain(A, 1, {(A.index["ξ1"],): Q(1)})
        bs = B_star(g, chains)
        sign = -1 if g.degree % 2 else 1
        for t in chains:
            assert bs.table.get(t, Q(0)) == sign * g.evaluate(connes_B(A, {t: Q(1)}))

    def test_dual_mixed_axioms(self, lam2):
        # δ² = 0, B*² = 0, δB* + B*δ = 0 on elementary functionals
        A = lam2
        chains = chains_in_window(A, 4, 6)
        for t in chains_in_window(A, 3, 4):
            g = DualCochain(A, -shifted_degree(A, t), {t: Q(1)})
            assert not dual_coboundary(dual_coboundary(g, chains), chains).table
            assert not B_star(B_star(g, chains), chains).table
            anti = dual_coboundary(B_star(g, chains), chains).table
            for k, v in B_star(dual_coboundary(g, chains), chains).table.items():
                anti[k] = anti.get(k, Q(0)) + v
            assert all(v == 0 for v in anti.values())

    def test_cap_star_unit_is_identity(self, lam2):
        A = lam2
        chains = chains_in_window(A, 3, 5)
        g = DualCochain(A, 1, {(A.index["ξ1"],): Q(1), (A.index["ξ2"],): Q(2)})
        assert cap_star(unit_cochain(A), g, chains).table == g.table

    def test_cap_star_adjointness(self, lam2):
        # <cap_star(f, g), α> = (-1)^{|f||g|} <g, cap(f, α)>
        A = lam2
        chains = chains_in_window(A, 3, 5)
        x1 = A.index["ξ1"]
        f = elementary(A, 1, (x1,), A.index["ξ1ξ2"])
        g = DualCochain(A, 2, {(A.unit, x1, x1): Q(1)})
        cs = cap_star(f, g, chains)
        sign = -1 if (f.degree % 2) and (g.degree % 2) else 1
        for t in chains:
            assert cs.table.get(t, Q(0)) == sign * g.evaluate(cap(f, {t: Q(1)}))


class TestFrobeniusPD:
    def test_pd_of_unit_is_pairing_functional(self):
        A, pairing = exterior_pairing(2)
        chains = chains_in_window(A, 0, 2)
        eta = frobenius_pd(unit_cochain(A), pairing, chains)
        top = A.index["ξ1ξ2"]
        assert eta.table == {(top,): Q(1)}

    def test_pd_is_chain_map_and_eta_closed(self):
        A, pairing = exterior_pairing(2)
        tba = {q: all_tuples_up_to_weight(A, q, 2 * q if q else 0) for q in range(5)}
        chains = chains_in_window(A, 4, 8)
        for q in (0, 1, 2):
            for t in tba[q]:
                for k in range(A.dim):
                    f = elementary(A, q, t, k)
                    lhs = dual_coboundary(frobenius_pd(f, pairing, chains), chains).table
                    s = -1 if f.degree % 2 else 1
                    rhs = {
                        kk: s * v
                        for kk, v in frobenius_pd(coboundary(f, tba), pairing, chains).table.items()
                    }
                    assert lhs == {kk: v for kk, v in rhs.items() if v}
        # δ(η) = 0 for the exterior pairing
        eta = frobenius_pd(unit_cochain(A), pairing, chains)
        assert not dual_coboundary(eta, chains).table
