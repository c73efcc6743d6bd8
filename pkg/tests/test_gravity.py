from fractions import Fraction

import pytest

from mixhom.calculus import attach_duality, poisson_bundle, polyvector_pd_twist
from mixhom.gravity import GravityStructure, compare_across_iso, verify_gravity_axioms
from mixhom.koszul import (dual_bivector_coeffs, fit_dual_product_twist,
    koszul_poisson_identification, poisson_hc_iso)
from mixhom.mixed import NegativeCyclic, default_truncation, slice_from_poisson
from mixhom.poisson import PoissonContext, quadratic_bivector

Q = Fraction


@pytest.fixture(scope="module")
def zero_pi_structure():
    ctx = PoissonContext.make(1, "poly")
    sl = slice_from_poisson(ctx, {}, 4)
    hc = NegativeCyclic(sl, default_truncation(sl))
    bundle = poisson_bundle(ctx, {}, sl, w_shift_min=-1, w_shift_max=3, coeff_wmax=5)
    piece = (1, 1)
    coords = sl.hh(piece).reduce(sl.element_vector(piece, {(0, 1): Q(1)}))
    eta = (piece, [i for i, c in enumerate(coords) if c][0])
    duality = attach_duality(bundle, eta, pd_twist=polyvector_pd_twist(1))
    return GravityStructure(hc, duality)


class TestBrackets:
    def test_bracket_with_u_multiple_vanishes(self, zero_pi_structure):
        g = zero_pi_structure
        # the deep u-tower classes have zero constant term, so any bracket
        # with them dies through π*
        tower = [k for k in g.basis if k[0][0] < 0]
        assert tower
        other = [k for k in g.basis if k[0][0] >= 0]
        for t in tower:
            for o in other:
                assert g.bracket([t, o]) == {}
                assert g.bracket([o, t]) == {}

    def test_golden_binary_table(self, zero_pi_structure):
        # frozen values: the binary bracket against the constant-function
        # class measures the divergence; on the weight-w one-form class it
        # returns -(w-1) times the weight-(w-1) class
        g = zero_pi_structure
        z0 = ((0, 0), 0)
        vals = {}
        for k in g.basis:
            if k[0][0] == 1:
                got = g.bracket([z0, k])
                if got:
                    ((piece, idx), coeff), = got.items()
                    vals[k[0][1]] = (piece, coeff)
        assert vals == {
            2: ((1, 1), Q(-1)),
            3: ((1, 2), Q(-2)),
            4: ((1, 3), Q(-3)),
        }

    def test_skew_instance(self, zero_pi_structure):
        g = zero_pi_structure
        z0 = ((0, 0), 0)
        b = ((1, 2), 0)
        lhs = g.bracket([z0, b])
        rhs = g.bracket([b, z0])
        s = -1 if ((g.degree(z0) + 1) % 2) and ((g.degree(b) + 1) % 2) else 1
        merged = dict(lhs)
        for k, v in rhs.items():
            merged[k] = merged.get(k, Q(0)) + s * v
        assert all(v == 0 for v in merged.values())

    def test_axiom_report(self, zero_pi_structure):
        rep = verify_gravity_axioms(zero_pi_structure, n_max=3, check_max=4)
        assert rep.passed, (rep.skew_failures + rep.jacobi_failures)[:4]
        assert rep.nonzero_brackets[2] > 0
        assert rep.nonzero_brackets[3] > 0


@pytest.fixture(scope="module")
def pair():
    from mixhom.calculus import poisson_dual_bundle
    from mixhom.mixed import slice_from_poisson_dual
    from mixhom.poisson import DualSide

    circ = {(1, 2, 1, 2): Q(1), (2, 3, 2, 3): Q(1), (3, 1, 3, 1): Q(1)}
    ident = koszul_poisson_identification(3)
    ctx = ident.ctx_poly
    pi = quadratic_bivector(ctx, circ)
    sl = slice_from_poisson(ctx, pi, 7)
    hc = NegativeCyclic(sl, default_truncation(sl))
    bundle = poisson_bundle(ctx, pi, sl, w_shift_min=-3, w_shift_max=4, coeff_wmax=7)
    piece = (3, 3)
    coords = sl.hh(piece).reduce(sl.element_vector(piece, {(0, 0, 0, 1, 1, 1): Q(1)}))
    dp = attach_duality(bundle, (piece, [i for i, c in enumerate(coords) if c][0]),
                        pd_twist=polyvector_pd_twist(1))
    gp = GravityStructure(hc, dp, [k for k in GravityStructure(hc, dp).basis if k[0][1] <= 3])

    pid = quadratic_bivector(ident.ctx_ext, dual_bivector_coeffs(circ))
    duals = DualSide(ident.ctx_ext, pid, w_max=7)
    sld = slice_from_poisson_dual(duals)
    hcd = NegativeCyclic(sld, default_truncation(sld))
    bd = poisson_dual_bundle(duals, sld, w_shift_min=-3, w_shift_max=4, coeff_wmax=7)
    coords = sld.hh(piece).reduce(sld.element_vector(piece, {(1, 1, 1, 0, 0, 0): Q(1)}))
    eta_d = (piece, [i for i, c in enumerate(coords) if c][0])
    twist = fit_dual_product_twist(ident, dp, bd, eta_d)
    dd = attach_duality(bd, eta_d, pd_twist=twist)
    gd = GravityStructure(hcd, dd, [k for k in GravityStructure(hcd, dd).basis if k[0][1] <= 3])
    return ident, gp, gd


class TestIso:
    def test_identity_iso_trivially_matches(self, zero_pi_structure):
        g = zero_pi_structure
        iso = {k: {k: Q(1)} for k in g.basis}
        rep = compare_across_iso(g, g, iso, arity_max=3)
        assert rep.passed and rep.compared > 0

    def test_koszul_identification_intertwines(self, pair):
        ident, gp, gd = pair
        iso = poisson_hc_iso(ident, gp, gd)
        rep = compare_across_iso(gp, gd, iso, arity_max=3)
        assert rep.passed, rep.mismatches[:4]
        assert rep.compared > 100

    def test_sign_flip_negative_control(self, pair):
        ident, gp, gd = pair
        iso = poisson_hc_iso(ident, gp, gd)
        # flip a class that feeds a nonzero binary bracket but is absent
        # from that bracket's output
        flip_key = None
        for a in gp.basis:
            for b in gp.basis:
                got = gp.table_lookup([a, b])
                if got and a not in got:
                    flip_key = a
                    break
            if flip_key:
                break
        assert flip_key is not None
        flipped = {
            k: ({kk: -vv for kk, vv in v.items()} if k == flip_key else v)
            for k, v in iso.items()
        }
        rep = compare_across_iso(gp, gd, flipped, arity_max=2)
        assert rep.mismatches, "sign flip must be reported as a mismatch"
