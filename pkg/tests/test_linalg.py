from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from mixhom.linalg import (
    DimensionMismatchError,
    ExactMatrix,
    NotAComplexError,
    homology_presentation,
    image_basis,
    kernel_basis,
    solve_in_span,
)

Q = Fraction


def test_kernel_of_zero_map_is_identity_basis():
    M = ExactMatrix.zero(3, 3)
    basis = kernel_basis(M)
    assert basis == [
        (1, 0, 0),
        (0, 1, 0),
        (0, 0, 1),
    ]


def test_kernel_of_identity_is_empty():
    assert kernel_basis(ExactMatrix.identity(4)) == []


def test_kernel_of_1x2_row():
    # [[1, 2]] reduces to itself; free column 1 gives (-2, 1)
    M = ExactMatrix.from_rows([[1, 2]])
    assert kernel_basis(M) == [(Q(-2), Q(1))]


def test_solve_not_in_span():
    assert solve_in_span([(Q(1), Q(0))], (Q(0), Q(1))) is None


def test_solve_standard_basis():
    coeffs = solve_in_span([(Q(1), Q(0)), (Q(0), Q(1))], (Q(3), Q(5)))
    assert coeffs == (Q(3), Q(5))


def test_solve_scaling():
    coeffs = solve_in_span([(Q(2), Q(4))], (Q(1), Q(2)))
    assert coeffs == (Q(1, 2),)


def test_solve_dimension_mismatch():
    with pytest.raises(DimensionMismatchError):
        solve_in_span([(Q(1), Q(0))], (Q(1),))


def test_homology_zero_maps():
    d_in = ExactMatrix.zero(2, 0)
    d_out = ExactMatrix.zero(0, 2)
    pres = homology_presentation(d_in, d_out)
    assert pres.dim == 2


def test_homology_identity_in():
    d_in = ExactMatrix.identity(2)
    d_out = ExactMatrix.zero(0, 2)
    pres = homology_presentation(d_in, d_out)
    assert pres.dim == 0


def test_two_step_complex():
    # k -> k^2 -> k with d_in = (1,1)^T, d_out = (1,-1): exact in the middle
    d_in = ExactMatrix.from_columns([(Q(1), Q(1))])
    d_out = ExactMatrix.from_rows([[1, -1]])
    pres = homology_presentation(d_in, d_out)
    assert pres.dim == 0


def test_not_a_complex_reports_column():
    d_in = ExactMatrix.identity(2)
    d_out = ExactMatrix.from_rows([[1, 0]])
    with pytest.raises(NotAComplexError) as exc:
        homology_presentation(d_in, d_out)
    assert exc.value.column == 0


def test_presentation_reduction_properties():
    # circle-like complex: d_out = 0, d_in has rank 1 inside k^3
    d_in = ExactMatrix.from_columns([(Q(1), Q(1), Q(0)), (Q(2), Q(2), Q(0))])
    d_out = ExactMatrix.zero(0, 3)
    pres = homology_presentation(d_in, d_out)
    assert pres.dim == 2
    for b in pres.boundary_basis:
        assert all(c == 0 for c in pres.reduce(b))
    for i, rep in enumerate(pres.cycle_basis):
        coords = pres.reduce(rep)
        assert coords == tuple(Q(int(j == i)) for j in range(pres.dim))


def test_rank_nullity_checked():
    M = ExactMatrix.from_rows([[1, 2, 3], [2, 4, 6], [0, 1, 1]])
    assert M.rank() + len(kernel_basis(M)) == M.cols


small_fracs = st.builds(
    Fraction,
    st.integers(min_value=-9, max_value=9),
    st.integers(min_value=1, max_value=4),
)


@settings(max_examples=60, deadline=None)
@given(
    st.lists(
        st.lists(small_fracs, min_size=3, max_size=3),
        min_size=1,
        max_size=4,
    )
)
def test_kernel_vectors_really_in_kernel(rows):
    M = ExactMatrix.from_rows(rows)
    for v in kernel_basis(M):
        assert all(c == 0 for c in M.apply(v))
    # determinism: same input, same output
    assert kernel_basis(M) == kernel_basis(ExactMatrix.from_rows(rows))


@settings(max_examples=60, deadline=None)
@given(
    st.lists(st.lists(small_fracs, min_size=4, max_size=4), min_size=1, max_size=3),
    st.lists(small_fracs, min_size=1, max_size=3),
)
def test_solve_reproduces_target(vectors, coeffs):
    n = min(len(vectors), len(coeffs))
    vectors = [tuple(v) for v in vectors[:n]]
    coeffs = coeffs[:n]
    target = [sum((c * v[j] for c, v in zip(coeffs, vectors)), Q(0)) for j in range(4)]
    sol = solve_in_span(vectors, target)
    assert sol is not None
    rebuilt = [sum((c * v[j] for c, v in zip(sol, vectors)), Q(0)) for j in range(4)]
    assert rebuilt == target


def test_image_basis_canonical():
    M = ExactMatrix.from_columns([(Q(1), Q(1)), (Q(2), Q(2)), (Q(0), Q(1))])
    basis = image_basis(M)
    assert basis == [(Q(1), Q(0)), (Q(0), Q(1))]
