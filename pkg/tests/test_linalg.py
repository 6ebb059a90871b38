import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from partialcs.errors import DimensionMismatch, NonFiniteInput, NotSymmetric, RankDeficient
from partialcs.linalg import (
    build_projector,
    least_squares_solve,
    null_space_basis,
    qr_factor,
    row_space_basis,
    spectral_norm,
    sym_eig,
    sym_eig_batch,
)


def test_qr_identity():
    f = qr_factor(np.eye(3))
    assert f.rank == 3
    np.testing.assert_allclose(np.abs(f.q), np.eye(3), atol=1e-15)
    np.testing.assert_allclose(np.abs(f.r), np.eye(3), atol=1e-15)


def test_qr_single_column_norm():
    f = qr_factor(np.array([[3.0], [4.0]]))
    assert f.rank == 1
    assert abs(f.r[0, 0]) == pytest.approx(5.0, abs=1e-14)


def test_qr_reconstruction(rng):
    m = rng.standard_normal((8, 5))
    f = qr_factor(m)
    assert f.rank == 5 and f.full_column_rank
    assert np.max(np.abs(f.q @ f.r - m)) <= 1e-9
    np.testing.assert_allclose(f.q.T @ f.q, np.eye(5), atol=1e-12)


def test_qr_detects_rank_deficiency(rng):
    m = rng.standard_normal((6, 3))
    m = np.column_stack([m, m[:, 0] + m[:, 1]])
    assert qr_factor(m).rank == 3


@pytest.mark.parametrize("bad", [np.nan, np.inf, -np.inf])
def test_non_finite_rejected(bad):
    m = np.eye(3)
    m[1, 2] = bad
    with pytest.raises(NonFiniteInput):
        qr_factor(m)


def test_least_squares_square(rng):
    m = rng.standard_normal((5, 5))
    x0 = rng.standard_normal(5)
    np.testing.assert_allclose(least_squares_solve(m, m @ x0), x0, atol=1e-10)


def test_least_squares_consistent_overdetermined(rng):
    m = rng.standard_normal((9, 4))
    x0 = rng.standard_normal(4)
    np.testing.assert_allclose(least_squares_solve(m, m @ x0), x0, atol=1e-10)


def test_least_squares_normal_equations(rng):
    m = rng.standard_normal((12, 5))
    b = rng.standard_normal(12)
    x = least_squares_solve(m, b)
    assert np.max(np.abs(m.T @ (m @ x - b))) <= 1e-8


def test_least_squares_errors(rng):
    m = rng.standard_normal((6, 3))
    with pytest.raises(DimensionMismatch):
        least_squares_solve(m, np.ones(5))
    with pytest.raises(RankDeficient):
        least_squares_solve(np.column_stack([m, m[:, 0]]), np.ones(6))


def test_projector_axis_column():
    proj = build_projector(np.array([[1.0], [0.0]]))
    np.testing.assert_allclose(proj.p, np.diag([0.0, 1.0]), atol=1e-15)


def test_projector_orthonormal_columns(rng):
    q, _ = np.linalg.qr(rng.standard_normal((7, 3)))
    proj = build_projector(q)
    np.testing.assert_allclose(proj.p, np.eye(7) - q @ q.T, atol=1e-12)


def test_projector_properties(rng):
    a2 = rng.standard_normal((10, 3))
    p = build_projector(a2).p
    assert np.max(np.abs(p @ p - p)) <= 1e-9
    assert np.max(np.abs(p @ a2)) <= 1e-9
    np.testing.assert_array_equal(p, p.T)


def test_projector_empty_block_is_identity():
    np.testing.assert_array_equal(build_projector(np.zeros((4, 0)), k=4).p, np.eye(4))


def test_projector_rank_deficient(rng):
    a2 = rng.standard_normal((6, 2))
    with pytest.raises(RankDeficient):
        build_projector(np.column_stack([a2, 2 * a2[:, 1]]))
    with pytest.raises(RankDeficient):
        build_projector(rng.standard_normal((3, 4)))


def test_null_space_injective():
    assert null_space_basis(np.eye(4)).shape == (4, 0)


def test_null_space_one_dimensional():
    b = null_space_basis(np.array([[1.0, 1.0]]))
    assert b.shape == (2, 1)
    np.testing.assert_allclose(np.abs(b[:, 0]), [2**-0.5, 2**-0.5], atol=1e-14)
    assert b[0, 0] * b[1, 0] < 0


def test_null_space_random(rng):
    m = rng.standard_normal((6, 10))
    b = null_space_basis(m)
    assert b.shape == (10, 4)
    assert np.max(np.abs(m @ b)) <= 1e-8
    np.testing.assert_allclose(b.T @ b, np.eye(4), atol=1e-9)


def test_row_space_complements_null_space(rng):
    m = rng.standard_normal((4, 9))
    m[3] = m[0] - m[1]
    rows = row_space_basis(m)
    null = null_space_basis(m)
    assert rows.shape[1] + null.shape[1] == 9
    assert np.max(np.abs(rows.T @ null)) <= 1e-12


@pytest.mark.parametrize(
    "g, expected",
    [
        (np.diag([1.0, 2.0, 3.0]), [1.0, 2.0, 3.0]),
        (np.array([[2.0, 1.0], [1.0, 2.0]]), [1.0, 3.0]),
        (np.array([[5.0]]), [5.0]),
        (np.diag([3.0, -1.0, 0.0]), [-1.0, 0.0, 3.0]),
    ],
)
def test_sym_eig_closed_forms(g, expected):
    np.testing.assert_allclose(sym_eig(g), expected, atol=1e-14)


def test_sym_eig_trace_determinant(rng):
    b = rng.standard_normal((5, 5))
    g = b.T @ b
    lam = sym_eig(g)
    assert np.sum(lam) == pytest.approx(np.trace(g), rel=1e-8)
    assert np.prod(lam) == pytest.approx(np.linalg.det(g), rel=1e-8)


@pytest.mark.parametrize("n", [2, 3, 7, 16, 33])
def test_sym_eig_matches_lapack(rng, n):
    b = rng.standard_normal((n, n))
    g = b + b.T
    np.testing.assert_allclose(sym_eig(g), np.linalg.eigvalsh(g), atol=1e-10 * np.abs(g).max())


def test_sym_eig_batch(rng):
    b = rng.standard_normal((50, 4, 4))
    g = np.einsum("bij,bik->bjk", b, b)
    np.testing.assert_allclose(sym_eig_batch(g), np.linalg.eigvalsh(g), atol=1e-12)


def test_sym_eig_rejects_asymmetric():
    with pytest.raises(NotSymmetric):
        sym_eig(np.array([[1.0, 2.0], [0.0, 1.0]]))


@given(arrays(np.float64, (4, 4), elements=st.floats(-10, 10, allow_subnormal=False)))
@settings(max_examples=60, deadline=None)
def test_sym_eig_property(b):
    g = b + b.T
    lam = sym_eig(g)
    assert np.all(np.diff(lam) >= 0)
    np.testing.assert_allclose(lam, np.linalg.eigvalsh(g), atol=1e-9 * max(1.0, np.abs(g).max()))


@pytest.mark.parametrize("m, expected", [(np.eye(3), 1.0), (np.diag([3.0, 1.0]), 3.0)])
def test_spectral_norm_closed_forms(m, expected):
    assert spectral_norm(m) == pytest.approx(expected, abs=1e-14)


def test_spectral_norm_random_lower_bound(rng):
    m = rng.standard_normal((6, 4))
    v = rng.standard_normal((4, 1000))
    v /= np.linalg.norm(v, axis=0)
    oracle = np.max(np.linalg.norm(m @ v, axis=0))
    result = spectral_norm(m)
    assert result >= oracle - 1e-8
    assert result == pytest.approx(np.linalg.norm(m, 2), rel=1e-12)
