import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from haarstein.errors import DegenerateInputError, DimensionError
from haarstein.haar import (
    group_residual,
    haar_batch,
    haar_from_gaussian,
    sample_gaussian_matrix,
    sample_haar,
    sample_haar_frame,
)
from haarstein.linear import normalize_coefficients, trace_statistic
from haarstein.moments import quadrature_oracle
from haarstein.rng import RngStream

from conftest import within_se


def test_gaussian_real_mean():
    x = sample_gaussian_matrix(1, "real", RngStream(1), size=10**6).ravel()
    assert abs(x.mean()) <= 4 / math.sqrt(10**6)


def test_gaussian_complex_unit_modulus_mean():
    z = sample_gaussian_matrix(2, "complex", RngStream(2), size=250_000).ravel()
    assert within_se(np.abs(z) ** 2, 1.0)
    # real and imaginary parts each carry variance 1/2
    assert within_se(z.real**2, 0.5) and within_se(z.imag**2, 0.5)


def test_gaussian_deterministic():
    a = sample_gaussian_matrix(3, "real", RngStream(42))
    b = sample_gaussian_matrix(3, "real", RngStream(42))
    assert a.tobytes() == b.tobytes()


def test_gaussian_rejects_zero_dim():
    with pytest.raises(DimensionError):
        sample_gaussian_matrix(0, "real", RngStream(1))


def test_haar_from_identity():
    assert np.allclose(haar_from_gaussian(np.eye(4)), np.eye(4), atol=1e-15)


def test_haar_from_signed_diagonal():
    Q = haar_from_gaussian(np.diag([-2.0, 3.0]))
    assert np.allclose(Q, np.diag([-1.0, 1.0]), atol=1e-15)


def test_haar_from_rank_deficient():
    G = np.ones((3, 3))
    with pytest.raises(DegenerateInputError):
        haar_from_gaussian(G)


@pytest.mark.parametrize("group", ["orthogonal", "unitary"])
@pytest.mark.parametrize("n", [1, 2, 7, 50, 200])
def test_residual_tolerance(group, n):
    M = sample_haar(n, group, RngStream(n), size=20)
    assert np.max(group_residual(M)) <= 1e-12 * n


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**32), n=st.integers(1, 8), cplx=st.booleans())
def test_equivariance(seed, n, cplx):
    group = "unitary" if cplx else "orthogonal"
    G = sample_gaussian_matrix(n, "complex" if cplx else "real", RngStream(seed))
    U = sample_haar(n, group, RngStream(seed, 1))
    assert np.allclose(haar_from_gaussian(U @ G), U @ haar_from_gaussian(G), atol=1e-10)


def test_o1_is_plus_minus_one():
    m = sample_haar(1, "orthogonal", RngStream(3), size=100_000).ravel()
    assert set(np.unique(m)) == {-1.0, 1.0}
    assert within_se(m > 0, 0.5)


def test_second_moments_n4():
    M = sample_haar(4, "orthogonal", RngStream(4), size=100_000)
    assert within_se(M[:, 0, 0] * M[:, 1, 1], 0.0)
    assert within_se(M[:, 0, 0] ** 2, 0.25)


def test_fourth_moment_o2_against_quadrature():
    exact = quadrature_oracle("O(2)", [(0, 0)] * 4)
    assert abs(exact - 3 / 8) <= 1e-12
    M = sample_haar(2, "orthogonal", RngStream(5), size=100_000)
    assert within_se(M[:, 0, 0] ** 4, exact)


@pytest.mark.parametrize("n", [3, 5])
@pytest.mark.parametrize("group", ["orthogonal", "unitary"])
def test_second_moment_grid(n, group):
    M = sample_haar(n, group, RngStream(n, 7), size=100_000)
    for i, j, k, l in [(0, 0, 0, 0), (0, 1, 0, 1), (0, 0, 1, 1), (1, 2, 2, 1), (0, 1, 1, 0)]:
        prod = M[:, i, j] * np.conj(M[:, k, l])
        target = (i == k) * (j == l) / n
        assert within_se(prod.real, target), (i, j, k, l)


@pytest.mark.parametrize("group", ["orthogonal", "unitary"])
def test_rotation_invariance_ks(group):
    n = 5
    A = normalize_coefficients(np.arange(1.0, 26.0).reshape(5, 5), group)
    Q = sample_haar(n, group, RngStream(77))
    M1 = sample_haar(n, group, RngStream(78), size=100_000)
    M2 = sample_haar(n, group, RngStream(79), size=100_000)
    w1 = trace_statistic(A, Q @ M1).real
    w2 = trace_statistic(A, M2).real
    assert stats.ks_2samp(w1, w2).pvalue > 1e-3
    w3 = trace_statistic(A, M1 @ Q).real
    assert stats.ks_2samp(w3, w2).pvalue > 1e-3


def test_frame_matches_full_matrix_columns():
    G = sample_gaussian_matrix(6, "real", RngStream(8))
    assert np.allclose(haar_from_gaussian(G[:, :2]), haar_from_gaussian(G)[:, :2], atol=1e-13)
    K = sample_haar_frame(6, 2, "unitary", RngStream(9), size=10)
    KhK = np.conj(np.swapaxes(K, -1, -2)) @ K
    assert np.max(np.abs(KhK - np.eye(2))) <= 1e-12


def test_batch_worker_invariant():
    a = haar_batch(4, "unitary", 9000, RngStream(10), workers=1)
    b = haar_batch(4, "unitary", 9000, RngStream(10), workers=3)
    assert a.tobytes() == b.tobytes()


def test_group_residual_examples():
    assert group_residual(np.eye(3)) == 0.0
    assert group_residual(np.diag([2.0, 1.0])) == 3.0
