import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from clusterexp.tensor import (
    SvdFactors,
    apply_pseudo_inverse,
    contract,
    matrix_exponential,
    svd_truncated,
)


def test_contract_identity_vector():
    v = np.array([1.0, 2.0])
    assert np.allclose(contract(np.eye(2), v, [(1, 0)]), v)


def test_contract_matches_triple_loop():
    rng = np.random.default_rng(0)
    a, b = rng.normal(size=(2, 3)), rng.normal(size=(3, 4))
    ref = np.zeros((2, 4))
    for i in range(2):
        for j in range(4):
            for k in range(3):
                ref[i, j] += a[i, k] * b[k, j]
    assert np.allclose(contract(a, b, [(1, 0)]), ref)


def test_contract_without_pairs_is_outer_product():
    a, b = np.ones((2, 3)), np.ones((4,))
    out = contract(a, b, [])
    assert out.shape == (2, 3, 4)
    assert out.size == a.size * b.size


def test_contract_rejects_extent_mismatch():
    with pytest.raises(ValueError):
        contract(np.ones((2, 3)), np.ones((4, 2)), [(1, 0)])


def test_svd_of_zero_matrix_has_rank_zero():
    f = svd_truncated(np.zeros((3, 3)), 1e-12)
    assert f.rank == 0
    assert f.left.shape == (3, 0) and f.right.shape == (0, 3)
    assert np.allclose(f.reconstruct(), 0)


def test_svd_drops_values_below_threshold():
    f = svd_truncated(np.diag([3.0, 2.0, 1e-15]), 1e-12)
    assert f.rank == 2
    assert np.allclose(f.singular_values, [3.0, 2.0])


def test_svd_rejects_bad_input():
    with pytest.raises(ValueError):
        svd_truncated(np.array([[np.nan]]))
    with pytest.raises(ValueError):
        svd_truncated(np.eye(2), 1.0)


@settings(max_examples=40, deadline=None)
@given(arrays(np.float64, st.tuples(st.integers(1, 6), st.integers(1, 6)), elements=st.floats(-10, 10)))
def test_svd_reconstructs_within_tolerance(a):
    f = svd_truncated(a, 1e-12)
    s = np.linalg.svd(a, compute_uv=False)
    bound = 1e-12 * (s[0] if s.size else 0) * np.sqrt(max(a.shape)) + 1e-12
    assert np.linalg.norm(f.reconstruct() - a) <= bound + 1e-10 * np.linalg.norm(a)
    assert np.all(np.diff(f.singular_values) <= 0)


def test_exponential_of_zero_is_identity():
    assert np.array_equal(matrix_exponential(np.zeros((3, 3)), 2.5), np.eye(3))


def test_exponential_of_diagonal():
    t = 0.7 - 0.2j
    out = matrix_exponential(np.diag([1.0, -1.0]), t)
    assert np.allclose(out, np.diag([np.exp(t), np.exp(-t)]))


def test_exponential_rejects_non_hermitian():
    with pytest.raises(ValueError):
        matrix_exponential(np.array([[0.0, 1.0], [0.0, 0.0]]))


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000), st.floats(-2, 2))
def test_real_time_exponential_is_unitary(seed, dt):
    rng = np.random.default_rng(seed)
    a = rng.normal(size=(5, 5)) + 1j * rng.normal(size=(5, 5))
    u = matrix_exponential(a + a.conj().T, -1j * dt)
    assert np.allclose(u.conj().T @ u, np.eye(5), atol=1e-12)


def test_pseudo_inverse_of_identity():
    f = svd_truncated(np.eye(2))
    assert np.allclose(apply_pseudo_inverse(f, "left", np.eye(2)), np.eye(2))
    assert np.allclose(apply_pseudo_inverse(f, "right", np.eye(2)), np.eye(2))


def test_pseudo_inverse_recovers_identity_on_row_space():
    rng = np.random.default_rng(1)
    a = rng.normal(size=(5, 3))
    f = svd_truncated(a)
    assert np.allclose(apply_pseudo_inverse(f, "left", a), np.eye(3), atol=1e-12)


def test_pseudo_inverse_matches_numpy():
    rng = np.random.default_rng(2)
    a = rng.normal(size=(4, 6))
    f = SvdFactors(*np.linalg.svd(a, full_matrices=False))
    target = rng.normal(size=(4, 2))
    assert np.allclose(apply_pseudo_inverse(f, "left", target), np.linalg.pinv(a) @ target)
