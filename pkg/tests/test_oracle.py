import numpy as np
import pytest

from clusterexp import models
from clusterexp.mps import from_dense, neel_state
from clusterexp.oracle import (
    DenseEvolver,
    DenseState,
    basis_state,
    dense_evolve,
    entanglement_entropy,
    mps_to_dense,
    neel_dense,
    occupations,
    operator_distance,
    sz_expectation,
)
from clusterexp.tensor import matrix_exponential


def random_dense(n, seed=0):
    rng = np.random.default_rng(seed)
    psi = rng.normal(size=2 ** n) + 1j * rng.normal(size=2 ** n)
    return DenseState(n, psi / np.linalg.norm(psi))


def test_zero_time_leaves_state_unchanged():
    psi = random_dense(5)
    out = dense_evolve(psi, models.xxz_term(0.5), 0.0)
    assert np.allclose(out.amplitudes, psi.amplitudes, atol=1e-14)


@pytest.mark.parametrize("t", [0.3, 1.0, 2.7])
def test_two_site_neel_occupation_is_cosine(t):
    out = dense_evolve(neel_dense(2), models.xxz_term(0.5), -1j * t)
    assert abs(occupations(out)[0] - (0.5 + np.cos(t) / 2)) < 1e-12


def test_real_time_preserves_norm():
    psi = random_dense(8, seed=3)
    out = dense_evolve(psi, models.xxz_term(0.5), -1.3j)
    assert abs(out.norm() - 1.0) < 1e-12


def test_sector_evolver_matches_full_exponential():
    h = models.xxz_term(0.5)
    n = 7
    psi = random_dense(n, seed=1)
    t = -0.8j
    ref = matrix_exponential(models.cluster_hamiltonian(h, n), t) @ psi.amplitudes
    assert np.allclose(DenseEvolver(h, n).evolve(psi, t).amplitudes, ref, atol=1e-12)


def test_evolver_without_sz_symmetry():
    # a transverse field breaks total Sz, so the evolver must fall back to one block
    term = models.xxz_term(0.5).term + 0.3 * np.kron(models.SX, models.ID2)
    h = models.TwoSiteHamiltonian(2, term)
    psi = random_dense(5, seed=2)
    ref = matrix_exponential(models.cluster_hamiltonian(h, 5), -0.4j) @ psi.amplitudes
    assert np.allclose(dense_evolve(psi, h, -0.4j).amplitudes, ref, atol=1e-12)


def test_imaginary_time_lowers_energy():
    h = models.xxz_term(0.5)
    ev = DenseEvolver(h, 6)
    psi = random_dense(6, seed=4)
    e0 = np.vdot(psi.amplitudes, ev.hamiltonian @ psi.amplitudes).real
    out = ev.evolve(psi, -1.0).normalized()
    e1 = np.vdot(out.amplitudes, ev.hamiltonian @ out.amplitudes).real
    assert e1 < e0


def test_oracle_size_cap():
    with pytest.raises(ValueError):
        DenseEvolver(models.xxz_term(0.5), 15)


def test_operator_distance_cases():
    rng = np.random.default_rng(0)
    b = rng.normal(size=(4, 4))
    assert operator_distance(b, b) == 0.0
    assert operator_distance(2 * b, b) == pytest.approx(0.5)
    assert operator_distance(np.zeros((2, 2)), np.zeros((2, 2))) == 0.0


def test_neel_mps_is_a_basis_vector():
    psi = mps_to_dense(neel_state(6))
    assert np.allclose(psi.amplitudes, neel_dense(6).amplitudes)
    assert np.count_nonzero(np.abs(psi.amplitudes) > 1e-14) == 1


def test_dense_mps_round_trip():
    psi = random_dense(7, seed=5)
    back = mps_to_dense(from_dense(psi.amplitudes, 7))
    assert np.max(np.abs(back.amplitudes - psi.amplitudes)) < 1e-12


def test_basis_state_observables():
    psi = basis_state([0, 1, 1, 0])
    assert list(occupations(psi)) == [1.0, 0.0, 0.0, 1.0]
    assert sz_expectation(psi, 0) == pytest.approx(0.5)
    assert sz_expectation(psi, 1) == pytest.approx(-0.5)
    assert entanglement_entropy(psi, 2) == pytest.approx(0.0, abs=1e-14)


def test_singlet_entropy():
    psi = DenseState(2, np.array([0, 1, -1, 0]) / np.sqrt(2))
    assert entanglement_entropy(psi, 1) == pytest.approx(np.log(2))
