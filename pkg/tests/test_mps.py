import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from clusterexp import models
from clusterexp.mpo import build
from clusterexp.mps import (
    FiniteMps,
    apply_mpo,
    canonicalize,
    energy,
    entanglement_entropy,
    evolve,
    from_dense,
    local_expectation,
    neel_state,
    norm,
    occupations,
    overlap,
    product_state,
    random_state,
    schmidt_values,
    to_dense,
    truncate,
)
from clusterexp.oracle import DenseEvolver, mps_to_dense, neel_dense
from clusterexp.oracle import occupations as dense_occ
from clusterexp.models import SZ

XXZ = models.xxz_term(0.5)


def singlet():
    return from_dense(np.array([0, 1, -1, 0]) / np.sqrt(2), 2)


def test_neel_two_sites():
    s = neel_state(2)
    assert local_expectation(s, SZ, 0).real == pytest.approx(0.5)
    assert local_expectation(s, SZ, 1).real == pytest.approx(-0.5)


def test_neel_occupations_alternate():
    assert list(occupations(neel_state(8))) == [1, 0, 1, 0, 1, 0, 1, 0]


def test_neel_needs_even_length():
    with pytest.raises(ValueError):
        neel_state(5)


def test_bond_mismatch_rejected():
    with pytest.raises(ValueError):
        FiniteMps([np.ones((1, 2, 2)), np.ones((3, 2, 1))])


def test_identity_mpo_keeps_state():
    s = random_state(6, seed=1)
    mpo, _ = build(XXZ, 0.0, 5)
    out = apply_mpo(s, mpo)
    fid = abs(overlap(s, out)) ** 2 / (norm(s) ** 2 * norm(out) ** 2)
    assert fid == pytest.approx(1.0, abs=1e-12)


def test_apply_mpo_matches_dense_on_four_sites():
    dt = 0.2
    ev = DenseEvolver(XXZ, 4)
    ref = ev.evolve(neel_dense(4), -1j * dt).amplitudes
    mpo3, _ = build(XXZ, -1j * dt, 3)
    err3 = np.linalg.norm(to_dense(apply_mpo(neel_state(4), mpo3)) - ref)
    assert 1e-8 < err3 < 10 * dt ** 3
    # p = 4 covers the whole chain, so the step is exact
    mpo4, _ = build(XXZ, -1j * dt, 4)
    assert np.linalg.norm(to_dense(apply_mpo(neel_state(4), mpo4)) - ref) < 1e-12


def test_apply_mpo_bond_growth():
    mpo, _ = build(XXZ, -0.5j, 5)
    out = apply_mpo(neel_state(6), mpo)
    assert out.bond_dims() == [21] * 5


def test_truncate_without_loss():
    s = random_state(6, chi=3, seed=2)
    out, err = truncate(s, chi_max=64)
    assert err == 0.0
    a, b = to_dense(s), to_dense(out)
    assert abs(abs(np.vdot(a, b)) / np.linalg.norm(a) - 1) < 1e-12


def test_truncate_singlet_to_product():
    out, err = truncate(singlet(), chi_max=1)
    assert err == pytest.approx(np.sqrt(0.5))
    assert out.bond_dims() == [1]
    assert entanglement_entropy(out, 1) == pytest.approx(0.0, abs=1e-12)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10_000), st.integers(1, 4))
def test_truncation_error_bounds_infidelity(seed, chi):
    s = random_state(6, chi=6, seed=seed)
    out, err = truncate(s, chi_max=chi)
    assert max(out.bond_dims()) <= chi
    assert norm(out) == pytest.approx(1.0, abs=1e-12)
    a = to_dense(s) / norm(s)
    dist = np.linalg.norm(a - to_dense(out) * np.exp(1j * np.angle(np.vdot(to_dense(out), a))))
    # discarded weight summed over cuts bounds the state distance
    assert dist <= 2 * err + 1e-10


def test_entropy_cases():
    assert entanglement_entropy(neel_state(4), 2) == pytest.approx(0.0, abs=1e-14)
    assert entanglement_entropy(singlet(), 1) == pytest.approx(np.log(2))


def test_entropy_is_gauge_invariant():
    s = random_state(8, chi=4, seed=3)
    e0 = entanglement_entropy(s, 4)
    canonicalize(s, 7)
    assert abs(entanglement_entropy(s, 4) - e0) < 1e-12
    assert np.sum(schmidt_values(s, 4) ** 2) == pytest.approx(1.0)


def test_product_state_normalizes():
    s = product_state([[3, 4], [1, 0]])
    assert norm(s) == pytest.approx(1.0)


def test_zero_steps_give_empty_series():
    mpo, _ = build(XXZ, -0.5j, 3)
    s = neel_state(4)
    out, rec = evolve(s, mpo, 0, chi_max=16)
    assert rec.steps == [] and rec.occupations == []
    assert np.allclose(to_dense(out), to_dense(s))


def test_evolve_records_initial_row():
    mpo, _ = build(XXZ, -0.5j, 3)
    _, rec = evolve(neel_state(6), mpo, 2, chi_max=16)
    assert rec.steps == [0, 1, 2]
    assert rec.times == [0.0, 0.5, 1.0]
    assert rec.occupations[0] == [1, 0, 1, 0, 1, 0]


def test_evolve_matches_dense_on_eight_sites():
    dt = 0.5
    mpo, _ = build(XXZ, -1j * dt, 5)
    _, rec = evolve(neel_state(8), mpo, 6, chi_max=64)
    ev = DenseEvolver(XXZ, 8)
    for k, occ in zip(rec.steps, rec.occupations):
        ref = dense_occ(ev.evolve(neel_dense(8), -1j * dt * k))
        assert np.max(np.abs(np.array(occ) - ref)) < 2e-3


def test_total_sz_conserved_per_step():
    mpo, _ = build(XXZ, -0.7j, 5)
    s = neel_state(8)
    sz0 = sum(occupations(s))
    for _ in range(4):
        s, _ = truncate(apply_mpo(s, mpo), chi_max=64)
        assert abs(sum(occupations(s)) - sz0) < 1e-8


def test_imaginary_time_energy_non_increasing():
    tau = 0.1
    mpo, _ = build(XXZ, -tau, 5)
    s = random_state(8, chi=4, seed=7)
    _, rec = evolve(s, mpo, 15, chi_max=256, svd_tol=1e-14, record_energy=True)
    assert max(rec.trunc_errors) < 1e-10
    assert np.all(np.diff(rec.energies) <= 1e-10)
    assert all(n == pytest.approx(1.0, abs=1e-10) for n in rec.norms[1:])
    # cross-check the final energy against dense imaginary-time evolution
    ev = DenseEvolver(XXZ, 8)
    psi = ev.evolve(mps_to_dense(s), -tau * 15).normalized().amplitudes
    e_ref = np.vdot(psi, ev.hamiltonian @ psi).real
    assert rec.energies[-1] == pytest.approx(e_ref, abs=1e-3)


def test_energy_of_neel():
    # each bond contributes Delta * (-1/4)
    assert energy(neel_state(6), XXZ.term) == pytest.approx(5 * 0.5 * -0.25)
