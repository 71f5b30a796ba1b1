"""Dense reference computations used to validate the tensor-network code."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .models import TwoSiteHamiltonian, cluster_hamiltonian, embed_one_site, SZ
from .mps import FiniteMps, to_dense
from .tensor import frobenius

MAX_ORACLE_SITES = 14


@dataclass
class DenseState:
    n_sites: int
    amplitudes: np.ndarray
    d: int = 2

    def __post_init__(self):
        self.amplitudes = np.asarray(self.amplitudes, dtype=complex).ravel()
        if self.amplitudes.size != self.d ** self.n_sites:
            raise ValueError(f"expected {self.d ** self.n_sites} amplitudes, got {self.amplitudes.size}")

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def normalized(self) -> "DenseState":
        return DenseState(self.n_sites, self.amplitudes / self.norm(), self.d)


def _check_size(n: int) -> None:
    if n > MAX_ORACLE_SITES:
        raise ValueError(f"dense oracle is capped at {MAX_ORACLE_SITES} sites, got {n}")


class DenseEvolver:
    """Exact propagator ``exp(t H_n)`` on an open chain, diagonalized once.

    The Hamiltonian is split into blocks of basis states that it never
    connects (for spin-1/2 models conserving total ``Sz`` these are the
    magnetization sectors); each block is diagonalized separately.
    """

    def __init__(self, h: TwoSiteHamiltonian, n_sites: int):
        _check_size(n_sites)
        self.h = h
        self.n_sites = n_sites
        self.hamiltonian = cluster_hamiltonian(h, n_sites)
        self.blocks = []
        for idx in _sectors(self.hamiltonian, h.d, n_sites):
            sub = self.hamiltonian[np.ix_(idx, idx)]
            if np.all(sub.imag == 0):
                sub = sub.real
            evals, evecs = np.linalg.eigh(sub)
            self.blocks.append((idx, evals, evecs))

    def evolve(self, state: DenseState, t: complex) -> DenseState:
        psi = state.amplitudes
        out = np.zeros_like(psi)
        for idx, evals, evecs in self.blocks:
            coeffs = evecs.conj().T @ psi[idx]
            out[idx] = evecs @ (np.exp(complex(t) * evals) * coeffs)
        return DenseState(state.n_sites, out, state.d)

    def energy(self, state: DenseState) -> float:
        psi = state.amplitudes
        return float(np.vdot(psi, self.hamiltonian @ psi).real / np.vdot(psi, psi).real)


def _sectors(ham: np.ndarray, d: int, n: int) -> list[np.ndarray]:
    """Index sets of total-``Sz`` sectors if ``ham`` respects them, else one set."""
    dim = ham.shape[0]
    everything = [np.arange(dim)]
    if d != 2:
        return everything
    ups = np.array([bin(k).count("1") for k in range(dim)])
    if np.any(np.abs(ham[ups[:, None] != ups[None, :]]) > 0):
        return everything
    return [np.flatnonzero(ups == m) for m in range(n + 1)]


def dense_evolve(state: DenseState, h: TwoSiteHamiltonian, t: complex) -> DenseState:
    """Apply ``exp(t * sum_i h_{i,i+1})`` to a dense state."""
    _check_size(state.n_sites)
    if state.n_sites == 1:
        return DenseState(1, state.amplitudes.copy(), state.d)
    return DenseEvolver(h, state.n_sites).evolve(state, t)


def operator_distance(a, b) -> float:
    """``||a - b||_F / max(||a||_F, ||b||_F)``; two zero operators are at distance 0."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch {a.shape} vs {b.shape}")
    scale = max(frobenius(a), frobenius(b))
    if scale == 0.0:
        return 0.0
    return frobenius(a - b) / scale


def mps_to_dense(state: FiniteMps) -> DenseState:
    _check_size(state.n_sites)
    return DenseState(state.n_sites, to_dense(state), state.phys_dim)


def basis_state(bits, d: int = 2) -> DenseState:
    """Product basis state; ``bits[i]`` is the local level of site ``i``."""
    idx = 0
    for b in bits:
        idx = idx * d + int(b)
    amps = np.zeros(d ** len(bits), dtype=complex)
    amps[idx] = 1.0
    return DenseState(len(bits), amps, d)


def neel_dense(n_sites: int) -> DenseState:
    return basis_state([i % 2 for i in range(n_sites)])


def occupations(state: DenseState) -> np.ndarray:
    """``1/2 + <Sz_i>`` on every site (spin-1/2 only)."""
    probs = np.abs(state.amplitudes) ** 2
    probs = probs / probs.sum()
    n = state.n_sites
    bits = (np.arange(2 ** n)[:, None] >> np.arange(n - 1, -1, -1)[None, :]) & 1
    # basis level 0 is spin up
    return 1.0 - probs @ bits


def expectation(state: DenseState, op) -> complex:
    psi = state.amplitudes
    return complex(np.vdot(psi, op @ psi) / np.vdot(psi, psi))


def sz_expectation(state: DenseState, site: int) -> float:
    return expectation(state, embed_one_site(SZ, state.n_sites, site)).real


def entanglement_entropy(state: DenseState, cut: int) -> float:
    psi = state.amplitudes.reshape(state.d ** cut, -1)
    s = np.linalg.svd(psi, compute_uv=False)
    p = s ** 2 / np.sum(s ** 2)
    p = p[p > 1e-300]
    return float(-np.sum(p * np.log(p))) + 0.0
