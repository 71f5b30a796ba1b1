"""Finite open-boundary MPS: MPO application, SVD truncation and observables.

Site tensors have legs ``(left_bond, phys, right_bond)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .models import SZ
from .mpo import ClusterMpo


@dataclass
class FiniteMps:
    """Open-boundary matrix-product state.

    ``ortho_center`` is the site with all tensors to its left
    left-isometric and all tensors to its right right-isometric, or
    ``None`` when no canonical form is known.
    """

    site_tensors: list
    ortho_center: int | None = None
    chi_max: int | None = None

    def __post_init__(self):
        self.site_tensors = [np.ascontiguousarray(a, dtype=complex) for a in self.site_tensors]
        if not self.site_tensors:
            raise ValueError("an MPS needs at least one site")
        if self.site_tensors[0].shape[0] != 1 or self.site_tensors[-1].shape[2] != 1:
            raise ValueError("boundary bonds must have dimension 1")
        for a, b in zip(self.site_tensors, self.site_tensors[1:]):
            if a.shape[2] != b.shape[0]:
                raise ValueError(f"bond mismatch {a.shape} -> {b.shape}")

    @property
    def n_sites(self) -> int:
        return len(self.site_tensors)

    @property
    def phys_dim(self) -> int:
        return self.site_tensors[0].shape[1]

    def bond_dims(self) -> list[int]:
        return [a.shape[2] for a in self.site_tensors[:-1]]

    def copy(self) -> "FiniteMps":
        return FiniteMps([a.copy() for a in self.site_tensors], self.ortho_center, self.chi_max)


def product_state(local_vectors) -> FiniteMps:
    tensors = [np.asarray(v, dtype=complex).reshape(1, -1, 1) for v in local_vectors]
    tensors = [a / np.linalg.norm(a) for a in tensors]
    return FiniteMps(tensors, ortho_center=0)


def neel_state(n_sites: int) -> FiniteMps:
    """``|up down up down ...>`` as a bond-dimension-1 MPS."""
    if n_sites < 2 or n_sites % 2:
        raise ValueError(f"Neel state needs an even number of sites >= 2, got {n_sites}")
    up, down = np.array([1.0, 0.0]), np.array([0.0, 1.0])
    return product_state([up if i % 2 == 0 else down for i in range(n_sites)])


def random_state(n_sites: int, d: int = 2, chi: int = 4, seed: int | None = None) -> FiniteMps:
    rng = np.random.default_rng(seed)
    dims = [1] + [min(chi, d ** min(i, n_sites - i)) for i in range(1, n_sites)] + [1]
    tensors = [
        rng.normal(size=(dims[i], d, dims[i + 1])) + 1j * rng.normal(size=(dims[i], d, dims[i + 1]))
        for i in range(n_sites)
    ]
    state = FiniteMps(tensors)
    canonicalize(state, 0)
    state.site_tensors[0] /= np.linalg.norm(state.site_tensors[0])
    return state


def from_dense(amplitudes, n_sites: int, d: int = 2) -> FiniteMps:
    """Exact MPS of a state vector by successive SVDs (no truncation beyond zeros)."""
    psi = np.asarray(amplitudes, dtype=complex).reshape(1, -1)
    tensors = []
    for i in range(n_sites - 1):
        chi = psi.shape[0]
        psi = psi.reshape(chi * d, -1)
        u, s, vh = np.linalg.svd(psi, full_matrices=False)
        keep = max(1, int(np.count_nonzero(s > 1e-15 * s[0]))) if s[0] > 0 else 1
        tensors.append(u[:, :keep].reshape(chi, d, keep))
        psi = s[:keep, None] * vh[:keep]
    tensors.append(psi.reshape(psi.shape[0], d, 1))
    return FiniteMps(tensors, ortho_center=n_sites - 1)


def to_dense(state: FiniteMps) -> np.ndarray:
    acc = np.ones((1, 1), dtype=complex)
    for a in state.site_tensors:
        acc = np.tensordot(acc, a, axes=([1], [0])).reshape(-1, a.shape[2])
    return acc[:, 0]


def overlap(bra: FiniteMps, ket: FiniteMps) -> complex:
    """``<bra|ket>`` by a left-to-right transfer-matrix sweep."""
    env = np.ones((1, 1), dtype=complex)
    for a, b in zip(bra.site_tensors, ket.site_tensors):
        env = np.einsum("ab,asc,bsd->cd", env, a.conj(), b, optimize=True)
    return complex(env[0, 0])


def norm(state: FiniteMps) -> float:
    return float(np.sqrt(abs(overlap(state, state))))


def canonicalize(state: FiniteMps, center: int) -> FiniteMps:
    """Bring ``state`` into mixed canonical form around ``center`` (in place)."""
    ts = state.site_tensors
    n = len(ts)
    for i in range(center):
        chi_l, d, chi_r = ts[i].shape
        q, r = np.linalg.qr(ts[i].reshape(chi_l * d, chi_r))
        ts[i] = q.reshape(chi_l, d, q.shape[1])
        ts[i + 1] = np.tensordot(r, ts[i + 1], axes=([1], [0]))
    for i in range(n - 1, center, -1):
        chi_l, d, chi_r = ts[i].shape
        q, r = np.linalg.qr(ts[i].reshape(chi_l, d * chi_r).T)
        ts[i] = q.T.reshape(q.shape[1], d, chi_r)
        ts[i - 1] = np.tensordot(ts[i - 1], r.T, axes=([2], [0]))
    state.ortho_center = center
    return state


def apply_mpo(state: FiniteMps, mpo: ClusterMpo) -> FiniteMps:
    """Exact MPO-MPS product; the MPO's outer virtual legs are closed on level 0.

    The bond dimension of the result is the product of the MPS and MPO bonds.
    """
    if mpo.d != state.phys_dim:
        raise ValueError(f"physical dimension mismatch: MPO {mpo.d}, MPS {state.phys_dim}")
    w = mpo.tensor
    D = w.shape[0]
    n = state.n_sites
    out = []
    for i, a in enumerate(state.site_tensors):
        # (D, s, s', D) x (l, s', r) -> (D, l, s, D, r) -> (D*l, s, D*r)
        b = np.einsum("xsty,ltr->xlsyr", w, a, optimize=True)
        chi_l, chi_r = a.shape[0], a.shape[2]
        b = b.reshape(D * chi_l, w.shape[1], D * chi_r)
        if i == 0:
            b = b[:chi_l]
        if i == n - 1:
            b = b[:, :, :chi_r]
        out.append(np.ascontiguousarray(b))
    return FiniteMps(out, None, state.chi_max)


def truncate(state: FiniteMps, chi_max: int | None = None, svd_tol: float = 1e-12) -> tuple[FiniteMps, float]:
    """Right-canonicalize, then sweep left to right truncating each bond by SVD.

    Schmidt values at each bond are those of the normalized state. Values
    below ``svd_tol`` times the largest one are dropped, then at most
    ``chi_max`` are kept.

    Returns:
        The normalized truncated state (ortho center on the last site) and the
        root-sum-square of all discarded Schmidt values.
    """
    out = state.copy()
    canonicalize(out, 0)
    ts = out.site_tensors
    nrm = np.linalg.norm(ts[0])
    if nrm == 0:
        raise ValueError("cannot truncate a zero state")
    ts[0] = ts[0] / nrm
    discarded = 0.0
    for i in range(len(ts) - 1):
        chi_l, d, chi_r = ts[i].shape
        u, s, vh = np.linalg.svd(ts[i].reshape(chi_l * d, chi_r), full_matrices=False)
        keep = int(np.count_nonzero(s > svd_tol * s[0]))
        if chi_max is not None:
            keep = min(keep, int(chi_max))
        keep = max(keep, 1)
        discarded += float(np.sum(s[keep:] ** 2))
        s_kept = s[:keep] / np.linalg.norm(s[:keep])
        ts[i] = u[:, :keep].reshape(chi_l, d, keep)
        ts[i + 1] = np.tensordot(s_kept[:, None] * vh[:keep], ts[i + 1], axes=([1], [0]))
    out.ortho_center = len(ts) - 1
    if chi_max is not None:
        out.chi_max = int(chi_max)
    return out, float(np.sqrt(discarded))


def schmidt_values(state: FiniteMps, cut: int) -> np.ndarray:
    """Normalized Schmidt values across the bond between sites ``cut-1`` and ``cut``."""
    if not (1 <= cut < state.n_sites):
        raise ValueError(f"cut must lie in [1, {state.n_sites - 1}], got {cut}")
    work = canonicalize(state.copy(), cut)
    a = work.site_tensors[cut]
    s = np.linalg.svd(a.reshape(a.shape[0], -1), compute_uv=False)
    return s / np.linalg.norm(s)


def entanglement_entropy(state: FiniteMps, cut: int) -> float:
    """Von Neumann entropy (natural log) of the bipartition after ``cut`` sites."""
    p = schmidt_values(state, cut) ** 2
    p = p[p > 1e-300]
    return float(-np.sum(p * np.log(p))) + 0.0


def local_expectation(state: FiniteMps, op, site: int) -> complex:
    """``<op_site>`` for the normalized state."""
    if not (0 <= site < state.n_sites):
        raise ValueError(f"site {site} out of range")
    work = canonicalize(state.copy(), site)
    a = work.site_tensors[site]
    num = np.einsum("lsr,st,ltr->", a.conj(), np.asarray(op), a)
    return complex(num / np.vdot(a, a))


def local_expectations(state: FiniteMps, op) -> np.ndarray:
    """``<op_i>`` on every site from one left-to-right canonical sweep."""
    work = canonicalize(state.copy(), 0)
    ts = work.site_tensors
    op = np.asarray(op)
    out = np.empty(len(ts), dtype=complex)
    for i in range(len(ts)):
        a = ts[i]
        out[i] = np.einsum("lsr,st,ltr->", a.conj(), op, a) / np.vdot(a, a)
        if i + 1 < len(ts):
            chi_l, d, chi_r = a.shape
            q, r = np.linalg.qr(a.reshape(chi_l * d, chi_r))
            ts[i] = q.reshape(chi_l, d, q.shape[1])
            ts[i + 1] = np.tensordot(r, ts[i + 1], axes=([1], [0]))
    return out


def occupations(state: FiniteMps) -> np.ndarray:
    """``1/2 + <Sz_i>`` on every site."""
    return 0.5 + local_expectations(state, SZ).real


def site_occupation(state: FiniteMps, site: int) -> float:
    """``1/2 + <Sz_site>``."""
    return 0.5 + local_expectation(state, SZ, site).real


def bond_expectation(state: FiniteMps, term, site: int) -> complex:
    """``<term>`` on sites ``(site, site+1)``; ``term`` is ``d*d x d*d``."""
    if not (0 <= site < state.n_sites - 1):
        raise ValueError(f"bond {site} out of range")
    work = canonicalize(state.copy(), site)
    a, b = work.site_tensors[site], work.site_tensors[site + 1]
    d = a.shape[1]
    ab = np.tensordot(a, b, axes=([2], [0]))  # (l, s1, s2, r)
    op = np.asarray(term).reshape(d, d, d, d)
    num = np.einsum("lstr,stuv,luvr->", ab.conj(), op, ab, optimize=True)
    return complex(num / np.vdot(ab, ab))


def energy(state: FiniteMps, term) -> float:
    return float(sum(bond_expectation(state, term, i).real for i in range(state.n_sites - 1)))


@dataclass
class EvolutionRecord:
    """Per-step observables of an MPS time evolution; row 0 is the initial state."""

    steps: list = field(default_factory=list)
    times: list = field(default_factory=list)
    occupations: list = field(default_factory=list)
    entropies: list = field(default_factory=list)
    norms: list = field(default_factory=list)
    trunc_errors: list = field(default_factory=list)
    energies: list = field(default_factory=list)


def evolve(
    state: FiniteMps,
    mpo: ClusterMpo,
    n_steps: int,
    chi_max: int | None = None,
    svd_tol: float = 1e-12,
    every: int = 1,
    truncate_every: int = 1,
    cut: int | None = None,
    record_energy: bool = False,
) -> tuple[FiniteMps, EvolutionRecord]:
    """Repeatedly apply ``mpo`` and truncate, recording observables.

    Real-time runs (``mpo.t`` imaginary) keep the norm drift as a diagnostic;
    imaginary-time runs (``mpo.t`` real) are renormalized after every step.
    Observables are recorded for the initial state and then every ``every``
    steps.
    """
    if n_steps < 0:
        raise ValueError("n_steps must be non-negative")
    real_time = abs(complex(mpo.t).real) <= 1e-15 * max(abs(mpo.t), 1.0)
    dt = abs(complex(mpo.t))
    cut = state.n_sites // 2 if cut is None else cut
    record = EvolutionRecord()
    current = state.copy()
    base = 1.0
    err = 0.0

    def snapshot(step):
        record.steps.append(step)
        record.times.append(step * dt)
        record.occupations.append(list(occupations(current)))
        record.entropies.append(entanglement_entropy(current, cut) if current.n_sites > 1 else 0.0)
        record.norms.append(base * norm(current))
        record.trunc_errors.append(err)
        if record_energy:
            record.energies.append(energy(current, mpo.h.term))

    if n_steps == 0:
        return current, record
    snapshot(0)
    for step in range(1, n_steps + 1):
        current = apply_mpo(current, mpo)
        err = 0.0
        if step % truncate_every == 0 or step == n_steps:
            growth = norm(current)
            current, err = truncate(current, chi_max, svd_tol)
            if real_time:
                base *= growth
        elif not real_time:
            current.site_tensors[0] = current.site_tensors[0] / norm(current)
        if step % every == 0 or step == n_steps:
            snapshot(step)
    return current, record
