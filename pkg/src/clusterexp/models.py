"""Nearest-neighbour spin Hamiltonians.

Operators on ``n`` sites are stored as ``d**n x d**n`` matrices with the
row index running over (site1_out, ..., siteN_out) and the column index over
(site1_in, ..., siteN_in), i.e. the ordinary Kronecker-product convention.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .tensor import as_tensor, frobenius

MAX_CLUSTER_SITES = 12

# spin-1/2 operators, S = sigma / 2
SX = 0.5 * np.array([[0, 1], [1, 0]], dtype=complex)
SY = 0.5 * np.array([[0, -1j], [1j, 0]], dtype=complex)
SZ = 0.5 * np.array([[1, 0], [0, -1]], dtype=complex)
ID2 = np.eye(2, dtype=complex)


@dataclass(frozen=True)
class TwoSiteHamiltonian:
    """Local term ``h`` acting on an ordered pair of neighbouring sites."""

    phys_dim: int
    term: np.ndarray

    def __post_init__(self):
        d = int(self.phys_dim)
        if d < 2:
            raise ValueError(f"physical dimension must be >= 2, got {d}")
        term = as_tensor(self.term)
        if term.shape != (d * d, d * d):
            raise ValueError(f"term must be {d*d}x{d*d}, got {term.shape}")
        if frobenius(term - term.conj().T) > 1e-12 * max(frobenius(term), 1e-300):
            raise ValueError("two-site term is not Hermitian")
        object.__setattr__(self, "phys_dim", d)
        object.__setattr__(self, "term", term)

    @property
    def d(self) -> int:
        return self.phys_dim

    def swapped(self) -> np.ndarray:
        """The term with its two sites exchanged."""
        d = self.phys_dim
        return as_tensor(self.term.reshape(d, d, d, d).transpose(1, 0, 3, 2).reshape(d * d, d * d))

    def is_reflection_symmetric(self, tol: float = 1e-12) -> bool:
        return frobenius(self.swapped() - self.term) <= tol * max(frobenius(self.term), 1e-300)


def xxz_term(delta: float) -> TwoSiteHamiltonian:
    """``Sx Sx + Sy Sy + delta Sz Sz`` for spin-1/2."""
    term = np.kron(SX, SX) + np.kron(SY, SY) + delta * np.kron(SZ, SZ)
    return TwoSiteHamiltonian(2, term)


def heisenberg_rotated_term() -> TwoSiteHamiltonian:
    """Heisenberg coupling after a sublattice rotation: ``-SxSx + SySy - SzSz``."""
    term = -np.kron(SX, SX) + np.kron(SY, SY) - np.kron(SZ, SZ)
    return TwoSiteHamiltonian(2, term)


def total_sz(n: int) -> np.ndarray:
    """Sum of ``Sz`` over ``n`` spin-1/2 sites."""
    return sum(embed_one_site(SZ, n, i) for i in range(n))


def embed_one_site(op, n: int, i: int) -> np.ndarray:
    op = as_tensor(op)
    d = op.shape[0]
    return np.kron(np.kron(np.eye(d ** i), op), np.eye(d ** (n - i - 1)))


def embed_two_site(term, d: int, n: int, i: int, j: int) -> np.ndarray:
    """Embed a two-site operator acting on sites ``(i, j)`` of an ``n``-site system.

    ``i`` and ``j`` need not be adjacent or ordered; the first tensor factor
    of ``term`` acts on site ``i``.
    """
    if i == j or not (0 <= i < n and 0 <= j < n):
        raise ValueError(f"invalid site pair ({i}, {j}) for {n} sites")
    rest = d ** (n - 2)
    full = np.kron(as_tensor(term), np.eye(rest)).reshape((d,) * (2 * n))
    # current leg order: (i, j, others...) for out and in; move them into place
    others = [k for k in range(n) if k not in (i, j)]
    order = [i, j] + others
    perm = np.argsort(order)
    axes = list(perm) + [n + p for p in perm]
    return as_tensor(full.transpose(axes).reshape(d ** n, d ** n))


def bond_hamiltonian(h: TwoSiteHamiltonian, n: int, bonds) -> np.ndarray:
    """Sum of ``h`` embedded on each ordered site pair in ``bonds``."""
    out = np.zeros((h.d ** n, h.d ** n), dtype=complex)
    for i, j in bonds:
        out += embed_two_site(h.term, h.d, n, i, j)
    return out


def cluster_hamiltonian(h: TwoSiteHamiltonian, n: int) -> np.ndarray:
    """``sum_i h_{i,i+1}`` on an open chain of ``n`` sites as a dense matrix."""
    if not (2 <= n <= MAX_CLUSTER_SITES):
        raise ValueError(f"cluster size must lie in [2, {MAX_CLUSTER_SITES}], got {n}")
    d = h.d
    out = np.zeros((d ** n, d ** n), dtype=complex)
    for i in range(n - 1):
        out += np.kron(np.kron(np.eye(d ** i), h.term), np.eye(d ** (n - i - 2)))
    return out


def reflect_operator(op, d: int, n: int) -> np.ndarray:
    """Relabel sites ``1..n`` as ``n..1``."""
    rev = list(range(n))[::-1]
    axes = rev + [n + k for k in rev]
    return as_tensor(as_tensor(op).reshape((d,) * (2 * n)).transpose(axes).reshape(d ** n, d ** n))


def read_custom_term(path) -> TwoSiteHamiltonian:
    """Read a two-site term from text: first ``d``, then ``d**4`` ``re im`` pairs, row-major."""
    tokens = Path(path).read_text().split()
    if not tokens:
        raise ValueError(f"{path}: empty model file")
    d = int(tokens[0])
    values = np.array([float(x) for x in tokens[1:]])
    if values.size != 2 * d ** 4:
        raise ValueError(f"{path}: expected {2 * d**4} numbers after d={d}, got {values.size}")
    term = (values[0::2] + 1j * values[1::2]).reshape(d * d, d * d)
    return TwoSiteHamiltonian(d, term)


def write_custom_term(h: TwoSiteHamiltonian, path) -> None:
    lines = [str(h.d)]
    for z in h.term.ravel():
        lines.append(f"{float(z.real)!r} {float(z.imag)!r}")
    Path(path).write_text("\n".join(lines) + "\n")
