"""Cluster-expansion MPO for ``exp(t * sum_i h_{i,i+1})``.

The uniform MPO tensor has legs ``(left, phys_out, phys_in, right)``. Both
virtual legs are split into levels ``0, 1, 2, ...``: level 0 is
one-dimensional and carries the identity, level ``k`` is created when the
``2k``-site cluster is encoded. Blocks ``(k-1, k)`` and ``(k, k-1)`` hold the
SVD split of the even cluster residual, block ``(k, k)`` holds the odd
``(2k+1)``-site residual after stripping the arms with pseudo-inverses.

Open chains are closed on the level-0 vector at both ends, so contracting
``n`` copies of the tensor sums every way of tiling the chain with disjoint
encoded clusters.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from .models import MAX_CLUSTER_SITES, TwoSiteHamiltonian, cluster_hamiltonian
from .tensor import (
    DEFAULT_REL_TOL,
    SvdFactors,
    apply_pseudo_inverse,
    frobenius,
    matrix_exponential,
    svd_truncated,
)

log = logging.getLogger(__name__)

MAX_BUILD_P = 9
LEAKAGE_FAIL = 1e-8
LEAKAGE_WARN = 1e-10
NOISE_FLOOR = 1e-13


class LeakageError(RuntimeError):
    """A cluster residual could not be encoded without a larger bond."""


class NoiseFloorError(ValueError):
    """Every error in a sweep sits below the numerical noise floor."""

    def __init__(self, max_error: float):
        super().__init__(f"all errors below noise floor (max error {max_error:.3e})")
        self.max_error = max_error


class LeakageWarning(RuntimeWarning):
    pass


@dataclass(frozen=True)
class GradedIndex:
    """Virtual leg split into levels; ``level_dims[0]`` is always 1."""

    level_dims: tuple[int, ...] = (1,)

    def __post_init__(self):
        dims = tuple(int(x) for x in self.level_dims)
        if not dims or dims[0] != 1:
            raise ValueError(f"level 0 must have dimension 1, got {dims}")
        if any(x < 0 for x in dims):
            raise ValueError(f"negative level dimension in {dims}")
        object.__setattr__(self, "level_dims", dims)

    @property
    def total(self) -> int:
        return sum(self.level_dims)

    @property
    def n_levels(self) -> int:
        return len(self.level_dims)

    def offset(self, level: int) -> int:
        return sum(self.level_dims[:level])

    def slice(self, level: int) -> slice:
        start = self.offset(level)
        return slice(start, start + self.level_dims[level])

    def level_of(self, index: int) -> int:
        for lvl in range(self.n_levels):
            if index < self.offset(lvl) + self.level_dims[lvl]:
                return lvl
        raise IndexError(index)

    def extended(self, dim: int) -> "GradedIndex":
        return GradedIndex(self.level_dims + (int(dim),))


@dataclass
class BuildReport:
    """Diagnostics collected while building a cluster operator.

    ``residual_before[n]`` and ``residual_after[n]`` are Frobenius norms of
    the ``n``-site residual relative to the exact exponential; ``leakage[n]``
    is the relative error left after encoding cluster ``n``.
    """

    level_dims: tuple[int, ...] = (1,)
    residual_before: dict = field(default_factory=dict)
    residual_after: dict = field(default_factory=dict)
    leakage: dict = field(default_factory=dict)
    ranks: dict = field(default_factory=dict)

    def lines(self) -> list[str]:
        out = [
            "level dims: " + ",".join(str(x) for x in self.level_dims)
            + f" (total {sum(self.level_dims)})"
        ]
        for key in self.residual_before:
            out.append(
                f"cluster {key}: residual {self.residual_before[key]:.3e} -> "
                f"{self.residual_after[key]:.3e}, leakage {self.leakage[key]:.3e}"
            )
        return out


@dataclass
class ClusterMpo:
    """Uniform cluster-expansion MPO tensor plus build metadata.

    Attributes:
        tensor: array of shape ``(D, d, d, D)``.
        virtual: level structure shared by both virtual legs.
        t: complex time step (``-1j*dt`` for real time, ``-tau`` for imaginary time).
        p: largest encoded cluster size.
        h: the two-site term.
        svd_cache: per level ``k``, the factors of the arm elements
            ``(k-1, k)`` and ``(k, k-1)`` as matrices, keyed ``(k, "left")``
            and ``(k, "right")``.
    """

    tensor: np.ndarray
    virtual: GradedIndex
    t: complex
    p: int
    h: TwoSiteHamiltonian
    svd_cache: dict = field(default_factory=dict)

    @property
    def d(self) -> int:
        return self.h.d

    @property
    def bond_dim(self) -> int:
        return self.virtual.total

    def block(self, left: int, right: int) -> np.ndarray:
        return self.tensor[self.virtual.slice(left), :, :, self.virtual.slice(right)]


def identity_mpo(h: TwoSiteHamiltonian, t: complex) -> ClusterMpo:
    d = h.d
    tensor = np.eye(d, dtype=complex).reshape(1, d, d, 1)
    return ClusterMpo(tensor, GradedIndex((1,)), complex(t), 1, h, {})


def _check_chain_length(n: int) -> None:
    if not (1 <= n <= MAX_CLUSTER_SITES):
        raise ValueError(f"chain length must lie in [1, {MAX_CLUSTER_SITES}], got {n}")


def interleave(op, d: int, n: int) -> np.ndarray:
    """Reorder a ``d**n x d**n`` operator into site-major legs ``(d*d,)*n``."""
    axes = [k for s in range(n) for k in (s, n + s)]
    return np.ascontiguousarray(np.asarray(op).reshape((d,) * (2 * n)).transpose(axes).reshape((d * d,) * n))


def deinterleave(t, d: int, n: int) -> np.ndarray:
    """Inverse of :func:`interleave`."""
    axes = [2 * s for s in range(n)] + [2 * s + 1 for s in range(n)]
    return np.ascontiguousarray(np.asarray(t).reshape((d,) * (2 * n)).transpose(axes).reshape(d ** n, d ** n))


def contract_open_chain(mpo: ClusterMpo, n: int) -> np.ndarray:
    """Contract ``n`` MPO tensors with both ends closed on level 0."""
    _check_chain_length(n)
    d = mpo.d
    w = mpo.tensor
    D = w.shape[0]
    # grow the two halves separately so the virtual leg never multiplies the full operator
    n_left = (n + 1) // 2
    left = w[0].reshape(d * d, D)
    for _ in range(n_left - 1):
        left = np.tensordot(left, w, axes=([1], [0])).reshape(-1, D)
    right = w[..., 0].reshape(D, d * d) if n > n_left else np.eye(D, dtype=complex)[:, :1]
    for _ in range(n - n_left - 1):
        right = np.tensordot(w, right, axes=([3], [0])).reshape(D, -1)
    return deinterleave(left @ right, d, n)


def exact_cluster_exponential(h: TwoSiteHamiltonian, n: int, t: complex) -> np.ndarray:
    if n == 1:
        return np.eye(h.d, dtype=complex)
    return matrix_exponential(cluster_hamiltonian(h, n), t)


def encoded_residual(mpo: ClusterMpo, n: int) -> np.ndarray:
    """``exp(t H_n)`` minus the current open-chain contraction on ``n`` sites."""
    return exact_cluster_exponential(mpo.h, n, mpo.t) - contract_open_chain(mpo, n)


def _relative(x: float, ref: float) -> float:
    return x / ref if ref > 0 else x


def _strip_arms(mpo: ClusterMpo, residual: np.ndarray, n: int, depth: int) -> np.ndarray:
    """Peel ``depth`` sites off each end of an ``n``-site residual.

    Returns an array of shape ``(D_depth, d*d, ..., d*d, D_depth)`` with
    ``n - 2*depth`` physical legs in the middle.
    """
    d = mpo.d
    core = interleave(residual, d, n).reshape((1,) + (d * d,) * n + (1,))
    for k in range(1, depth + 1):
        left = mpo.svd_cache[(k, "left")]
        right = mpo.svd_cache[(k, "right")]
        mid = core.shape[2:-2]
        # fold (level, site) on the left and (site, level) on the right
        core = core.reshape((core.shape[0] * d * d,) + mid + (d * d * core.shape[-1],))
        core = apply_pseudo_inverse(left, "left", core)
        core = apply_pseudo_inverse(right, "right", core)
    return core


def _rank_dims(mpo: ClusterMpo, k: int) -> int:
    return mpo.virtual.level_dims[k] if k < mpo.virtual.n_levels else 0


def split_even_cluster(
    mpo: ClusterMpo,
    n: int,
    rel_tol: float = DEFAULT_REL_TOL,
    report: BuildReport | None = None,
) -> ClusterMpo:
    """Encode the ``n``-site residual (``n`` even) on a new virtual level ``n/2``."""
    if n < 2 or n % 2:
        raise ValueError(f"split_even_cluster needs an even n >= 2, got {n}")
    k = n // 2
    if mpo.virtual.n_levels != k:
        raise ValueError(f"encoding cluster {n} needs levels 0..{k-1} present, have {mpo.virtual.level_dims}")
    d = mpo.d
    exact = exact_cluster_exponential(mpo.h, n, mpo.t)
    residual = exact - contract_open_chain(mpo, n)
    ref = frobenius(exact)
    prev = mpo.virtual.level_dims[k - 1]
    core = _strip_arms(mpo, residual, n, k - 1)
    if _relative(frobenius(residual), ref) < NOISE_FLOOR:
        # already implied by smaller clusters; keep rounding noise off the new level
        core = np.zeros_like(core)
    factors = svd_truncated(core.reshape(prev * d * d, d * d * prev), rel_tol)
    r = factors.rank
    sq = np.sqrt(factors.singular_values)
    left_el = factors.left * sq[None, :]
    right_el = sq[:, None] * factors.right

    virtual = mpo.virtual.extended(r)
    D_old, D_new = mpo.virtual.total, virtual.total
    tensor = np.zeros((D_new, d, d, D_new), dtype=complex)
    tensor[:D_old, :, :, :D_old] = mpo.tensor
    tensor[virtual.slice(k - 1), :, :, virtual.slice(k)] = left_el.reshape(prev, d, d, r)
    tensor[virtual.slice(k), :, :, virtual.slice(k - 1)] = right_el.reshape(r, d, d, prev)

    cache = dict(mpo.svd_cache)
    cache[(k, "left")] = SvdFactors(factors.left, sq, np.eye(r, dtype=complex))
    cache[(k, "right")] = SvdFactors(np.eye(r, dtype=complex), sq, factors.right)
    out = ClusterMpo(tensor, virtual, mpo.t, max(mpo.p, n), mpo.h, cache)
    _record(out, n, residual, exact, ref, report, rank=r)
    return out


def solve_odd_cluster(mpo: ClusterMpo, n: int, report: BuildReport | None = None) -> ClusterMpo:
    """Encode the ``n``-site residual (``n`` odd) into block ``((n-1)/2, (n-1)/2)``."""
    if n < 3 or n % 2 == 0:
        raise ValueError(f"solve_odd_cluster needs an odd n >= 3, got {n}")
    k = (n - 1) // 2
    if mpo.virtual.n_levels != k + 1:
        raise ValueError(f"encoding cluster {n} needs levels 0..{k} present, have {mpo.virtual.level_dims}")
    d = mpo.d
    exact = exact_cluster_exponential(mpo.h, n, mpo.t)
    residual = exact - contract_open_chain(mpo, n)
    ref = frobenius(exact)
    dk = mpo.virtual.level_dims[k]
    tensor = mpo.tensor.copy()
    if dk and _relative(frobenius(residual), ref) >= NOISE_FLOOR:
        core = _strip_arms(mpo, residual, n, k)
        sl = mpo.virtual.slice(k)
        tensor[sl, :, :, sl] += core.reshape(dk, d, d, dk)
    out = replace(mpo, tensor=tensor, p=max(mpo.p, n))
    _record(out, n, residual, exact, ref, report)
    return out


def _record(mpo, n, residual, exact, ref, report, rank=None):
    after = frobenius(exact - contract_open_chain(mpo, n))
    leak = _relative(after, ref)
    if report is not None:
        report.residual_before[n] = _relative(frobenius(residual), ref)
        report.residual_after[n] = leak
        report.leakage[n] = leak
        if rank is not None:
            report.ranks[n // 2] = rank
        report.level_dims = mpo.virtual.level_dims
    if leak > LEAKAGE_FAIL:
        raise LeakageError(f"cluster {n}: relative leakage {leak:.3e} exceeds {LEAKAGE_FAIL:g}")
    if leak > LEAKAGE_WARN:
        warnings.warn(f"cluster {n}: relative leakage {leak:.3e}", LeakageWarning, stacklevel=3)
    log.debug("cluster %d encoded, leakage %.3e", n, leak)


def build(
    h: TwoSiteHamiltonian,
    t: complex,
    p: int,
    rel_tol: float = DEFAULT_REL_TOL,
) -> tuple[ClusterMpo, BuildReport]:
    """Build the cluster-expansion MPO exact on every open chain of ``<= p`` sites.

    Args:
        h: nearest-neighbour term.
        t: complex prefactor of the Hamiltonian in the exponent.
        p: largest cluster size, ``2 <= p <= 9``.
        rel_tol: relative singular-value cutoff for the even-cluster splits.

    Returns:
        The MPO and a :class:`BuildReport`.
    """
    if not (2 <= p <= MAX_BUILD_P):
        raise ValueError(f"p must lie in [2, {MAX_BUILD_P}], got {p}")
    mpo = identity_mpo(h, t)
    report = BuildReport()
    for n in range(2, p + 1):
        if n % 2 == 0:
            mpo = split_even_cluster(mpo, n, rel_tol, report)
        else:
            mpo = solve_odd_cluster(mpo, n, report)
    report.level_dims = mpo.virtual.level_dims
    return mpo, report


def loglog_slope(steps, errors) -> float:
    """Least-squares slope of ``log(error)`` against ``log(step)``, ignoring noise-floor points."""
    steps = np.asarray(steps, dtype=float)
    errors = np.asarray(errors, dtype=float)
    mask = errors > NOISE_FLOOR
    if mask.sum() < 2:
        raise NoiseFloorError(float(errors.max()) if errors.size else 0.0)
    return float(np.polyfit(np.log(steps[mask]), np.log(errors[mask]), 1)[0])


def chain_errors(h: TwoSiteHamiltonian, p: int, n_sites: int, dt_list, rel_tol: float = DEFAULT_REL_TOL):
    """Absolute Frobenius error of the real-time MPO on ``n_sites`` for each ``dt``."""
    ham = cluster_hamiltonian(h, n_sites)
    evals, evecs = np.linalg.eigh(ham)
    errors = []
    for dt in dt_list:
        t = -1j * float(dt)
        mpo, _ = build(h, t, p, rel_tol)
        exact = (evecs * np.exp(t * evals)) @ evecs.conj().T
        errors.append(frobenius(contract_open_chain(mpo, n_sites) - exact))
    return np.array(errors)


def error_order_estimate(h: TwoSiteHamiltonian, p: int, n_sites: int, dt_list, rel_tol: float = DEFAULT_REL_TOL) -> float:
    """Fitted order of the open-chain error ``||MPO - exp(-i dt H)||_F`` in ``dt``.

    Raises:
        NoiseFloorError: if fewer than two errors exceed the noise floor.
    """
    if n_sites <= p or n_sites > 10:
        raise ValueError(f"need p < n_sites <= 10, got p={p}, n_sites={n_sites}")
    if len(dt_list) < 2:
        raise ValueError("need at least two time steps")
    return loglog_slope(dt_list, chain_errors(h, p, n_sites, dt_list, rel_tol))
