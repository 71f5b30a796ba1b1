"""Dense tensor primitives shared by every other module.

Tensors are plain ``numpy.ndarray`` objects of dtype ``complex128`` in C
(row-major) order. Matrix views are obtained by reshaping, never by lazy
strided views, so every helper here returns a freshly materialized array.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

DEFAULT_REL_TOL = 1e-12
HERMITIAN_TOL = 1e-10

__all__ = [
    "DEFAULT_REL_TOL",
    "SvdFactors",
    "as_tensor",
    "contract",
    "svd_truncated",
    "matrix_exponential",
    "apply_pseudo_inverse",
    "frobenius",
]


def as_tensor(a) -> np.ndarray:
    """Return ``a`` as a C-contiguous complex128 array (copying if needed)."""
    return np.ascontiguousarray(a, dtype=np.complex128)


def frobenius(a) -> float:
    return float(np.linalg.norm(np.ravel(a)))


def contract(a, b, pairs: Sequence[tuple[int, int]]) -> np.ndarray:
    """Contract legs of ``a`` with legs of ``b``.

    Args:
        a: first tensor.
        b: second tensor.
        pairs: list of ``(leg_of_a, leg_of_b)`` index pairs to sum over.

    Returns:
        Tensor whose legs are the unpaired legs of ``a`` followed by the
        unpaired legs of ``b``, each in their original order.

    Raises:
        ValueError: if a pair joins legs of different extent.
    """
    a = as_tensor(a)
    b = as_tensor(b)
    axes_a = [int(i) for i, _ in pairs]
    axes_b = [int(j) for _, j in pairs]
    for i, j in zip(axes_a, axes_b):
        if a.shape[i] != b.shape[j]:
            raise ValueError(
                f"extent mismatch: leg {i} of a has {a.shape[i]}, leg {j} of b has {b.shape[j]}"
            )
    return np.ascontiguousarray(np.tensordot(a, b, axes=(axes_a, axes_b)))


@dataclass(frozen=True)
class SvdFactors:
    """Truncated SVD ``A ~= U @ diag(S) @ V``.

    ``left`` is m x r, ``singular_values`` has length r (descending) and
    ``right`` is r x n.
    """

    left: np.ndarray
    singular_values: np.ndarray
    right: np.ndarray

    @property
    def rank(self) -> int:
        return int(self.singular_values.shape[0])

    @property
    def shape(self) -> tuple[int, int]:
        return (self.left.shape[0], self.right.shape[1])

    def reconstruct(self) -> np.ndarray:
        return (self.left * self.singular_values) @ self.right


def svd_truncated(a, rel_tol: float = DEFAULT_REL_TOL) -> SvdFactors:
    """SVD of a matrix keeping singular values ``s_k > rel_tol * s_1``.

    A zero matrix yields rank-0 factors with shapes (m, 0), (0,), (0, n).
    """
    a = as_tensor(a)
    if a.ndim != 2:
        raise ValueError(f"svd_truncated expects a matrix, got shape {a.shape}")
    if not (0.0 <= rel_tol < 1.0):
        raise ValueError(f"rel_tol must lie in [0, 1), got {rel_tol}")
    if not np.all(np.isfinite(a)):
        raise ValueError("svd_truncated: input has non-finite entries")
    m, n = a.shape
    if m == 0 or n == 0:
        return SvdFactors(np.zeros((m, 0), complex), np.zeros(0), np.zeros((0, n), complex))
    try:
        u, s, vh = np.linalg.svd(a, full_matrices=False)
    except np.linalg.LinAlgError:
        import scipy.linalg

        u, s, vh = scipy.linalg.svd(a, full_matrices=False, lapack_driver="gesvd")
    if s[0] == 0.0:
        keep = 0
    else:
        keep = int(np.count_nonzero(s > rel_tol * s[0]))
    return SvdFactors(
        np.ascontiguousarray(u[:, :keep]),
        np.ascontiguousarray(s[:keep]),
        np.ascontiguousarray(vh[:keep, :]),
    )


def matrix_exponential(a, scale: complex = 1.0) -> np.ndarray:
    """Compute ``exp(scale * a)`` for Hermitian ``a`` by eigendecomposition.

    Raises:
        ValueError: if ``a`` deviates from Hermiticity by more than
            ``1e-10 * ||a||_F``.
    """
    a = as_tensor(a)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"matrix_exponential expects a square matrix, got shape {a.shape}")
    norm = frobenius(a)
    if frobenius(a - a.conj().T) > HERMITIAN_TOL * max(norm, 1e-300):
        raise ValueError("matrix_exponential: input is not Hermitian")
    if scale == 0 or norm == 0:
        return np.eye(a.shape[0], dtype=complex)
    evals, evecs = np.linalg.eigh(0.5 * (a + a.conj().T))
    phases = np.exp(complex(scale) * evals)
    return np.ascontiguousarray((evecs * phases) @ evecs.conj().T)


def apply_pseudo_inverse(factors: SvdFactors, side: str, target) -> np.ndarray:
    """Apply the pseudo-inverse of ``A = U S V`` to ``target``.

    ``side="left"`` returns ``pinv(A) @ target`` (target has ``m`` rows);
    ``side="right"`` returns ``target @ pinv(A)`` (target has ``n`` columns).
    Only the retained singular values are inverted.
    """
    target = as_tensor(target)
    u, s, v = factors.left, factors.singular_values, factors.right
    if side == "left":
        if target.shape[0] != u.shape[0]:
            raise ValueError(f"extent mismatch: target has {target.shape[0]} rows, factor expects {u.shape[0]}")
        flat = target.reshape(target.shape[0], -1)
        out = v.conj().T @ ((u.conj().T @ flat) / s[:, None])
        return np.ascontiguousarray(out.reshape((v.shape[1],) + target.shape[1:]))
    if side == "right":
        if target.shape[-1] != v.shape[1]:
            raise ValueError(f"extent mismatch: target has {target.shape[-1]} columns, factor expects {v.shape[1]}")
        flat = target.reshape(-1, target.shape[-1])
        out = ((flat @ v.conj().T) / s[None, :]) @ u.conj().T
        return np.ascontiguousarray(out.reshape(target.shape[:-1] + (u.shape[0],)))
    raise ValueError(f"side must be 'left' or 'right', got {side!r}")
