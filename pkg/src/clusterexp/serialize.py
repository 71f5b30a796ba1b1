"""Binary files for built cluster operators.

Layout (all little-endian)::

    magic        4 bytes   b"CXMP" (MPO) or b"CXPP" (PEPO)
    version      uint32
    rank         uint32    4 for the MPO tensor, 6 for the PEPO tensor
    d            uint32
    p            uint32    MPO: max cluster size; PEPO: 1 if the plaquette level is present
    t            2 x float64 (real, imag)
    n_levels     uint32, followed by n_levels uint32 level dimensions
    h            d**4 complex entries of the two-site term, row-major
    tensor       complex entries of the tensor in C order

Complex entries are stored as (real, imag) float64 pairs.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .models import TwoSiteHamiltonian
from .mpo import ClusterMpo, GradedIndex, contract_open_chain, exact_cluster_exponential
from .oracle import operator_distance
from .pepo import ClusterPepo, PatchSpec, contract_patch, exact_sites_exponential

MPO_MAGIC = b"CXMP"
PEPO_MAGIC = b"CXPP"
VERSION = 1
LOAD_TOL = 1e-10


class CorruptOperatorError(ValueError):
    pass


def _complex_bytes(a) -> bytes:
    flat = np.ascontiguousarray(a, dtype=np.complex128).ravel()
    return flat.view(np.float64).astype("<f8").tobytes()


def _header(magic, rank, d, p, t, dims, term) -> bytes:
    t = complex(t)
    out = magic + struct.pack("<IIII", VERSION, rank, d, p)
    out += struct.pack("<dd", t.real, t.imag)
    out += struct.pack("<I", len(dims)) + struct.pack(f"<{len(dims)}I", *dims)
    return out + _complex_bytes(term)


def save_mpo(mpo: ClusterMpo, path) -> None:
    data = _header(MPO_MAGIC, 4, mpo.d, mpo.p, mpo.t, mpo.virtual.level_dims, mpo.h.term)
    Path(path).write_bytes(data + _complex_bytes(mpo.tensor))


def save_pepo(pepo: ClusterPepo, path) -> None:
    data = _header(PEPO_MAGIC, 6, pepo.d, int(pepo.include_plaquette), pepo.t,
                   pepo.virtual.level_dims, pepo.h.term)
    Path(path).write_bytes(data + _complex_bytes(pepo.tensor))


def _read(path, magic, rank):
    raw = Path(path).read_bytes()
    try:
        return _parse(raw, path, magic, rank)
    except (struct.error, ValueError) as exc:
        if isinstance(exc, CorruptOperatorError):
            raise
        raise CorruptOperatorError(f"{path}: {exc}") from exc


def _parse(raw, path, magic, rank):
    if raw[:4] != magic:
        raise CorruptOperatorError(f"{path}: bad magic {raw[:4]!r}, expected {magic!r}")
    pos = 4
    version, file_rank, d, p = struct.unpack_from("<IIII", raw, pos)
    pos += 16
    if version != VERSION or file_rank != rank:
        raise CorruptOperatorError(f"{path}: unsupported version {version} / rank {file_rank}")
    tr, ti = struct.unpack_from("<dd", raw, pos)
    pos += 16
    (n_levels,) = struct.unpack_from("<I", raw, pos)
    pos += 4
    dims = struct.unpack_from(f"<{n_levels}I", raw, pos)
    pos += 4 * n_levels

    def take(count):
        nonlocal pos
        nbytes = 16 * count
        if pos + nbytes > len(raw):
            raise CorruptOperatorError(f"{path}: truncated file")
        vals = np.frombuffer(raw, dtype="<f8", count=2 * count, offset=pos).astype(np.float64)
        pos += nbytes
        return vals.view(np.complex128).copy()

    term = take(d ** 4).reshape(d * d, d * d)
    virtual = GradedIndex(tuple(dims))
    D = virtual.total
    shape = (D, d, d, D) if rank == 4 else (D, D, d, d, D, D)
    tensor = take(int(np.prod(shape))).reshape(shape)
    if pos != len(raw):
        raise CorruptOperatorError(f"{path}: {len(raw) - pos} trailing bytes")
    return d, p, complex(tr, ti), virtual, TwoSiteHamiltonian(d, term), tensor


def load_mpo(path, validate: bool = True) -> ClusterMpo:
    """Read an MPO file; by default check that it reproduces ``exp(t h)`` on two sites."""
    d, p, t, virtual, h, tensor = _read(path, MPO_MAGIC, 4)
    mpo = ClusterMpo(tensor, virtual, t, p, h, {})
    if validate and p >= 2:
        err = operator_distance(contract_open_chain(mpo, 2), exact_cluster_exponential(h, 2, t))
        if err > LOAD_TOL:
            raise CorruptOperatorError(f"{path}: two-site cluster error {err:.3e} exceeds {LOAD_TOL:g}")
    return mpo


def load_pepo(path, validate: bool = True) -> ClusterPepo:
    d, p, t, virtual, h, tensor = _read(path, PEPO_MAGIC, 6)
    pepo = ClusterPepo(tensor, virtual, t, h, [], bool(p))
    if validate:
        patch = PatchSpec(1, 2)
        err = operator_distance(contract_patch(pepo, patch), exact_sites_exponential(h, patch.sites(), t))
        if err > LOAD_TOL:
            raise CorruptOperatorError(f"{path}: two-site cluster error {err:.3e} exceeds {LOAD_TOL:g}")
    return pepo
