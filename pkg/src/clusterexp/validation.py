"""Invariant checks of built operators against the dense oracle."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .models import SZ, embed_one_site, reflect_operator
from .mpo import (
    NoiseFloorError,
    ClusterMpo,
    build,
    contract_open_chain,
    error_order_estimate,
    exact_cluster_exponential,
)
from .oracle import operator_distance
from .pepo import ClusterPepo, PatchSpec, contract_patch, exact_sites_exponential
from .tensor import frobenius

CHECK_TOL = 1e-10
SLOPE_GRID = (0.25, 0.35, 0.5, 0.7, 1.0)


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str

    def line(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'} {self.name}: {self.detail}"


def commutes_with_total_sz(term, d: int) -> bool:
    if d != 2:
        return False
    tot = embed_one_site(SZ, 2, 0) + embed_one_site(SZ, 2, 1)
    return frobenius(term @ tot - tot @ term) <= 1e-14 * max(frobenius(term), 1.0)


def sz_commutator(op, n: int) -> float:
    tot = sum(embed_one_site(SZ, n, i) for i in range(n))
    return frobenius(op @ tot - tot @ op)


def hermiticity_error(op) -> float:
    return frobenius(op - op.conj().T) / max(frobenius(op), 1e-300)


def validate_mpo(mpo: ClusterMpo, max_sites: int = 8) -> list[CheckResult]:
    """Cluster exactness, Hermiticity or unitarity, symmetries and error order."""
    h, t, p, d = mpo.h, complex(mpo.t), mpo.p, mpo.d
    results = []
    worst = max(
        operator_distance(contract_open_chain(mpo, n), exact_cluster_exponential(h, n, t))
        for n in range(1, p + 1)
    )
    results.append(CheckResult("cluster-exactness", worst <= CHECK_TOL, f"max error {worst:.3e} over n <= {p}"))

    top = min(max_sites, p + 2)
    chains = {n: contract_open_chain(mpo, n) for n in range(2, top + 1)}
    if t.imag == 0.0:
        worst = max(hermiticity_error(m) for m in chains.values())
        results.append(CheckResult("hermiticity", worst <= CHECK_TOL, f"max {worst:.3e} over n <= {top}"))
    else:
        n = min(p + 1, top)
        m = chains[n]
        dev = frobenius(m.conj().T @ m - np.eye(m.shape[0]))
        results.append(CheckResult("unitarity", True, f"||M^dag M - 1|| = {dev:.3e} on {n} sites (diagnostic)"))

    if h.is_reflection_symmetric():
        worst = max(operator_distance(reflect_operator(m, d, n), m) for n, m in chains.items())
        results.append(CheckResult("reflection", worst <= CHECK_TOL, f"max {worst:.3e} over n <= {top}"))

    if commutes_with_total_sz(h.term, d):
        worst = max(sz_commutator(m, n) / frobenius(m) for n, m in chains.items())
        results.append(CheckResult("u1-commutator", worst <= CHECK_TOL, f"max {worst:.3e} over n <= {top}"))

    n_sites = p + 1
    if n_sites <= 10:
        dts = [abs(t) * g for g in SLOPE_GRID]
        try:
            slope = error_order_estimate(h, p, n_sites, dts) if abs(t) > 0 else None
        except NoiseFloorError:
            slope = None
        if slope is None:
            results.append(CheckResult("error-order", True, "noise floor"))
        else:
            results.append(CheckResult("error-order", slope >= p - 0.2, f"slope {slope:.3f} (need >= {p - 0.2:.1f})"))
    return results


def reflect_patch(op, d: int, rows: int, cols: int, axis: str) -> np.ndarray:
    """Mirror a row-major patch operator left-right (``axis="cols"``) or top-bottom."""
    grid = np.arange(rows * cols).reshape(rows, cols)
    grid = grid[:, ::-1] if axis == "cols" else grid[::-1, :]
    order = list(grid.ravel())
    n = rows * cols
    axes = order + [n + k for k in order]
    return np.asarray(op).reshape((d,) * (2 * n)).transpose(axes).reshape(d ** n, d ** n)


def validate_pepo(pepo: ClusterPepo) -> list[CheckResult]:
    h, t, d = pepo.h, complex(pepo.t), pepo.d
    results = []
    exact_patches = [PatchSpec(1, 2), PatchSpec(2, 1), PatchSpec(1, 3), PatchSpec(3, 1)]
    if pepo.include_plaquette:
        exact_patches.append(PatchSpec(2, 2))
    worst = max(
        operator_distance(contract_patch(pepo, ps), exact_sites_exponential(h, ps.sites(), t))
        for ps in exact_patches
    )
    names = ",".join(f"{ps.rows}x{ps.cols}" for ps in exact_patches)
    results.append(CheckResult("cluster-exactness", worst <= CHECK_TOL, f"max error {worst:.3e} on {names}"))

    if pepo.virtual.n_levels >= 2:
        line = contract_patch(pepo, PatchSpec(1, 3))
        ref, _ = build(h, t, 3)
        err = operator_distance(line, contract_open_chain(ref, 3))
        results.append(CheckResult("line-reduction", err <= CHECK_TOL, f"1x3 vs 1D MPO {err:.3e}"))

    patches = [PatchSpec(2, 2), PatchSpec(2, 3), PatchSpec(3, 2)]
    ops = {ps: contract_patch(pepo, ps) for ps in patches}
    if t.imag == 0.0:
        worst = max(hermiticity_error(m) for m in ops.values())
        results.append(CheckResult("hermiticity", worst <= CHECK_TOL, f"max {worst:.3e}"))
    if h.is_reflection_symmetric():
        worst = max(
            operator_distance(reflect_patch(m, d, ps.rows, ps.cols, ax), m)
            for ps, m in ops.items()
            for ax in ("rows", "cols")
        )
        results.append(CheckResult("reflection", worst <= CHECK_TOL, f"max {worst:.3e}"))
    if commutes_with_total_sz(h.term, d):
        worst = max(sz_commutator(m, ps.rows * ps.cols) / frobenius(m) for ps, m in ops.items())
        results.append(CheckResult("u1-commutator", worst <= CHECK_TOL, f"max {worst:.3e}"))
    return results

