"""Symmetric cluster expansions of exponentiated nearest-neighbour Hamiltonians.

The main entry points are :func:`clusterexp.mpo.build` for spin chains and
:func:`clusterexp.pepo.build_pepo` for the square lattice.
"""

from .models import TwoSiteHamiltonian, cluster_hamiltonian, heisenberg_rotated_term, xxz_term
from .mpo import BuildReport, ClusterMpo, GradedIndex, build, contract_open_chain, error_order_estimate
from .mps import FiniteMps, apply_mpo, evolve, neel_state, truncate
from .pepo import ClusterPepo, PatchSpec, build_pepo, contract_patch

__all__ = [
    "TwoSiteHamiltonian",
    "cluster_hamiltonian",
    "heisenberg_rotated_term",
    "xxz_term",
    "BuildReport",
    "ClusterMpo",
    "GradedIndex",
    "build",
    "contract_open_chain",
    "error_order_estimate",
    "FiniteMps",
    "apply_mpo",
    "evolve",
    "neel_state",
    "truncate",
    "ClusterPepo",
    "PatchSpec",
    "build_pepo",
    "contract_patch",
]

__version__ = "0.1.0"
