"""Cluster-expansion PEPO on the square lattice.

The uniform tensor has legs ``(left, up, phys_out, phys_in, right, down)``,
all four virtual legs sharing one :class:`~clusterexp.mpo.GradedIndex`.

* level 0 carries the identity;
* level 1 carries the split of ``exp(t h) - 1``. The same pair of arm
  elements serves horizontal bonds (left site first) and vertical bonds (top
  site first);
* blocks with two, three or four level-1 legs encode the three-site lines and
  corners, the four-site T shapes and the five-site cross. Each is solved by
  stripping the arm elements from the leaves with pseudo-inverses;
* level 2 (optional) carries the irreducible 2x2 plaquette residual as a
  loop of four corner blocks.

Patch contractions close every boundary leg on level 0.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .models import TwoSiteHamiltonian, bond_hamiltonian
from .mpo import (
    LEAKAGE_FAIL,
    LEAKAGE_WARN,
    BuildReport,
    GradedIndex,
    LeakageError,
    LeakageWarning,
    deinterleave,
    interleave,
    loglog_slope,
)
from .tensor import DEFAULT_REL_TOL, SvdFactors, apply_pseudo_inverse, frobenius, matrix_exponential, svd_truncated

LEFT, UP, RIGHT, DOWN = "left", "up", "right", "down"
DIRECTIONS = (LEFT, UP, RIGHT, DOWN)
# tensor axis of each virtual leg
AXIS = {LEFT: 0, UP: 1, RIGHT: 4, DOWN: 5}
STEP = {LEFT: (0, -1), UP: (-1, 0), RIGHT: (0, 1), DOWN: (1, 0)}
OPPOSITE = {LEFT: RIGHT, RIGHT: LEFT, UP: DOWN, DOWN: UP}
MAX_PATCH_SITES = 9
MAX_INTERMEDIATE = 2 ** 25
NOISE_FLOOR = 1e-13

# center leg sets of the tree clusters encoded through level 1, ordered by size
TREE_SHAPES = (
    (LEFT, RIGHT),
    (UP, DOWN),
    (LEFT, UP),
    (LEFT, DOWN),
    (UP, RIGHT),
    (RIGHT, DOWN),
    (LEFT, UP, RIGHT),
    (LEFT, UP, DOWN),
    (LEFT, RIGHT, DOWN),
    (UP, RIGHT, DOWN),
    (LEFT, UP, RIGHT, DOWN),
)


@dataclass(frozen=True)
class PatchSpec:
    rows: int
    cols: int

    def __post_init__(self):
        if self.rows < 1 or self.cols < 1:
            raise ValueError(f"patch must be at least 1x1, got {self.rows}x{self.cols}")
        if self.rows > 3 or self.cols > 3 or self.rows * self.cols > MAX_PATCH_SITES:
            raise ValueError(f"patch {self.rows}x{self.cols} exceeds the 3x3 cap")

    def sites(self) -> list[tuple[int, int]]:
        return [(r, c) for r in range(self.rows) for c in range(self.cols)]


@dataclass
class ClusterPepo:
    tensor: np.ndarray
    virtual: GradedIndex
    t: complex
    h: TwoSiteHamiltonian
    max_cluster: list = field(default_factory=list)
    include_plaquette: bool = False

    @property
    def d(self) -> int:
        return self.h.d

    @property
    def bond_dim(self) -> int:
        return self.virtual.total


def site_bonds(sites) -> list[tuple[int, int]]:
    """Ordered nearest-neighbour pairs inside ``sites`` (left/top site first)."""
    index = {s: k for k, s in enumerate(sites)}
    bonds = []
    for (r, c), k in index.items():
        for nb in ((r, c + 1), (r + 1, c)):
            if nb in index:
                bonds.append((k, index[nb]))
    return bonds


def exact_sites_exponential(h: TwoSiteHamiltonian, sites, t: complex) -> np.ndarray:
    n = len(sites)
    bonds = site_bonds(sites)
    if not bonds:
        return np.eye(h.d ** n, dtype=complex)
    return matrix_exponential(bond_hamiltonian(h, n, bonds), t)


def contract_sites(pepo: ClusterPepo, sites) -> np.ndarray:
    """Contract one tensor per lattice site in ``sites``.

    Legs between two listed sites are summed; every other virtual leg is
    closed on level 0. The result is a ``d**n x d**n`` operator with site
    order following ``sites``. Sites are absorbed one at a time in the given
    order, keeping only the open bonds to not-yet-placed sites.
    """
    sites = [tuple(s) for s in sites]
    n = len(sites)
    if n == 0 or n > MAX_PATCH_SITES:
        raise ValueError(f"site count must lie in [1, {MAX_PATCH_SITES}], got {n}")
    if len(set(sites)) != n:
        raise ValueError("duplicate sites")
    d = pepo.d
    members = set(sites)
    placed = set()
    acc = np.ones((1,), dtype=complex)
    frontier = []  # bond keys of acc axes 1..
    for r, c in sites:
        a = pepo.tensor
        a_axes = [LEFT, UP, "out", "in", RIGHT, DOWN]
        for direction in (DOWN, RIGHT, UP, LEFT):
            dr, dc = STEP[direction]
            if (r + dr, c + dc) not in members:
                a = np.take(a, 0, axis=AXIS[direction])
                a_axes.remove(direction)
        joined, opened = [], []
        for direction in a_axes:
            if direction in ("out", "in"):
                continue
            dr, dc = STEP[direction]
            key = frozenset(((r, c), (r + dr, c + dc)))
            (joined if (r + dr, c + dc) in placed else opened).append((direction, key))
        acc_ax = [1 + frontier.index(key) for _, key in joined]
        site_ax = [a_axes.index(direction) for direction, _ in joined]
        shared = int(np.prod([acc.shape[k] for k in acc_ax])) if acc_ax else 1
        if (acc.size // shared) * (a.size // shared) > MAX_INTERMEDIATE:
            raise ValueError(
                f"contracting {n} sites at bond dimension {pepo.bond_dim} exceeds the "
                f"{MAX_INTERMEDIATE}-entry intermediate cap"
            )
        acc = np.tensordot(acc, a, axes=(acc_ax, site_ax))
        rest = [key for k, key in enumerate(frontier) if 1 + k not in acc_ax]
        # acc axes now: P, rest..., remaining site axes in a_axes order
        site_rest = [x for x in a_axes if x not in {dname for dname, _ in joined}]
        base = 1 + len(rest)
        perm = [0, base + site_rest.index("out"), base + site_rest.index("in")]
        perm += list(range(1, base))
        new_keys = []
        for direction, key in opened:
            perm.append(base + site_rest.index(direction))
            new_keys.append(key)
        acc = acc.transpose(perm)
        acc = acc.reshape((acc.shape[0] * d * d,) + acc.shape[3:])
        frontier = rest + new_keys
        placed.add((r, c))
    return deinterleave(acc, d, n)


def contract_patch(pepo: ClusterPepo, patch: PatchSpec) -> np.ndarray:
    """Open ``rows x cols`` patch contraction, site order row-major."""
    return contract_sites(pepo, patch.sites())


def _grow(pepo_tensor: np.ndarray, old: GradedIndex, new: GradedIndex) -> np.ndarray:
    D_old, D_new = old.total, new.total
    d = pepo_tensor.shape[2]
    out = np.zeros((D_new, D_new, d, d, D_new, D_new), dtype=complex)
    out[:D_old, :D_old, :, :, :D_old, :D_old] = pepo_tensor
    return out


def _tree_sites(legs) -> list[tuple[int, int]]:
    center = (1, 1)
    return [center] + [(1 + STEP[x][0], 1 + STEP[x][1]) for x in legs]


def _check_leakage(name: str, after: float, report: BuildReport) -> None:
    report.leakage[name] = after
    if after > LEAKAGE_FAIL:
        raise LeakageError(f"cluster {name}: relative leakage {after:.3e} exceeds {LEAKAGE_FAIL:g}")
    if after > LEAKAGE_WARN:
        warnings.warn(f"cluster {name}: relative leakage {after:.3e}", LeakageWarning, stacklevel=3)


def _cluster_name(legs) -> str:
    return "tree:" + "+".join(legs)


def build_pepo(
    h: TwoSiteHamiltonian,
    t: complex,
    rel_tol: float = DEFAULT_REL_TOL,
    include_plaquette: bool = True,
) -> tuple[ClusterPepo, BuildReport]:
    """Build the square-lattice cluster PEPO.

    Encodes, in order: the identity, the two-site bond on level 1, every
    tree cluster whose centre has two to four level-1 legs (lines, corners,
    T shapes and the cross), and optionally the 2x2 plaquette on level 2.

    Raises:
        ValueError: if ``d > 3``.
        LeakageError: if a solved cluster is left with relative error above 1e-8.
    """
    d = h.d
    if d > 3:
        raise ValueError(f"PEPO build supports d <= 3, got {d}")
    t = complex(t)
    report = BuildReport()
    virtual = GradedIndex((1,))
    tensor = np.zeros((1, 1, d, d, 1, 1), dtype=complex)
    tensor[0, 0, :, :, 0, 0] = np.eye(d)
    pepo = ClusterPepo(tensor, virtual, t, h, ["identity"], include_plaquette)

    # level 1: the two-site bond
    pair = [(0, 0), (0, 1)]
    exact = exact_sites_exponential(h, pair, t)
    residual = exact - contract_sites(pepo, pair)
    factors = svd_truncated(interleave(residual, d, 2), rel_tol)
    r1 = factors.rank
    sq = np.sqrt(factors.singular_values)
    first = factors.left * sq[None, :]  # (d*d, r1): site on the left / top
    second = sq[:, None] * factors.right  # (r1, d*d): site on the right / bottom
    virtual = virtual.extended(r1)
    tensor = _grow(tensor, pepo.virtual, virtual)
    s1 = virtual.slice(1)
    tensor[0, 0, :, :, s1, 0] = first.reshape(d, d, r1)
    tensor[0, 0, :, :, 0, s1] = first.reshape(d, d, r1)
    tensor[s1, 0, :, :, 0, 0] = second.reshape(r1, d, d)
    tensor[0, s1, :, :, 0, 0] = second.reshape(r1, d, d)
    pepo.tensor, pepo.virtual = tensor, virtual
    ref = frobenius(exact)
    report.residual_before["pair"] = frobenius(residual) / ref
    after = frobenius(exact - contract_sites(pepo, pair)) / ref
    report.residual_after["pair"] = after
    report.ranks[1] = r1
    _check_leakage("pair", after, report)
    pepo.max_cluster.append("pair")

    if r1:
        # pseudo-inverses of the arm elements, as (r1, d*d) maps from a leaf site
        pinv_first = apply_pseudo_inverse(
            SvdFactors(factors.left, sq, np.eye(r1, dtype=complex)), "left", np.eye(d * d)
        )
        pinv_second = apply_pseudo_inverse(
            SvdFactors(np.eye(r1, dtype=complex), sq, factors.right), "right", np.eye(d * d)
        ).T
        for legs in TREE_SHAPES:
            _solve_tree(pepo, legs, pinv_first, pinv_second, report)

    if include_plaquette:
        _solve_plaquette(pepo, rel_tol, report)
    report.level_dims = pepo.virtual.level_dims
    return pepo, report


def _solve_tree(pepo: ClusterPepo, legs, pinv_first, pinv_second, report: BuildReport) -> None:
    d = pepo.d
    sites = _tree_sites(legs)
    n = len(sites)
    exact = exact_sites_exponential(pepo.h, sites, pepo.t)
    residual = exact - contract_sites(pepo, sites)
    ref = frobenius(exact)
    name = _cluster_name(legs)
    report.residual_before[name] = frobenius(residual) / ref
    if frobenius(residual) < NOISE_FLOOR:
        report.residual_after[name] = report.residual_before[name]
        report.leakage[name] = report.residual_before[name]
        return
    core = interleave(residual, d, n)  # axes: center, leaves in `legs` order
    for k, direction in enumerate(legs, start=1):
        # a leaf to the left/up of the centre is the first site of its bond
        pinv = pinv_first if direction in (LEFT, UP) else pinv_second
        core = np.moveaxis(np.tensordot(pinv, core, axes=([1], [k])), 0, k)
    level = {x: (1 if x in legs else 0) for x in DIRECTIONS}
    block = _orient(core, legs, d)
    idx = tuple(
        pepo.virtual.slice(level[x]) if x in legs else slice(0, 1) for x in (LEFT, UP)
    ) + (slice(None), slice(None)) + tuple(
        pepo.virtual.slice(level[x]) if x in legs else slice(0, 1) for x in (RIGHT, DOWN)
    )
    pepo.tensor[idx] += block
    after = frobenius(exact - contract_sites(pepo, sites)) / ref
    report.residual_after[name] = after
    _check_leakage(name, after, report)
    pepo.max_cluster.append(name)


def _orient(core: np.ndarray, legs, d: int) -> np.ndarray:
    """Reorder ``(center, leg...)`` into ``(left, up, out, in, right, down)`` with size-1 gaps."""
    shape = core.shape
    by_dir = {x: k + 1 for k, x in enumerate(legs)}
    arr = core.reshape((d, d) + shape[1:])
    # axes after reshape: out=0, in=1, legs at 2..
    order = []
    expand = []
    for pos, x in enumerate((LEFT, UP, None, None, RIGHT, DOWN)):
        if x is None:
            continue
        if x not in by_dir:
            expand.append(pos)
    src = []
    for x in (LEFT, UP):
        if x in by_dir:
            src.append(by_dir[x] + 1)
    src += [0, 1]
    for x in (RIGHT, DOWN):
        if x in by_dir:
            src.append(by_dir[x] + 1)
    arr = arr.transpose(src)
    for pos in sorted(expand):
        arr = np.expand_dims(arr, pos)
    return arr


def _solve_plaquette(pepo: ClusterPepo, rel_tol: float, report: BuildReport) -> None:
    d = pepo.d
    sites = [(0, 0), (0, 1), (1, 0), (1, 1)]  # TL, TR, BL, BR
    exact = exact_sites_exponential(pepo.h, sites, pepo.t)
    residual = exact - contract_sites(pepo, sites)
    ref = frobenius(exact)
    report.residual_before["plaquette"] = frobenius(residual) / ref
    core = interleave(residual, d, 4)  # (TL, TR, BL, BR), each d*d
    q = d * d
    # cut the ring into top and bottom halves (through the two vertical bonds)
    halves = svd_truncated(core.reshape(q * q, q * q), rel_tol)
    r_mid = halves.rank
    sq = np.sqrt(halves.singular_values)
    top = (halves.left * sq[None, :]).reshape(q, q * r_mid)  # TL | (TR, k)
    bottom = (sq[:, None] * halves.right).reshape(r_mid, q, q)  # (k, BL, BR)
    bottom = bottom.transpose(0, 2, 1).reshape(r_mid * q, q)  # (k, BR) | BL
    top_f = svd_truncated(top, rel_tol)
    bot_f = svd_truncated(bottom, rel_tol)
    ra, rc = top_f.rank, bot_f.rank
    sa, sc = np.sqrt(top_f.singular_values), np.sqrt(bot_f.singular_values)
    tl = top_f.left * sa[None, :]  # (TL, a)
    tr = (sa[:, None] * top_f.right).reshape(ra, q, r_mid)  # (a, TR, k)
    br = (bot_f.left * sc[None, :]).reshape(r_mid, q, rc)  # (k, BR, c)
    bl = sc[:, None] * bot_f.right  # (c, BL)

    dim2 = max(ra, rc, r_mid, 1) if r_mid else 0
    report.ranks[2] = dim2
    if dim2 == 0:
        report.residual_after["plaquette"] = report.residual_before["plaquette"]
        _check_leakage("plaquette", report.residual_before["plaquette"], report)
        return
    old = pepo.virtual
    virtual = old.extended(dim2)
    tensor = _grow(pepo.tensor, old, virtual)
    o2 = virtual.offset(2)
    a_ix = slice(o2, o2 + ra)
    k_ix = slice(o2, o2 + r_mid)
    c_ix = slice(o2, o2 + rc)
    e_ix = o2  # the left vertical bond only passes a single index
    tensor[0, 0, :, :, a_ix, e_ix] = tl.reshape(d, d, ra)
    tensor[a_ix, 0, :, :, 0, k_ix] = tr.reshape(ra, d, d, r_mid)
    tensor[c_ix, k_ix, :, :, 0, 0] = br.reshape(r_mid, d, d, rc).transpose(3, 0, 1, 2)
    tensor[0, e_ix, :, :, c_ix, 0] = bl.reshape(rc, d, d).transpose(1, 2, 0)
    pepo.tensor, pepo.virtual = tensor, virtual
    after = frobenius(exact - contract_sites(pepo, sites)) / ref
    report.residual_after["plaquette"] = after
    _check_leakage("plaquette", after, report)
    pepo.max_cluster.append("plaquette")


def patch_errors(h: TwoSiteHamiltonian, patch: PatchSpec, dt_list, include_plaquette: bool = True,
                 rel_tol: float = DEFAULT_REL_TOL) -> np.ndarray:
    """Absolute Frobenius error of the real-time PEPO on ``patch`` for each ``dt``."""
    sites = patch.sites()
    errors = []
    for dt in dt_list:
        t = -1j * float(dt)
        pepo, _ = build_pepo(h, t, rel_tol, include_plaquette)
        exact = exact_sites_exponential(h, sites, t)
        errors.append(frobenius(contract_sites(pepo, sites) - exact))
    return np.array(errors)


def patch_error_order(h: TwoSiteHamiltonian, patch: PatchSpec, dt_list, include_plaquette: bool = True,
                      rel_tol: float = DEFAULT_REL_TOL) -> float:
    """Fitted order in ``dt`` of the patch error.

    Raises:
        NoiseFloorError: when the patch is reproduced exactly for every ``dt``.
    """
    if len(dt_list) < 2:
        raise ValueError("need at least two time steps")
    return loglog_slope(dt_list, patch_errors(h, patch, dt_list, include_plaquette, rel_tol))
