"""Command-line entry point: ``python -m clusterexp <command> ...``."""

from __future__ import annotations

import argparse
import csv
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from . import models
from .mpo import MAX_BUILD_P, LeakageError, NoiseFloorError, build, chain_errors, loglog_slope
from .mps import evolve, neel_state, random_state
from .oracle import DenseEvolver, DenseState, MAX_ORACLE_SITES, entanglement_entropy, neel_dense, occupations
from .oracle import mps_to_dense
from .pepo import build_pepo
from .serialize import CorruptOperatorError, load_mpo, load_pepo, save_mpo, save_pepo
from .validation import validate_mpo, validate_pepo

MAX_MPS_SITES = 64


class ConfigError(ValueError):
    pass


def _floats(text: str) -> list[float]:
    return [float(x) for x in text.split(",") if x.strip()]


def _ints(text: str) -> list[int]:
    return [int(x) for x in text.split(",") if x.strip()]


def _add_model(p: argparse.ArgumentParser) -> None:
    p.add_argument("--model", choices=["xxz", "heisenberg-rotated", "custom"], default="xxz")
    p.add_argument("--delta", type=float, default=0.5)
    p.add_argument("--custom-file", type=Path)


def _add_time(p: argparse.ArgumentParser) -> None:
    p.add_argument("--dt", type=float, default=0.5, help="time step (tau in imaginary mode)")
    p.add_argument("--mode", choices=["real", "imaginary"], default="real")
    p.add_argument("--rel-tol", type=float, default=1e-12)


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="clusterexp", description="Cluster-expansion MPO/PEPO toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    b = sub.add_parser("build", help="build and save a cluster MPO")
    _add_model(b)
    _add_time(b)
    b.add_argument("--p", type=int, default=5)
    b.add_argument("--output", type=Path, default=Path("cluster.mpo"))

    v = sub.add_parser("validate", help="check a saved MPO against the dense oracle")
    v.add_argument("--input", type=Path, required=True)
    v.add_argument("--max-sites", type=int, default=8)

    e = sub.add_parser("evolve", help="time-evolve an MPS with a cluster MPO")
    _add_model(e)
    _add_time(e)
    e.add_argument("--p", type=int, default=5)
    e.add_argument("--n-sites", type=int, default=12)
    e.add_argument("--steps", type=int, default=8)
    e.add_argument("--chi-max", type=int, default=64)
    e.add_argument("--svd-tol", type=float, default=1e-12)
    e.add_argument("--truncate-every", type=int, default=1)
    e.add_argument("--init", choices=["neel", "random"], default="neel")
    e.add_argument("--seed", type=int, default=0)
    e.add_argument("--oracle", action="store_true")
    e.add_argument("--output", type=Path, default=Path("evolve"))

    s = sub.add_parser("scaling", help="error-order sweep against the dense oracle")
    _add_model(s)
    s.add_argument("--p-list", type=_ints, default=[2, 3, 4, 5])
    s.add_argument("--dt-list", type=_floats, default=[0.05, 0.1, 0.2, 0.4])
    s.add_argument("--extra-sites", type=int, default=1, help="chain length is p + this")
    s.add_argument("--rel-tol", type=float, default=1e-12)
    s.add_argument("--workers", type=int, default=1)
    s.add_argument("--output", type=Path, default=Path("scaling.csv"))

    pb = sub.add_parser("pepo-build", help="build and save a cluster PEPO")
    _add_model(pb)
    _add_time(pb)
    pb.add_argument("--plaquette", action=argparse.BooleanOptionalAction, default=True)
    pb.add_argument("--output", type=Path, default=Path("cluster.pepo"))

    pv = sub.add_parser("pepo-validate", help="check a saved PEPO on small patches")
    pv.add_argument("--input", type=Path, required=True)
    return parser


def model_from_args(args) -> models.TwoSiteHamiltonian:
    if args.model == "xxz":
        return models.xxz_term(args.delta)
    if args.model == "heisenberg-rotated":
        return models.heisenberg_rotated_term()
    if args.custom_file is None:
        raise ConfigError("--custom-file is required with --model custom")
    return models.read_custom_term(args.custom_file)


def time_from_args(args) -> complex:
    if args.dt < 0:
        raise ConfigError(f"--dt must be non-negative, got {args.dt}")
    if args.mode == "real":
        t = -1j * args.dt
        print(f"mode real: t = -i*dt = {t.imag:+g}i")
    else:
        t = complex(-args.dt)
        print(f"mode imaginary: t = -tau = {t.real:+g}")
    return t


def _check_rel_tol(args) -> None:
    if not (0.0 <= args.rel_tol < 1.0):
        raise ConfigError(f"--rel-tol must lie in [0, 1), got {args.rel_tol}")


def _check_p(p: int) -> None:
    if not (2 <= p <= MAX_BUILD_P):
        raise ConfigError(f"--p must lie in [2, {MAX_BUILD_P}], got {p}")


def cmd_build(args) -> int:
    _check_p(args.p)
    _check_rel_tol(args)
    h = model_from_args(args)
    t = time_from_args(args)
    mpo, report = build(h, t, args.p, args.rel_tol)
    save_mpo(mpo, args.output)
    for line in report.lines():
        print(line)
    print(f"wrote {args.output}")
    return 0


def cmd_validate(args) -> int:
    try:
        mpo = load_mpo(args.input)
    except CorruptOperatorError as exc:
        print(f"FAIL cluster-exactness: {exc}")
        return 1
    results = validate_mpo(mpo, args.max_sites)
    for r in results:
        print(r.line())
    return 0 if all(r.passed for r in results) else 1


def _write_csv(path: Path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def _fmt(x: float) -> str:
    return repr(float(x) + 0.0)


def cmd_evolve(args) -> int:
    _check_p(args.p)
    _check_rel_tol(args)
    n = args.n_sites
    if n < 2 or n > MAX_MPS_SITES:
        raise ConfigError(f"--n-sites must lie in [2, {MAX_MPS_SITES}], got {n}")
    if args.init == "neel" and n % 2:
        raise ConfigError(f"--n-sites must be even for the Neel state, got {n}")
    if args.oracle and n > MAX_ORACLE_SITES:
        raise ConfigError(f"--oracle needs --n-sites <= {MAX_ORACLE_SITES}, got {n}")
    if args.steps < 0:
        raise ConfigError(f"--steps must be non-negative, got {args.steps}")
    if args.chi_max < 1:
        raise ConfigError(f"--chi-max must be positive, got {args.chi_max}")
    h = model_from_args(args)
    t = time_from_args(args)
    mpo, report = build(h, t, args.p, args.rel_tol)
    print(report.lines()[0])
    state = neel_state(n) if args.init == "neel" else random_state(n, h.d, seed=args.seed)
    _, rec = evolve(state, mpo, args.steps, args.chi_max, args.svd_tol, truncate_every=args.truncate_every)

    cut = n // 2
    oracle_occ, oracle_ent = [], []
    if args.oracle and rec.steps:
        ev = DenseEvolver(h, n)
        psi = neel_dense(n) if args.init == "neel" else mps_to_dense(state)
        for k in rec.steps:
            cur = ev.evolve(psi, t * k)
            cur = DenseState(n, cur.amplitudes / cur.norm())
            oracle_occ.append(occupations(cur))
            oracle_ent.append(entanglement_entropy(cur, cut))

    occ_header = ["step", "time", "site", "occupation"] + (["oracle_occupation"] if args.oracle else [])
    scal_header = ["step", "time", "cut", "entropy", "norm", "trunc_error"] + (["oracle_entropy"] if args.oracle else [])
    occ_rows, scal_rows = [], []
    max_dev = 0.0
    for j, step in enumerate(rec.steps):
        time = rec.times[j]
        for site, val in enumerate(rec.occupations[j]):
            row = [step, _fmt(time), site, _fmt(val)]
            if args.oracle:
                row.append(_fmt(oracle_occ[j][site]))
                max_dev = max(max_dev, abs(val - oracle_occ[j][site]))
            occ_rows.append(row)
        row = [step, _fmt(time), cut, _fmt(rec.entropies[j]), _fmt(rec.norms[j]), _fmt(rec.trunc_errors[j])]
        if args.oracle:
            row.append(_fmt(oracle_ent[j]))
        scal_rows.append(row)
    occ_path = Path(f"{args.output}_occupation.csv")
    scal_path = Path(f"{args.output}_scalars.csv")
    _write_csv(occ_path, occ_header, occ_rows)
    _write_csv(scal_path, scal_header, scal_rows)
    print(f"wrote {occ_path} and {scal_path}")
    if args.oracle:
        print(f"max occupation deviation from oracle: {max_dev:.3e}")
    return 0


def cmd_scaling(args) -> int:
    if not args.dt_list:
        raise ConfigError("--dt-list must name at least one time step")
    if any(dt <= 0 for dt in args.dt_list):
        raise ConfigError("--dt-list entries must be positive")
    for p in args.p_list:
        _check_p(p)
        if p + args.extra_sites > 10:
            raise ConfigError(f"chain length p + --extra-sites must be <= 10, got {p + args.extra_sites}")
    if args.extra_sites < 1:
        raise ConfigError("--extra-sites must be >= 1")
    h = model_from_args(args)
    print("mode real: t = -i*dt")

    def run(p):
        return chain_errors(h, p, p + args.extra_sites, args.dt_list, args.rel_tol)

    with ThreadPoolExecutor(max_workers=max(1, args.workers)) as pool:
        errors = dict(zip(args.p_list, pool.map(run, args.p_list)))
    rows = [[p, _fmt(dt), _fmt(err)] for p in args.p_list for dt, err in zip(args.dt_list, errors[p])]
    _write_csv(args.output, ["p", "dt", "error"], rows)
    for p in args.p_list:
        frac = math.factorial(p) / p ** p
        try:
            slope = f"{loglog_slope(args.dt_list, errors[p]):.3f}"
        except NoiseFloorError:
            slope = "noise floor"
        print(f"p={p} n_sites={p + args.extra_sites} slope={slope} fraction p!/p^p={frac:.4f}")
    print(f"wrote {args.output}")
    return 0


def cmd_pepo_build(args) -> int:
    _check_rel_tol(args)
    h = model_from_args(args)
    t = time_from_args(args)
    pepo, report = build_pepo(h, t, args.rel_tol, args.plaquette)
    save_pepo(pepo, args.output)
    for line in report.lines():
        print(line)
    print(f"wrote {args.output}")
    return 0


def cmd_pepo_validate(args) -> int:
    try:
        pepo = load_pepo(args.input)
    except CorruptOperatorError as exc:
        print(f"FAIL cluster-exactness: {exc}")
        return 1
    results = validate_pepo(pepo)
    for r in results:
        print(r.line())
    return 0 if all(r.passed for r in results) else 1


COMMANDS = {
    "build": cmd_build,
    "validate": cmd_validate,
    "evolve": cmd_evolve,
    "scaling": cmd_scaling,
    "pepo-build": cmd_pepo_build,
    "pepo-validate": cmd_pepo_validate,
}


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (ConfigError, LeakageError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
