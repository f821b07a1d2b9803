"""Command-line entry point.

Subcommands: free-decay, driven-steady, raman-pulse, verify.  Flags mirror a
flat key/value JSON config file (``--config``); explicit flags win over the
file.  The output directory defaults to $SUPERRAD_OUT or ./superrad_out.
Exit codes: 0 success, 1 numerical failure (the failing sweep point is
named), 2 usage errors.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from .algebra import build_three_level_basis, build_two_level_basis, verify_algebra
from .experiments import (
    Scenario,
    ScenarioError,
    parse_sweep,
    run_scenario,
    write_run,
)

ALGEBRA_TOL = 1e-12
ORACLE_TOL = 1e-6


def _add_common(p: argparse.ArgumentParser):
    p.add_argument("--n", type=int, help="atom number N")
    p.add_argument("--gamma", type=float, help="collective decay rate")
    p.add_argument("--delta", type=float, help="drive detuning")
    p.add_argument("--t-max", type=float, dest="t_max", help="simulation window")
    p.add_argument("--samples", type=int, help="number of sample times")
    p.add_argument("--solver", choices=("master", "mcwf", "meanfield"))
    p.add_argument("--trajectories", type=int, help="MCWF trajectories per point")
    p.add_argument("--seed", type=int, help="master seed for MCWF runs")
    p.add_argument("--sweep", help="param:start:stop:count[:log]")
    p.add_argument("--jobs", type=int, help="trajectory workers per sweep point")
    p.add_argument("--out", help="output directory")
    p.add_argument("--config", help="flat JSON config file mirroring the flags")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="superrad",
        description="Superradiance experiments: Dicke master equation, "
        "quantum trajectories, mean field.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_free = sub.add_parser("free-decay", help="superradiant pulse from the inverted state")
    _add_common(p_free)

    p_steady = sub.add_parser("driven-steady", help="resonantly driven steady state")
    _add_common(p_steady)
    p_steady.add_argument("--omega", type=float, help="Rabi frequency")

    p_raman = sub.add_parser("raman-pulse", help="pulsed Raman scattering (MCWF)")
    _add_common(p_raman)
    p_raman.add_argument("--omega0", type=float, help="peak Rabi frequency of the pulse")
    p_raman.add_argument(
        "--pulse-length", type=float, dest="pulse_length", help="drive pulse length T"
    )

    sub.add_parser("verify", help="run algebra and oracle self-checks")
    return parser


_DEFAULTS = {
    "n": 20,
    "gamma": 1.0,
    "omega": 1.0,
    "omega0": 1.0,
    "delta": None,  # per-kind default below
    "pulse_length": 5.0,
    "seed": 0,
    "jobs": 1,
}


def _merged_options(args: argparse.Namespace) -> dict:
    opts: dict = {}
    if getattr(args, "config", None):
        with open(args.config) as fh:
            opts.update(json.load(fh))
    for key, val in vars(args).items():
        if key in ("command", "config"):
            continue
        if val is not None:
            opts[key] = val
    for key, val in _DEFAULTS.items():
        opts.setdefault(key, val)
    if opts.get("delta") is None:
        opts["delta"] = 1.0 if args.command == "raman-pulse" else 0.0
    return opts


def _out_dir(opts: dict) -> Path:
    out = opts.get("out") or os.environ.get("SUPERRAD_OUT") or "superrad_out"
    return Path(out)


def _scenario_from_options(command: str, opts: dict) -> Scenario:
    kind = command.replace("-", "_")
    sweep = None
    if opts.get("sweep"):
        sweep = parse_sweep(opts["sweep"]) if isinstance(opts["sweep"], str) else opts["sweep"]
    return Scenario(
        kind=kind,
        n_atoms=int(opts["n"]),
        gamma=float(opts["gamma"]),
        omega=float(opts.get("omega", 1.0)),
        omega0=float(opts.get("omega0", 1.0)),
        delta=float(opts["delta"]),
        pulse_length=float(opts.get("pulse_length", 5.0)),
        solver=opts.get("solver", ""),
        sweep=sweep,
        n_trajectories=opts.get("trajectories"),
        master_seed=int(opts.get("seed", 0)),
        t_max=opts.get("t_max"),
        n_samples=opts.get("samples"),
    )


def _cmd_verify() -> int:
    from .lindblad import HamiltonianSpec, LindbladProblem, evolve, evolve_full_product
    from .mcwf import observable_weights
    from .states import all_excited_state, all_metastable_state

    failures = 0

    def check(name, dev, tol):
        nonlocal failures
        ok = dev <= tol
        print(f"{'PASS' if ok else 'FAIL'}  {name}: max deviation {dev:.3e} (tol {tol:.0e})")
        if not ok:
            failures += 1

    worst2 = max(verify_algebra(build_two_level_basis(n))["max"] for n in range(1, 31))
    check("two-level algebra N=1..30", worst2, ALGEBRA_TOL)
    worst3 = max(verify_algebra(build_three_level_basis(n))["max"] for n in range(1, 11))
    check("three-level algebra N=1..10", worst3, ALGEBRA_TOL)

    # Symmetric-subspace evolution vs full product space, N = 2.
    t_grid = np.linspace(0.0, 5.0, 101)
    basis = build_two_level_basis(2)
    problem = LindbladProblem(basis, HamiltonianSpec("none"), 1.0)
    weights = observable_weights(problem)
    res = evolve(problem, all_excited_state(basis), t_grid)
    sym_int = np.array(
        [weights["intensity"] @ np.real(np.diag(r.matrix)) for r in res.states]
    )
    _, oracle = evolve_full_product(problem, all_excited_state(basis), t_grid)
    check("free-decay oracle N=2", float(np.max(np.abs(sym_int - oracle["intensity"]))), ORACLE_TOL)

    basis3 = build_three_level_basis(2)
    problem3 = LindbladProblem(
        basis3, HamiltonianSpec("raman_pulse", omega0=1.0, delta=1.0, t_pulse=5.0), 1.0
    )
    w3 = observable_weights(problem3)
    t_grid3 = np.linspace(0.0, 7.5, 101)
    res3 = evolve(problem3, all_metastable_state(basis3).to_density(), t_grid3)
    sym3 = np.array([w3["intensity"] @ np.real(np.diag(r.matrix)) for r in res3.states])
    _, oracle3 = evolve_full_product(problem3, all_metastable_state(basis3).to_density(), t_grid3)
    check("raman oracle N=2", float(np.max(np.abs(sym3 - oracle3["intensity"]))), ORACLE_TOL)

    print("verify:", "OK" if failures == 0 else f"{failures} check(s) failed")
    return 0 if failures == 0 else 1


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "verify":
        return _cmd_verify()
    try:
        opts = _merged_options(args)
        scenario = _scenario_from_options(args.command, opts)
        record = run_scenario(scenario, jobs=int(opts.get("jobs", 1)))
        out = write_run(record, _out_dir(opts))
        print(f"wrote {out}")
        return 0
    except ScenarioError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
