"""Batch front door: run scenarios from JSON files, verify identities, list systems.

Commands:
    protofield verify [--filter PAT]     structural-identity suite, PASS/FAIL table
    protofield solve FILE [--reduced]    run a scenario, write CSV results
    protofield catalog                   list systems with their derivation chains

Exit codes: 0 success, 1 verification failure, 2 scenario parse error,
3 unknown catalog name, 4 well-posedness failure.

Scenario files are JSON objects:

    {
      "name": "acoustics_standing_wave",
      "catalog": "acoustics",
      "grid": [{"n": 31, "bc": "dirichlet", "length": 1.0}],
      "params": {"rho": 1.0, "kappa": 1.0, "sigma": 0.0},
      "solver": {"tau": 0.005, "t_end": 1.0, "scheme": "crank_nicolson", "nu": 0.0},
      "initial": [{"block": "p", "profile": "sine", "mode": 1, "amplitude": 1.0}],
      "forcing": {"onset": 0.5, "block": "p", "profile": "gauss", "amplitude": 1.0},
      "output": {"snapshots": [0.0, 0.5, 1.0]}
    }

Grid axes: {"n": int, "bc": "dirichlet"|"periodic", "length": float} --
dirichlet axes place n interior points on (0, length); periodic axes
always have total measure 1 (h = 1/n).  Initial profiles are evaluated on
the grid points of the block's leading scalar factor and replicated over
components.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from . import catalog
from .flatgrid import Axis
from .evolve import SolverConfig, solve, solve_reduced
from .matlaw import MaterialLawError
from .verify import run_checks

EXIT_OK = 0
EXIT_VERIFY_FAILED = 1
EXIT_PARSE_ERROR = 2
EXIT_UNKNOWN_CATALOG = 3
EXIT_WELLPOSEDNESS = 4

FLOAT_FMT = "%.17g"


def _axes_from_config(grid_cfg):
    axes = []
    for item in grid_cfg:
        n = int(item["n"])
        bc = item.get("bc", "dirichlet")
        if bc == "periodic":
            axes.append(Axis.torus(n))
        else:
            length = float(item.get("length", 1.0))
            axes.append(Axis.interval(n, length))
    return tuple(axes)


def _grid_points(axes):
    """Interior/periodic point coordinates per axis, normalized to (0, 1)-ish."""
    coords = []
    for a in axes:
        if a.bc == "periodic":
            coords.append(np.arange(a.n) * a.h)
        else:
            coords.append(a.interval_points())
    return coords


def _profile_values(axes, spec):
    """Scalar profile sampled on the grid points (C order)."""
    coords = _grid_points(axes)
    mesh = np.meshgrid(*coords, indexing="ij")
    kind = spec.get("profile", "sine")
    amp = float(spec.get("amplitude", 1.0))
    if kind == "sine":
        mode = int(spec.get("mode", 1))
        out = np.ones_like(mesh[0])
        for m, a in zip(mesh, axes):
            span = (a.n + 1) * a.h if a.bc == "dirichlet" else 1.0
            out = out * np.sin(mode * np.pi * m / span)
    elif kind == "gauss":
        width = float(spec.get("width", 0.15))
        out = np.ones_like(mesh[0])
        centers = spec.get("center", [0.5] * len(axes))
        for m, c in zip(mesh, centers):
            out = out * np.exp(-((m - c) ** 2) / (2 * width ** 2))
    elif kind == "constant":
        out = np.ones_like(mesh[0])
    else:
        raise ValueError(f"unknown profile {kind!r}")
    return amp * out.reshape(-1)


def _block_vector(entry, items, axes):
    vec = np.zeros(entry.dim)
    slices = entry.block_slices()
    for item in items:
        label = item["block"]
        if label not in slices:
            raise ValueError(f"unknown block {label!r}; have {sorted(slices)}")
        sl = slices[label]
        vals = _profile_values(axes, item)
        size = sl.stop - sl.start
        if size % vals.size:
            raise ValueError(f"profile does not tile block {label!r}")
        vec[sl] = np.tile(vals, size // vals.size)
    return vec


def load_scenario(path):
    text = Path(path).read_text()
    cfg = json.loads(text)
    for key in ("name", "catalog", "grid", "solver"):
        if key not in cfg:
            raise ValueError(f"scenario is missing the {key!r} key")
    return cfg


def serialize_scenario(cfg):
    return json.dumps(cfg, indent=2, sort_keys=True)


def run_scenario(cfg, reduced=False, outdir="."):
    axes = _axes_from_config(cfg["grid"])
    entry = catalog.build_entry(cfg["catalog"], axes, cfg.get("params"))
    solver_cfg = cfg["solver"]
    config = SolverConfig(
        tau=float(solver_cfg["tau"]),
        t_end=float(solver_cfg["t_end"]),
        scheme=solver_cfg.get("scheme", "crank_nicolson"),
        nu=float(solver_cfg.get("nu", 0.0)),
    )
    initial = _block_vector(entry, cfg.get("initial", []), axes)
    forcing = None
    if "forcing" in cfg:
        fcfg = cfg["forcing"]
        onset = float(fcfg.get("onset", 0.0))
        pulse = _block_vector(entry, [fcfg], axes)

        def forcing(t, pulse=pulse, onset=onset):
            return pulse if t >= onset else np.zeros_like(pulse)

    problem = entry.problem(initial=initial, forcing=forcing)
    runner = solve_reduced if reduced else solve
    traj = runner(problem, config)
    _write_energy_csv(cfg, traj, config, outdir)
    _write_snapshot_csv(cfg, entry, traj, outdir)
    return traj


def _write_energy_csv(cfg, traj, config, outdir):
    path = Path(outdir) / f"{cfg['name']}_energy.csv"
    # running trapezoidal integral of |u(t)|^2 exp(-2 nu t), reported as a norm
    w = traj.space.weight if traj.space is not None else np.ones(traj.states.shape[1])
    sq = np.einsum("ij,ij->i", traj.states, traj.states * w[None, :])
    vals = sq * np.exp(-2.0 * config.nu * traj.times)
    steps = np.diff(traj.times) * 0.5 * (vals[1:] + vals[:-1])
    partial = np.sqrt(np.concatenate([[0.0], np.cumsum(steps)]))
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t", "energy", "weighted_partial_norm"])
        for k, t in enumerate(traj.times):
            writer.writerow([
                FLOAT_FMT % t,
                FLOAT_FMT % traj.energies[k],
                FLOAT_FMT % partial[k],
            ])
    return path


def _write_snapshot_csv(cfg, entry, traj, outdir):
    path = Path(outdir) / f"{cfg['name']}_snapshots.csv"
    times = cfg.get("output", {}).get("snapshots", [])
    slices = entry.block_slices()
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t", "block", "index", "value"])
        for t in times:
            state = traj.state_at(float(t))
            t_actual = traj.times[int(np.argmin(np.abs(traj.times - float(t))))]
            for label, sl in slices.items():
                for i, val in enumerate(state[sl]):
                    writer.writerow([FLOAT_FMT % t_actual, label, i, FLOAT_FMT % val])
    return path


def cmd_verify(args):
    results = run_checks(args.filter)
    if not results:
        print(f"no checks match filter {args.filter!r}")
        return EXIT_VERIFY_FAILED
    width = max(len(r.name) for r in results)
    all_ok = True
    for r in results:
        status = "PASS" if r.passed else "FAIL"
        print(f"{status}  {r.name:<{width}}  residual {r.residual:.3e}  "
              f"tol {r.tol:.1e}  {r.detail}")
        all_ok &= r.passed
    print(f"{'all checks passed' if all_ok else 'SOME CHECKS FAILED'}")
    return EXIT_OK if all_ok else EXIT_VERIFY_FAILED


def cmd_solve(args):
    try:
        cfg = load_scenario(args.file)
    except json.JSONDecodeError as exc:
        print(f"scenario parse error at line {exc.lineno}, column {exc.colno}: "
              f"{exc.msg}", file=sys.stderr)
        return EXIT_PARSE_ERROR
    except (OSError, ValueError) as exc:
        print(f"scenario error: {exc}", file=sys.stderr)
        return EXIT_PARSE_ERROR
    try:
        run_scenario(cfg, reduced=args.reduced, outdir=args.outdir)
    except KeyError as exc:
        print(f"unknown catalog entry: {exc}", file=sys.stderr)
        return EXIT_UNKNOWN_CATALOG
    except MaterialLawError as exc:
        print(f"well-posedness failure: {exc}", file=sys.stderr)
        return EXIT_WELLPOSEDNESS
    print(f"wrote {cfg['name']}_energy.csv and {cfg['name']}_snapshots.csv")
    return EXIT_OK


def cmd_catalog(args):
    for name in catalog.REGISTRY:
        entry = catalog.build_entry(name)
        blocks = ", ".join(f"{lab}[{size}]" for lab, size in entry.blocks)
        print(f"{name}")
        print(f"    state blocks: {blocks}")
        for step in entry.provenance:
            print(f"    <- {step}")
    return EXIT_OK


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="protofield",
        description="derive, verify and integrate the classical linear field systems",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_verify = sub.add_parser("verify", help="run the structural-identity suite")
    p_verify.add_argument("--filter", default=None,
                          help="only run checks whose name contains this substring")
    p_verify.set_defaults(func=cmd_verify)

    p_solve = sub.add_parser("solve", help="run a scenario file")
    p_solve.add_argument("file", help="path to a JSON scenario")
    p_solve.add_argument("--reduced", action="store_true",
                         help="step on the range of A, reconstructing the kernel part")
    p_solve.add_argument("--outdir", default=".", help="directory for CSV output")
    p_solve.set_defaults(func=cmd_solve)

    p_catalog = sub.add_parser("catalog", help="list the registered systems")
    p_catalog.set_defaults(func=cmd_catalog)

    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
