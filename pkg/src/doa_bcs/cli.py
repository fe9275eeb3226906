"""Command line interface: benchmark runner, snapshot simulator, file-based estimator."""
from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import sys
from pathlib import Path

import numpy as np

from .array_model import (ArrayGeometry, CouplingSpec, load_array_config, make_grid,
                          realify_matrix, stack_complex)
from .harness import (emit_results, format_summary, run_estimator_sequence,
                      run_scenario, synthesize_trial)
from .scenarios import ESTIMATOR_NAMES, builtin_scenarios, scenario_by_name


def _add_array_config_flag(parser):
    parser.add_argument("--array-config", type=str, default=None,
                        help="JSON file with fields m, delta_d_wavelengths, "
                             "coupling.D, coupling.rho[], coupling.phi[]")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="doa-bcs",
        description="Bayesian compressive sensing DOA estimation benchmarks")
    sub = parser.add_subparsers(dest="command", required=True)

    bench = sub.add_parser("bench", help="run Monte-Carlo benchmark scenarios")
    bench.add_argument("--scenario", default="all",
                       help="scenario name or 'all' (see --list)")
    bench.add_argument("--estimator", default="all",
                       help="comma-separated subset of rvm,mrvm,gibbs or 'all'")
    bench.add_argument("--trials", type=int, default=100, help="Monte-Carlo trials Q")
    bench.add_argument("--snapshots", type=int, default=20, help="snapshots K per trial")
    bench.add_argument("--eta", type=float, default=0.9,
                       help="energy fraction retained by thresholding")
    bench.add_argument("--seed", type=int, default=0)
    bench.add_argument("--out", default="results", help="output directory")
    bench.add_argument("--workers", type=int, default=1, help="trial worker processes")
    bench.add_argument("--config", default=None,
                       help="JSON file whose entries override the flags above")
    bench.add_argument("--list", action="store_true", help="list scenario names and exit")
    _add_array_config_flag(bench)

    sim = sub.add_parser("simulate", help="emit raw snapshots for one trial as CSV")
    sim.add_argument("--scenario", default="endfire")
    sim.add_argument("--trial", type=int, default=0)
    sim.add_argument("--snapshots", type=int, default=20)
    sim.add_argument("--seed", type=int, default=0)
    sim.add_argument("--out", required=True, help="output CSV path")
    _add_array_config_flag(sim)

    est = sub.add_parser("estimate", help="estimate DOAs from a snapshot CSV")
    est.add_argument("--input", required=True, help="CSV produced by 'simulate'")
    est.add_argument("--estimator", default="mrvm", choices=ESTIMATOR_NAMES)
    est.add_argument("--eta", type=float, default=0.9)
    est.add_argument("--assumed-motion", type=float, default=0.0,
                     help="assumed DOA change per snapshot, degrees")
    est.add_argument("--seed", type=int, default=0)
    est.add_argument("--out", default=None, help="optional output CSV of estimates")
    _add_array_config_flag(est)
    return parser


def _apply_config_file(args):
    """Entries in the JSON config file override command line flags."""
    if getattr(args, "config", None) is None:
        return args
    with open(args.config) as fh:
        doc = json.load(fh)
    for key, value in doc.items():
        dest = key.replace("-", "_")
        if not hasattr(args, dest):
            raise SystemExit(f"config file option {key!r} is not a bench flag")
        setattr(args, dest, value)
    return args


def _geometry_overrides(args) -> dict:
    if args.array_config is None:
        return {}
    geom, coupling = load_array_config(args.array_config)
    return {"m_antennas": geom.m, "delta_d": geom.delta_d, "coupling": coupling}


def _spec_to_jsonable(spec) -> dict:
    doc = dataclasses.asdict(spec)
    doc["coupling"] = {"D": spec.coupling.reach, "rho": list(spec.coupling.rho),
                       "phi": list(spec.coupling.phi)}
    if spec.signal_value is not None:
        doc["signal_value"] = {"re": spec.signal_value.real, "im": spec.signal_value.imag}
    return doc


def cmd_bench(args) -> int:
    args = _apply_config_file(args)
    if args.list:
        for spec in builtin_scenarios():
            print(spec.name)
        return 0
    if args.estimator == "all":
        estimators = ESTIMATOR_NAMES
    else:
        estimators = tuple(name.strip() for name in args.estimator.split(","))
        unknown = set(estimators) - set(ESTIMATOR_NAMES)
        if unknown:
            raise SystemExit(f"unknown estimator(s): {', '.join(sorted(unknown))}")

    overrides = _geometry_overrides(args)
    specs = builtin_scenarios(k=args.snapshots, q=args.trials, seed=args.seed,
                              eta=args.eta)
    if args.scenario != "all":
        specs = [spec for spec in specs if spec.name == args.scenario]
        if not specs:
            raise SystemExit(f"unknown scenario {args.scenario!r}")
    specs = [dataclasses.replace(spec, estimators=estimators, **overrides)
             for spec in specs]

    rows = []
    for spec in specs:
        print(f"running scenario {spec.name} "
              f"(Q={spec.q_trials}, K={spec.k_snapshots}, estimators={spec.estimators})")
        result = run_scenario(spec, n_workers=args.workers)
        rows.extend(result.to_rows())

    out_dir = Path(args.out)
    paths = emit_results(rows, out_dir)
    run_doc = {
        "command": "bench",
        "scenario": args.scenario,
        "estimators": list(estimators),
        "trials": args.trials,
        "snapshots": args.snapshots,
        "eta": args.eta,
        "seed": args.seed,
        "workers": args.workers,
        "scenarios": [_spec_to_jsonable(spec) for spec in specs],
    }
    with open(out_dir / "run.json", "w") as fh:
        json.dump(run_doc, fh, indent=2)
    print(format_summary(rows))
    print(f"results written to {paths['csv']}")
    return 0


def cmd_simulate(args) -> int:
    spec = scenario_by_name(args.scenario, k_snapshots=args.snapshots,
                            seed=args.seed, **_geometry_overrides(args))
    data = synthesize_trial(spec, args.trial)
    m = data.y.shape[1]
    header = (["k", "theta_true_deg"]
              + [f"y_re_{i}" for i in range(m)] + [f"y_im_{i}" for i in range(m)])
    with open(args.out, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for k in range(spec.k_snapshots):
            writer.writerow([k, f"{data.thetas_true[k]:.10g}"]
                            + [f"{v:.17g}" for v in data.y[k].real]
                            + [f"{v:.17g}" for v in data.y[k].imag])
    print(f"wrote {spec.k_snapshots} snapshots (M={m}) to {args.out}")
    return 0


def _read_snapshot_csv(path):
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        re_cols = sorted((c for c in reader.fieldnames if c.startswith("y_re_")),
                         key=lambda c: int(c.rsplit("_", 1)[1]))
        im_cols = sorted((c for c in reader.fieldnames if c.startswith("y_im_")),
                         key=lambda c: int(c.rsplit("_", 1)[1]))
        if not re_cols or len(re_cols) != len(im_cols):
            raise SystemExit(f"{path}: expected matching y_re_*/y_im_* columns")
        snapshots = []
        for rec in reader:
            y = (np.array([float(rec[c]) for c in re_cols])
                 + 1j * np.array([float(rec[c]) for c in im_cols]))
            snapshots.append(y)
    return np.stack(snapshots)


def cmd_estimate(args) -> int:
    y = _read_snapshot_csv(args.input)
    m = y.shape[1]
    if args.array_config is not None:
        geom, coupling = load_array_config(args.array_config)
        if geom.m != m:
            raise SystemExit(f"array config has m={geom.m} but input has {m} antennas")
    elif m == 20:
        geom, coupling = ArrayGeometry(20, 0.5), CouplingSpec(
            reach=3, rho=(0.65, 0.25), phi=(np.pi / 7, np.pi / 10))
    else:
        raise SystemExit("non-default antenna count: pass --array-config")
    grid = make_grid(geom, coupling)
    a_tilde = realify_matrix(grid.a)
    y_tildes = np.stack([stack_complex(yk) for yk in y])
    rng = np.random.default_rng(args.seed)
    angles, _ = run_estimator_sequence(args.estimator, y_tildes, grid, a_tilde,
                                       assumed_delta=args.assumed_motion,
                                       eta=args.eta, rng=rng)
    print(f"{'k':>4} {'theta_est_deg':>14}")
    for k, angle in enumerate(angles):
        shown = "miss" if np.isnan(angle) else f"{angle:.1f}"
        print(f"{k:>4} {shown:>14}")
    if args.out:
        with open(args.out, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["k", "theta_est_deg"])
            for k, angle in enumerate(angles):
                writer.writerow([k, "" if np.isnan(angle) else f"{angle:.10g}"])
        print(f"wrote estimates to {args.out}")
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    handlers = {"bench": cmd_bench, "simulate": cmd_simulate, "estimate": cmd_estimate}
    return handlers[args.command](args)


if __name__ == "__main__":
    sys.exit(main())
