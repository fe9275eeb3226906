"""Monte-Carlo benchmark runner: trial synthesis, estimator sequencing, RMSE, output.

Within a trial every estimator consumes the same synthesized snapshots (paired
comparison); per-trial random streams are derived from (seed, trial index) so
serial and parallel runs agree bit-exactly.
"""
from __future__ import annotations

import csv
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.optimize

from .array_model import (ArrayGeometry, make_grid, realify_matrix, stack_complex,
                          synthesize_snapshot, unstack_complex)
from .bcskf import MotionModel, initialize_track, track_step
from .gibbs import GibbsConfig, run_chain
from .rvm import NumericalError, RvmConfig, run_modified_rvm
from .scenarios import ScenarioSpec, true_trajectory
from .thresholding import ThresholdConfig, primary_doa, threshold, thresholded_vector

MISS_PENALTY_DEG = 180.0


def rmse(true_doas, est_doas, miss_penalty: float = MISS_PENALTY_DEG) -> float:
    """Root mean square DOA error over trials.

    A missing estimate (NaN) contributes the worst-case penalty so averages stay
    well defined.
    """
    true_doas = np.asarray(true_doas, dtype=float)
    est_doas = np.asarray(est_doas, dtype=float)
    errs = np.abs(true_doas - est_doas)
    errs = np.where(np.isnan(est_doas), miss_penalty, errs)
    return float(np.sqrt(np.mean(errs ** 2)))


def match_errors(true_angles, est_angles, miss_penalty: float = MISS_PENALTY_DEG):
    """Per-source absolute errors with nearest-pair matching.

    Pairs estimated against true angles by minimum total absolute error;
    unmatched true sources incur the miss penalty.
    """
    true_angles = np.asarray(true_angles, dtype=float)
    est_angles = np.asarray(est_angles, dtype=float)
    if est_angles.size == 0:
        return np.full(true_angles.size, miss_penalty)
    cost = np.abs(true_angles[:, None] - est_angles[None, :])
    rows, cols = scipy.optimize.linear_sum_assignment(cost)
    errs = np.full(true_angles.size, miss_penalty)
    errs[rows] = cost[rows, cols]
    return errs


@dataclass(frozen=True)
class ResultRow:
    scenario: str
    estimator: str
    k: int
    rmse_deg: float
    runtime_s: float
    trials: int


@dataclass
class TrialData:
    """Ground truth and snapshots for one trial, shared by all estimators."""

    thetas_true: np.ndarray  # (K,)
    y: np.ndarray            # (K, M) complex snapshots
    signal_value: complex


def synthesize_trial(spec: ScenarioSpec, trial: int) -> TrialData:
    """Deterministically synthesize one trial's trajectory and snapshots."""
    geom = ArrayGeometry(spec.m_antennas, spec.delta_d)
    grid = make_grid(geom, spec.coupling)
    rng = np.random.default_rng([spec.seed, trial, 0])
    thetas_true = true_trajectory(spec, rng)
    if spec.signal_value is None:
        value = complex(rng.choice([1.0, -1.0]))
    else:
        value = complex(spec.signal_value)
    y = np.empty((spec.k_snapshots, geom.m), dtype=complex)
    for k, theta in enumerate(thetas_true):
        x = np.zeros(grid.n, dtype=complex)
        x[grid.grid_index(theta)] = value
        y[k] = synthesize_snapshot(grid, x, spec.sigma2_true, rng).y
    return TrialData(thetas_true=thetas_true, y=y, signal_value=value)


def run_estimator_sequence(estimator, y_tildes, grid, a_tilde, *, assumed_delta=0.0,
                           eta=0.9, sigma2_init=0.1, rvm_config=None,
                           gibbs_config=None, rng=None, grid_step=1.0):
    """Run one estimator over a snapshot sequence.

    Every estimator handles the first snapshot with the traditional RVM; the
    Gibbs sampler then takes over per snapshot, while the RVM variants run the
    Kalman tracker (the traditional variant uses a zero prior mean in its
    per-snapshot hyperparameter fit). Returns per-snapshot DOA estimates (NaN
    marks a snapshot with no estimate) and per-snapshot wall-clock seconds.
    """
    if rvm_config is None:
        rvm_config = RvmConfig()
    th_config = ThresholdConfig(eta)
    k_total = len(y_tildes)
    angles = np.full(k_total, np.nan)
    times = np.zeros(k_total)

    def extract(x_complex):
        est = primary_doa(threshold(x_complex, grid.thetas, th_config))
        return np.nan if est is None else est

    t0 = time.perf_counter()
    first = run_modified_rvm(a_tilde, y_tildes[0], x_p=None, config=rvm_config,
                             sigma2_init=sigma2_init)
    angles[0] = extract(first.x_complex)
    times[0] = time.perf_counter() - t0

    if estimator in ("rvm", "mrvm"):
        state = None
        motion = MotionModel(assumed_delta)
        for k in range(1, k_total):
            t0 = time.perf_counter()
            if state is None:
                state = _track_state_from_rvm(first)
            state, _ = track_step(state, y_tildes[k], motion, a_tilde,
                                  rvm_config=rvm_config, sigma2_init=sigma2_init,
                                  use_predicted_prior=(estimator == "mrvm"),
                                  grid_step=grid_step)
            angles[k] = extract(unstack_complex(state.x_filt))
            times[k] = time.perf_counter() - t0
    elif estimator == "gibbs":
        if rng is None:
            raise ValueError("the gibbs estimator needs an explicit random generator")
        if gibbs_config is None:
            gibbs_config = GibbsConfig()
        x_prev = thresholded_vector(first.x_complex, th_config)
        for k in range(1, k_total):
            t0 = time.perf_counter()
            summary = run_chain(y_tildes[k], a_tilde, x_prev, gibbs_config, rng)
            x_complex = unstack_complex(summary.x_mean)
            angles[k] = extract(x_complex)
            x_prev = thresholded_vector(x_complex, th_config)
            times[k] = time.perf_counter() - t0
    else:
        raise ValueError(f"unknown estimator {estimator!r}")
    return angles, times


def _track_state_from_rvm(first):
    from .bcskf import TrackState
    return TrackState(x_filt=first.x_opt, sigma_filt=np.diag(1.0 / first.p_opt),
                      sigma2=first.sigma2_opt, p=first.p_opt)


@dataclass
class TrialOutcome:
    thetas_true: np.ndarray
    angles: dict
    times: dict
    failed: dict


def run_single_trial(spec: ScenarioSpec, trial: int) -> TrialOutcome:
    """Synthesize one trial and run every configured estimator on it."""
    geom = ArrayGeometry(spec.m_antennas, spec.delta_d)
    grid = make_grid(geom, spec.coupling)
    a_tilde = realify_matrix(grid.a)
    data = synthesize_trial(spec, trial)
    y_tildes = np.stack([stack_complex(yk) for yk in data.y])

    angles, times, failed = {}, {}, {}
    for estimator in spec.estimators:
        rng_est = np.random.default_rng([spec.seed, trial, 1])
        try:
            est_angles, est_times = run_estimator_sequence(
                estimator, y_tildes, grid, a_tilde,
                assumed_delta=spec.assumed_delta, eta=spec.eta,
                sigma2_init=spec.sigma2_init, rng=rng_est,
                grid_step=spec.grid_step)
            angles[estimator] = est_angles
            times[estimator] = est_times
            failed[estimator] = False
        except NumericalError:
            angles[estimator] = np.full(spec.k_snapshots, np.nan)
            times[estimator] = np.zeros(spec.k_snapshots)
            failed[estimator] = True
    return TrialOutcome(thetas_true=data.thetas_true, angles=angles,
                        times=times, failed=failed)


def _trial_worker(args):
    spec, trial = args
    return run_single_trial(spec, trial)


@dataclass
class ScenarioResult:
    """All per-trial estimates for one scenario, plus aggregation helpers."""

    spec: ScenarioSpec
    truths: np.ndarray       # (Q, K)
    estimates: dict          # estimator -> (Q, K), NaN for a missed estimate
    runtimes: dict           # estimator -> (Q, K) seconds
    failed: dict             # estimator -> (Q,) bool mask of failed trials

    def failures(self, estimator) -> int:
        return int(self.failed[estimator].sum())

    def to_rows(self) -> list[ResultRow]:
        rows = []
        for estimator in self.spec.estimators:
            ok = ~self.failed[estimator]
            n_ok = int(ok.sum())
            for k in range(self.spec.k_snapshots):
                if n_ok:
                    rmse_k = rmse(self.truths[ok, k], self.estimates[estimator][ok, k])
                    time_k = float(np.mean(self.runtimes[estimator][ok, k]))
                else:
                    rmse_k, time_k = float("nan"), float("nan")
                rows.append(ResultRow(self.spec.name, estimator, k, rmse_k, time_k, n_ok))
        return rows

    def per_snapshot_rmse(self, estimator) -> np.ndarray:
        ok = ~self.failed[estimator]
        return np.array([rmse(self.truths[ok, k], self.estimates[estimator][ok, k])
                         for k in range(self.spec.k_snapshots)])

    def average_rmse(self, estimator) -> float:
        return float(np.mean(self.per_snapshot_rmse(estimator)))

    def summary(self) -> dict:
        out = {}
        for estimator in self.spec.estimators:
            ok = ~self.failed[estimator]
            out[estimator] = {
                "avg_rmse_deg": self.average_rmse(estimator),
                "avg_runtime_s": float(np.mean(self.runtimes[estimator][ok])) if ok.any() else float("nan"),
                "trials": int(ok.sum()),
                "failures": self.failures(estimator),
            }
        return out


def run_scenario(spec: ScenarioSpec, n_workers: int = 1) -> ScenarioResult:
    """Run all trials of a scenario, optionally across a process pool."""
    q = spec.q_trials
    if n_workers > 1:
        with ProcessPoolExecutor(max_workers=n_workers) as pool:
            outcomes = list(pool.map(_trial_worker, [(spec, t) for t in range(q)],
                                     chunksize=max(1, q // (4 * n_workers))))
    else:
        outcomes = [run_single_trial(spec, t) for t in range(q)]

    truths = np.stack([o.thetas_true for o in outcomes])
    estimates, runtimes, failed = {}, {}, {}
    for estimator in spec.estimators:
        estimates[estimator] = np.stack([o.angles[estimator] for o in outcomes])
        runtimes[estimator] = np.stack([o.times[estimator] for o in outcomes])
        failed[estimator] = np.array([o.failed[estimator] for o in outcomes])
    return ScenarioResult(spec=spec, truths=truths, estimates=estimates,
                          runtimes=runtimes, failed=failed)


CSV_HEADER = ("scenario", "estimator", "k", "rmse_deg", "runtime_s", "trials")


def emit_results(rows, out_dir) -> dict:
    """Write the results CSV, a summary table, and a standalone plot script."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = {
        "csv": out_dir / "results.csv",
        "summary": out_dir / "summary.txt",
        "plot": out_dir / "plot_results.py",
    }
    with open(paths["csv"], "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_HEADER)
        for row in rows:
            writer.writerow([row.scenario, row.estimator, row.k,
                             f"{row.rmse_deg:.10g}", f"{row.runtime_s:.6g}",
                             row.trials])
    with open(paths["summary"], "w") as fh:
        fh.write(format_summary(rows))
    with open(paths["plot"], "w") as fh:
        fh.write(PLOT_SCRIPT)
    return paths


def format_summary(rows) -> str:
    """Average RMSE / runtime per scenario and estimator, as an aligned table."""
    lines = []
    scenarios = []
    for row in rows:
        if row.scenario not in scenarios:
            scenarios.append(row.scenario)
    for scenario in scenarios:
        lines.append(f"scenario: {scenario}")
        lines.append(f"  {'estimator':<10} {'avg RMSE (deg)':>15} "
                     f"{'avg time/snapshot (s)':>22} {'trials':>7}")
        estimators = []
        for row in rows:
            if row.scenario == scenario and row.estimator not in estimators:
                estimators.append(row.estimator)
        for estimator in estimators:
            sel = [r for r in rows if r.scenario == scenario and r.estimator == estimator]
            avg_rmse = float(np.mean([r.rmse_deg for r in sel]))
            avg_time = float(np.mean([r.runtime_s for r in sel]))
            lines.append(f"  {estimator:<10} {avg_rmse:>15.4f} "
                         f"{avg_time:>22.4f} {sel[0].trials:>7d}")
        lines.append("")
    return "\n".join(lines)


PLOT_SCRIPT = '''#!/usr/bin/env python3
"""Render RMSE-vs-snapshot curves from a benchmark results CSV."""
import csv
import sys
from collections import defaultdict


def parse_csv(path):
    rows = []
    with open(path, newline="") as fh:
        for rec in csv.DictReader(fh):
            rows.append({"scenario": rec["scenario"], "estimator": rec["estimator"],
                         "k": int(rec["k"]), "rmse_deg": float(rec["rmse_deg"]),
                         "runtime_s": float(rec["runtime_s"]),
                         "trials": int(rec["trials"])})
    return rows


def main():
    path = sys.argv[1] if len(sys.argv) > 1 else "results.csv"
    rows = parse_csv(path)
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    curves = defaultdict(lambda: defaultdict(list))
    for row in rows:
        curves[row["scenario"]][row["estimator"]].append((row["k"], row["rmse_deg"]))
    for scenario, series in curves.items():
        fig, ax = plt.subplots(figsize=(7, 4.5))
        for estimator in sorted(series):
            pts = sorted(series[estimator])
            ax.plot([p[0] for p in pts], [p[1] for p in pts],
                    marker="o", markersize=3, label=estimator)
        ax.set_xlabel("time snapshot")
        ax.set_ylabel("RMSE (degrees)")
        ax.set_title(scenario)
        ax.grid(True, alpha=0.4)
        ax.legend()
        out = f"rmse_{scenario}.png"
        fig.savefig(out, dpi=150, bbox_inches="tight")
        plt.close(fig)
        print(f"wrote {out}")


if __name__ == "__main__":
    main()
'''
