"""Multi-trial experiment orchestration and CSV emission.

An experiment runs `trials` independent, deterministically seeded runs per
solver on one system, aggregates the error traces on a shared iteration
grid (stride = record_every; trials that converge early repeat their
terminal value forward), and attaches the matching theory bound per
solver/regime.

Output CSV schema (LF line endings, full-precision decimals):

    iteration,solver,mean_err_sq,median_err_sq,min_err_sq,max_err_sq,bound_value

Determinism contract: the CSV bytes are a pure function of (config, system
files), independent of worker count or scheduling. Wall-clock measurements
for the CPU-time comparison are kept out of the canonical CSV for exactly
this reason.
"""
from __future__ import annotations

import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigurationError
from .linalg import LinearSystem, Regime
from .problems import GenSpec, TomoSpec, gen_gaussian, gen_tomography, load_meta, load_system
from .sampling import spawn_trial_rng, splitmix64
from .solvers import (
    CONVERGENT_PAIRS,
    ConvergenceTrace,
    SolveConfig,
    SolverKind,
    StopMetric,
    run,
)
from .theory import (
    TheoryBound,
    bound_regs,
    bound_rek,
    bound_rk_consistent,
    bound_rk_inconsistent,
)

CSV_HEADER = "iteration,solver,mean_err_sq,median_err_sq,min_err_sq,max_err_sq,bound_value"

_KIND_ORDINAL = {kind: i for i, kind in enumerate(SolverKind)}
_REDRAW_STREAM_BASE = 1 << 32  # generator seed streams, disjoint from solver streams


@dataclass
class ExperimentConfig:
    """Configuration of one multi-trial experiment."""

    system_dir: str | Path
    solvers: list[SolverKind]
    trials: int = 50
    max_iter: int = 100_000
    tol: float = 1e-6
    stop_metric: StopMetric = StopMetric.ERROR_TO_REFERENCE
    base_seed: int = 0
    record_every: int = 1
    redraw_matrix_per_trial: bool = False
    workers: int = 1

    def __post_init__(self):
        if not self.solvers:
            raise ConfigurationError("at least one solver is required")
        if self.trials < 1:
            raise ConfigurationError(f"trials must be >= 1, got {self.trials}")
        if self.workers < 1:
            raise ConfigurationError(f"workers must be >= 1, got {self.workers}")

    def solve_config(self) -> SolveConfig:
        return SolveConfig(
            max_iter=self.max_iter,
            tol=self.tol,
            stop_metric=self.stop_metric,
            record_every=self.record_every,
        )


@dataclass
class AggregateTrace:
    """Aggregated rows (iteration, solver, mean/median/min/max error, bound)."""

    rows: list[tuple[int, SolverKind, float, float, float, float, float]]
    excluded: list[SolverKind] = field(default_factory=list)
    timings: list[tuple[int, SolverKind, float]] = field(default_factory=list)


def _bound_evaluator(system: LinearSystem, kind: SolverKind, tb: TheoryBound | None):
    if tb is None or system.reference is None:
        return lambda t: float("nan")
    ref = system.reference
    ref_sq = float(ref @ ref)
    regime = system.regime
    if kind is SolverKind.RK:
        if regime is Regime.OVER_INCONSISTENT:
            return lambda t: bound_rk_inconsistent(tb, t, ref_sq)
        return lambda t: bound_rk_consistent(tb, t, ref_sq)
    if kind is SolverKind.RGS:
        if regime is Regime.UNDERDETERMINED:
            return lambda t: float("nan")  # wrong-limit pair: no valid envelope
        return lambda t: bound_rk_consistent(tb, t, ref_sq)
    if kind is SolverKind.REK:
        return lambda t: bound_rek(tb, t, ref_sq)
    return lambda t: bound_regs(tb, t, ref_sq)


def _redraw_system(cfg: ExperimentConfig, base: LinearSystem, trial: int) -> LinearSystem:
    meta = load_meta(cfg.system_dir)
    kind = meta.get("kind")
    _, seed = splitmix64((cfg.base_seed + _REDRAW_STREAM_BASE + trial) & 0xFFFFFFFFFFFFFFFF)
    if kind == "gaussian":
        spec = GenSpec(
            m=base.m,
            n=base.n,
            regime=base.regime,
            seed=seed,
            noise_scale=float(meta.get("noise_scale", 1.0)),
        )
        return gen_gaussian(spec)
    if kind == "tomography":
        spec = TomoSpec(
            grid_n=int(meta["grid_n"]), oversample=int(meta["oversample"]), seed=seed
        )
        return gen_tomography(spec)
    raise ConfigurationError(
        "redraw_matrix_per_trial requires generator metadata (kind gaussian|tomography) "
        f"in {Path(cfg.system_dir) / 'meta.txt'}"
    )


def _run_trials(
    cfg: ExperimentConfig,
    system: LinearSystem,
    kind: SolverKind,
    collect_timing: bool,
) -> list[ConvergenceTrace]:
    solve_cfg = cfg.solve_config()

    def one_trial(trial: int) -> ConvergenceTrace:
        sys_t = _redraw_system(cfg, system, trial) if cfg.redraw_matrix_per_trial else system
        stream = trial * len(SolverKind) + _KIND_ORDINAL[kind]
        rng = spawn_trial_rng(cfg.base_seed, stream)
        return run(sys_t, kind, solve_cfg, rng, trial=trial, collect_timing=collect_timing)

    if cfg.workers == 1:
        return [one_trial(t) for t in range(cfg.trials)]
    with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
        return list(pool.map(one_trial, range(cfg.trials)))


def _shared_grid(traces: list[ConvergenceTrace], stride: int) -> list[int]:
    max_final = max(tr.records[-1][0] for tr in traces)
    return list(range(0, max_final - max_final % stride + 1, stride))


def _values_on_grid(trace: ConvergenceTrace, grid: list[int], column: int) -> list[float]:
    by_iter = {rec[0]: rec[column] for rec in trace.records}
    terminal_iter, terminal = trace.records[-1][0], trace.records[-1][column]
    out = []
    for g in grid:
        if g <= terminal_iter and g in by_iter:
            out.append(by_iter[g])
        else:
            out.append(terminal)  # converged early: repeat terminal value forward
    return out


def run_experiment(
    cfg: ExperimentConfig,
    system: LinearSystem | None = None,
    collect_timing: bool = False,
) -> AggregateTrace:
    """Execute trials x solvers runs and aggregate on the shared grid."""
    if system is None:
        system = load_system(cfg.system_dir)
    if cfg.stop_metric is StopMetric.ERROR_TO_REFERENCE and system.reference is None:
        from .solvers import _pairs_help

        raise ConfigurationError(
            "system has no reference solution for error-based stopping; "
            f"convergent solver/regime pairs: {_pairs_help()}"
        )
    try:
        tb = TheoryBound.from_system(system)
    except ConfigurationError:
        tb = None

    rows = []
    timing_rows = []
    for kind in cfg.solvers:
        traces = _run_trials(cfg, system, kind, collect_timing)
        grid = _shared_grid(traces, cfg.record_every)
        errs = np.array([_values_on_grid(tr, grid, 1) for tr in traces])  # (trials, grid)
        bound_fn = _bound_evaluator(system, kind, tb)
        medians = np.median(errs, axis=0)
        mins = errs.min(axis=0)
        maxs = errs.max(axis=0)
        # clamp away 1-ulp float drift so the band invariant min<=mean<=max is exact
        means = np.clip(errs.mean(axis=0), mins, maxs)
        for gi, g in enumerate(grid):
            rows.append(
                (
                    g,
                    kind,
                    float(means[gi]),
                    float(medians[gi]),
                    float(mins[gi]),
                    float(maxs[gi]),
                    float(bound_fn(g)),
                )
            )
        if collect_timing:
            cumulative = []
            for tr in traces:
                cum, acc = {}, 0.0
                for it, sec in tr.block_seconds:
                    acc += sec
                    cum[it] = acc
                cum_trace = ConvergenceTrace(
                    tr.solver,
                    tr.trial,
                    tr.converged,
                    tr.final_iteration,
                    records=[(it, sec, 0.0) for it, sec in sorted(cum.items())],
                )
                cumulative.append(_values_on_grid(cum_trace, grid, 1))
            mean_cum = np.array(cumulative).mean(axis=0)
            timing_rows.extend((g, kind, float(mean_cum[gi])) for gi, g in enumerate(grid))
    return AggregateTrace(rows=rows, timings=timing_rows)


def compare_solvers(
    cfg: ExperimentConfig, system: LinearSystem | None = None
) -> AggregateTrace:
    """Run several solvers on one shared system, with wall-clock tracking.

    Solver/regime pairs that do not converge to the regime's reference are
    excluded up front when stopping on error-to-reference (they would spin
    to max_iter with a wrong limit); the exclusions are reported on the
    returned trace.
    """
    if system is None:
        system = load_system(cfg.system_dir)
    kept, excluded = [], []
    for kind in cfg.solvers:
        if (
            cfg.stop_metric is StopMetric.ERROR_TO_REFERENCE
            and (kind, system.regime) not in CONVERGENT_PAIRS
        ):
            excluded.append(kind)
        else:
            kept.append(kind)
    if not kept:
        from .solvers import _pairs_help

        raise ConfigurationError(
            f"no requested solver converges on a {system.regime.value} system; "
            f"convergent pairs: {_pairs_help()}"
        )
    sub_cfg = ExperimentConfig(
        system_dir=cfg.system_dir,
        solvers=kept,
        trials=cfg.trials,
        max_iter=cfg.max_iter,
        tol=cfg.tol,
        stop_metric=cfg.stop_metric,
        base_seed=cfg.base_seed,
        record_every=cfg.record_every,
        redraw_matrix_per_trial=cfg.redraw_matrix_per_trial,
        workers=cfg.workers,
    )
    trace = run_experiment(sub_cfg, system=system, collect_timing=True)
    trace.excluded = excluded
    return trace


def emit_csv(trace: AggregateTrace, target) -> None:
    """Write the aggregate trace; target is a path or an open text file."""
    if hasattr(target, "write"):
        _write_csv(trace, target)
        return
    with open(target, "w", newline="\n") as fh:
        _write_csv(trace, fh)


def _write_csv(trace: AggregateTrace, fh) -> None:
    fh.write(CSV_HEADER + "\n")
    for it, kind, mean, median, mn, mx, bound in trace.rows:
        fh.write(
            f"{it},{kind.name},{mean!r},{median!r},{mn!r},{mx!r},{bound!r}\n"
        )


def emit_timings_csv(trace: AggregateTrace, target) -> None:
    """Write the wall-clock companion table (iteration,solver,mean_cum_seconds)."""
    if hasattr(target, "write"):
        fh = target
        fh.write("iteration,solver,mean_cum_seconds\n")
        for it, kind, sec in trace.timings:
            fh.write(f"{it},{kind.name},{sec!r}\n")
        return
    with open(target, "w", newline="\n") as fh:
        emit_timings_csv(trace, fh)


def print_timing_summary(trace: AggregateTrace, stream=None) -> None:
    stream = stream or sys.stderr
    totals: dict[SolverKind, float] = {}
    for it, kind, sec in trace.timings:
        totals[kind] = max(totals.get(kind, 0.0), sec)
    for kind, sec in totals.items():
        print(f"{kind.name}: ~{sec:.3f}s mean wall-clock per trial", file=stream)
    if trace.excluded:
        names = ", ".join(k.name for k in trace.excluded)
        print(f"excluded (wrong-limit pairs): {names}", file=stream)

