"""The four randomized iterative kernels and a generic run driver.

Each solver advances a mutable :class:`SolverState` one randomized update at
a time:

* RK   — project the iterate onto the hyperplane of one sampled row.
* RGS  — exactly minimize the least-squares objective along one sampled
         coordinate (randomized coordinate descent).
* REK  — RK plus a column-projection sequence z_t (started at y) that strips
         the component of y orthogonal to the range of X, unlocking
         convergence to the least-squares solution.
* REGS — RGS plus a row-projector sequence z_t (started at 0) that tracks
         the component of the iterate orthogonal to the row span; the
         reported estimate is beta_t - z_t, which converges to the
         least-norm solution.

One combined update (row draw + column draw for the extended methods)
counts as one iteration.

A note on the extended Gauss-Seidel coordinate update: the per-step
increment along coordinate j is the coordinate least-squares correction
X_(j)^T (y - X beta) / ||X_(j)||^2, identical to the plain RGS update, so
driving both kernels with the same column draws produces identical beta
sequences; only the auxiliary z sequence differs.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import ConfigurationError
from .linalg import LinearSystem, Regime, apply_row_projector
from .sampling import Prng, col_distribution, row_distribution

#: maintained residuals are recomputed from scratch this often to cap drift
RESIDUAL_REFRESH_EVERY = 1000


class SolverKind(Enum):
    RK = "rk"
    RGS = "rgs"
    REK = "rek"
    REGS = "regs"


class StopMetric(Enum):
    ERROR_TO_REFERENCE = "error"
    RESIDUAL_NORM = "residual"


#: (solver, regime) pairs that converge to the regime's reference solution
CONVERGENT_PAIRS = {
    (SolverKind.RK, Regime.OVER_CONSISTENT),
    (SolverKind.RK, Regime.UNDERDETERMINED),
    (SolverKind.RGS, Regime.OVER_CONSISTENT),
    (SolverKind.RGS, Regime.OVER_INCONSISTENT),
    (SolverKind.REK, Regime.OVER_CONSISTENT),
    (SolverKind.REK, Regime.OVER_INCONSISTENT),
    (SolverKind.REK, Regime.UNDERDETERMINED),
    (SolverKind.REGS, Regime.OVER_CONSISTENT),
    (SolverKind.REGS, Regime.OVER_INCONSISTENT),
    (SolverKind.REGS, Regime.UNDERDETERMINED),
}


@dataclass
class SolverState:
    """Mutable per-run state; single-owner, never shared across threads.

    ``residual`` mirrors y - X beta. RGS/REGS maintain it incrementally
    (refreshed from scratch every RESIDUAL_REFRESH_EVERY steps); RK/REK
    leave it stale between observation points and the driver resynchronizes
    it before any read. ``last_row``/``last_col`` record the indices drawn
    by the most recent step, for invariant checking.
    """

    beta: np.ndarray
    residual: np.ndarray
    iteration: int = 0
    z: np.ndarray | None = None
    last_row: int | None = None
    last_col: int | None = None


@dataclass(frozen=True)
class SolveConfig:
    """Stopping rule and history stride for a single solver run.

    ``tol`` compares against squared quantities: squared error to the
    reference, or squared residual norm.
    """

    max_iter: int
    tol: float = 1e-6
    stop_metric: StopMetric = StopMetric.ERROR_TO_REFERENCE
    record_every: int = 1

    def __post_init__(self):
        if self.max_iter < 1:
            raise ConfigurationError(f"max_iter must be >= 1, got {self.max_iter}")
        if not (self.tol > 0):
            raise ConfigurationError(f"tol must be positive, got {self.tol}")
        if self.record_every < 1:
            raise ConfigurationError(f"record_every must be >= 1, got {self.record_every}")


@dataclass
class ConvergenceTrace:
    """Per-iteration history of one run: (iteration, error_sq, residual_sq)."""

    solver: SolverKind
    trial: int
    converged: bool
    final_iteration: int
    records: list[tuple[int, float, float]] = field(default_factory=list)
    block_seconds: list[tuple[int, float]] | None = None


class _Solver:
    """Shared setup: sampling distributions are built once per system."""

    kind: SolverKind
    needs_rows = True
    needs_cols = False

    def __init__(self, system: LinearSystem):
        self.system = system
        X = system.X
        self._rows_arr = X.data
        self._y = system.y
        self._row_nsq = X.row_norms_sq
        self._col_nsq = X.col_norms_sq
        self._row_dist = row_distribution(X) if self.needs_rows else None
        self._col_dist = col_distribution(X) if self.needs_cols else None
        # contiguous copy of the columns; column dots dominate RGS-family cost
        self._cols_arr = np.ascontiguousarray(X.data.T) if self.needs_cols else None

    def init_state(self) -> SolverState:
        n = self.system.n
        return SolverState(beta=np.zeros(n), residual=self._y.copy())

    def estimate(self, state: SolverState) -> np.ndarray:
        return state.beta

    def maintains_residual(self) -> bool:
        return False

    def sync_residual(self, state: SolverState) -> None:
        """Make state.residual equal y - X beta exactly (up to one matvec)."""
        state.residual = self._y - self._rows_arr @ state.beta

    def step(self, state: SolverState, rng: Prng) -> SolverState:
        raise NotImplementedError


class RandomizedKaczmarz(_Solver):
    kind = SolverKind.RK

    def step(self, state: SolverState, rng: Prng) -> SolverState:
        i = self._row_dist.sample(rng)
        xi = self._rows_arr[i]
        scale = (self._y[i] - xi @ state.beta) / self._row_nsq[i]
        state.beta += scale * xi
        state.iteration += 1
        state.last_row = i
        state.last_col = None
        return state


class RandomizedGaussSeidel(_Solver):
    kind = SolverKind.RGS
    needs_rows = False
    needs_cols = True

    def maintains_residual(self) -> bool:
        return True

    def sync_residual(self, state: SolverState) -> None:
        if state.iteration % RESIDUAL_REFRESH_EVERY == 0:
            state.residual = self._y - self._rows_arr @ state.beta

    def step(self, state: SolverState, rng: Prng) -> SolverState:
        j = self._col_dist.sample(rng)
        xj = self._cols_arr[j]
        scale = (xj @ state.residual) / self._col_nsq[j]
        state.beta[j] += scale
        state.residual -= scale * xj
        state.iteration += 1
        state.last_col = j
        state.last_row = None
        self.sync_residual(state)
        return state


class ExtendedKaczmarz(_Solver):
    kind = SolverKind.REK
    needs_rows = True
    needs_cols = True

    def init_state(self) -> SolverState:
        state = super().init_state()
        state.z = self._y.copy()
        return state

    def step(self, state: SolverState, rng: Prng) -> SolverState:
        i = self._row_dist.sample(rng)
        j = self._col_dist.sample(rng)
        xj = self._cols_arr[j]
        z = state.z
        z -= ((xj @ z) / self._col_nsq[j]) * xj
        xi = self._rows_arr[i]
        scale = (self._y[i] - z[i] - xi @ state.beta) / self._row_nsq[i]
        state.beta += scale * xi
        state.iteration += 1
        state.last_row = i
        state.last_col = j
        return state


class ExtendedGaussSeidel(_Solver):
    kind = SolverKind.REGS
    needs_rows = True
    needs_cols = True

    def init_state(self) -> SolverState:
        state = super().init_state()
        state.z = np.zeros(self.system.n)
        return state

    def estimate(self, state: SolverState) -> np.ndarray:
        return state.beta - state.z

    def maintains_residual(self) -> bool:
        return True

    def sync_residual(self, state: SolverState) -> None:
        if state.iteration % RESIDUAL_REFRESH_EVERY == 0:
            state.residual = self._y - self._rows_arr @ state.beta

    def step(self, state: SolverState, rng: Prng) -> SolverState:
        j = self._col_dist.sample(rng)
        i = self._row_dist.sample(rng)
        xj = self._cols_arr[j]
        scale = (xj @ state.residual) / self._col_nsq[j]
        state.beta[j] += scale
        state.residual -= scale * xj
        state.z[j] += scale
        state.z = apply_row_projector(self.system.X, i, state.z)
        state.iteration += 1
        state.last_row = i
        state.last_col = j
        self.sync_residual(state)
        return state


_SOLVER_CLASSES = {
    SolverKind.RK: RandomizedKaczmarz,
    SolverKind.RGS: RandomizedGaussSeidel,
    SolverKind.REK: ExtendedKaczmarz,
    SolverKind.REGS: ExtendedGaussSeidel,
}


def make_solver(kind: SolverKind, system: LinearSystem) -> _Solver:
    return _SOLVER_CLASSES[kind](system)


def _pairs_help() -> str:
    lines = []
    for kind in SolverKind:
        regimes = [r.value for r in Regime if (kind, r) in CONVERGENT_PAIRS]
        lines.append(f"{kind.name}: {', '.join(regimes)}")
    return "; ".join(lines)


def run(
    system: LinearSystem,
    kind: SolverKind,
    config: SolveConfig,
    rng: Prng,
    trial: int = 0,
    collect_timing: bool = False,
) -> ConvergenceTrace:
    """Iterate one solver until the stop metric falls below tol or max_iter.

    Records (iteration, error_sq, residual_sq) at iteration 0, every
    record_every iterations, and at termination. error_sq measures the
    solver's reported estimate (beta, or beta - z for REGS) against the
    system reference; it is NaN when no reference is available under
    residual-norm stopping.
    """
    solver = make_solver(kind, system)
    ref = system.reference
    if config.stop_metric is StopMetric.ERROR_TO_REFERENCE and ref is None:
        raise ConfigurationError(
            "stop metric error-to-reference requires a reference solution; "
            f"convergent solver/regime pairs: {_pairs_help()}"
        )

    state = solver.init_state()
    records: list[tuple[int, float, float]] = []
    block_seconds: list[tuple[int, float]] | None = [] if collect_timing else None
    clock = time.perf_counter() if collect_timing else 0.0

    def error_sq() -> float:
        if ref is None:
            return float("nan")
        diff = solver.estimate(state) - ref
        return float(diff @ diff)

    def residual_sq() -> float:
        solver.sync_residual(state)
        r = state.residual
        return float(r @ r)

    def record(it: int, err: float, res: float):
        nonlocal clock
        records.append((it, err, res))
        if block_seconds is not None:
            now = time.perf_counter()
            block_seconds.append((it, now - clock))
            clock = now

    err = error_sq()
    res = residual_sq()
    record(0, err, res)
    metric = err if config.stop_metric is StopMetric.ERROR_TO_REFERENCE else res
    if metric < config.tol:
        return ConvergenceTrace(kind, trial, True, 0, records, block_seconds)

    on_error = config.stop_metric is StopMetric.ERROR_TO_REFERENCE
    maintained = solver.maintains_residual()
    converged = False
    for t in range(1, config.max_iter + 1):
        solver.step(state, rng)
        if on_error:
            err = error_sq()
            metric = err
        else:
            if maintained:
                r = state.residual
                res = float(r @ r)
            else:
                res = residual_sq()
            metric = res
        hit = metric < config.tol
        if hit or t % config.record_every == 0 or t == config.max_iter:
            if on_error:
                res = residual_sq()
            elif ref is not None:
                err = error_sq()
            record(t, err, res)
        if hit:
            converged = True
            break

    return ConvergenceTrace(kind, trial, converged, state.iteration, records, block_seconds)
