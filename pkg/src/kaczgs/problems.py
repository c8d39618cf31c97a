"""Reproducible problem generators and system directory serialization.

Three Gaussian regimes (over-consistent, over-inconsistent, underdetermined)
plus a self-contained tomography-style generator. Every generated system
carries its regime reference solution, recomputed through the direct
oracles in :mod:`kaczgs.linalg`, so iterative solvers can be measured
against it.

Serialized systems are plain text, one directory per system:

  X.txt         "m n" then m rows of n space-separated values
  y.txt         "m" then m values, one per line
  reference.txt optional, vector format
  residual.txt  optional, vector format (least-squares residual)
  meta.txt      "key value" lines: regime, seed, and generator parameters

Values are written with full round-trip precision (repr), so save/load is
value-exact.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .errors import ConfigurationError, NumericalError, ParseError, SingularMatrixError
from .linalg import (
    DenseMatrix,
    LinearSystem,
    Regime,
    least_norm_ref,
    least_squares_ref,
    numeric_rank,
)
from .sampling import Prng

GEN_MAX_ATTEMPTS = 5


@dataclass(frozen=True)
class GenSpec:
    """Parameters for one Gaussian system draw."""

    m: int
    n: int
    regime: Regime
    seed: int
    noise_scale: float = 1.0

    def __post_init__(self):
        if self.m < 1 or self.n < 1:
            raise ConfigurationError(f"dimensions must be positive, got {self.m}x{self.n}")
        if self.regime in (Regime.OVER_CONSISTENT, Regime.OVER_INCONSISTENT):
            if self.m <= self.n:
                raise ConfigurationError(
                    f"{self.regime.value} generation requires m > n, got {self.m}x{self.n}"
                )
        elif self.m >= self.n:
            raise ConfigurationError(
                f"underdetermined generation requires m < n, got {self.m}x{self.n}"
            )
        if self.noise_scale < 0:
            raise ConfigurationError(f"noise_scale must be nonnegative, got {self.noise_scale}")
        if self.regime is Regime.OVER_INCONSISTENT and self.noise_scale == 0:
            raise ConfigurationError("inconsistent generation requires noise_scale > 0")


@dataclass(frozen=True)
class TomoSpec:
    """Parameters for one tomography-style system: N x N grid, d-fold line set."""

    grid_n: int
    oversample: int
    seed: int

    def __post_init__(self):
        if self.grid_n < 2:
            raise ConfigurationError(f"grid_n must be >= 2, got {self.grid_n}")
        if self.oversample < 2:
            raise ConfigurationError(
                f"oversample must be >= 2 so the system is underdetermined, "
                f"got {self.oversample}"
            )


def _gaussian_vector(rng: Prng, k: int) -> np.ndarray:
    return np.array([rng.gaussian() for _ in range(k)])


def gen_gaussian(spec: GenSpec) -> LinearSystem:
    """Draw an i.i.d. standard-normal system for the requested regime.

    Draw order (row-major X, then the solution draw, then the noise draw for
    the inconsistent regime) is fixed so a spec reproduces byte-identical
    systems. Rank-degenerate draws are retried with seed+1, seed+2, ... up
    to GEN_MAX_ATTEMPTS before failing.
    """
    last_error = None
    for attempt in range(GEN_MAX_ATTEMPTS):
        seed = spec.seed + attempt
        rng = Prng(seed)
        X = DenseMatrix(_gaussian_vector(rng, spec.m * spec.n).reshape(spec.m, spec.n))
        if numeric_rank(X) < min(spec.m, spec.n):
            last_error = NumericalError(f"rank-degenerate draw at seed {seed}")
            continue
        beta = _gaussian_vector(rng, spec.n)
        try:
            return _finish_gaussian(spec, X, beta, rng, seed)
        except SingularMatrixError as exc:
            last_error = exc
            continue
    raise NumericalError(
        f"gen_gaussian failed after {GEN_MAX_ATTEMPTS} attempts "
        f"(seeds {spec.seed}..{spec.seed + GEN_MAX_ATTEMPTS - 1}): {last_error}"
    )


def _finish_gaussian(
    spec: GenSpec, X: DenseMatrix, beta: np.ndarray, rng: Prng, seed: int
) -> LinearSystem:
    if spec.regime is Regime.OVER_CONSISTENT:
        y = X.data @ beta
        return LinearSystem(X, y, spec.regime, reference=beta, seed=seed)

    if spec.regime is Regime.UNDERDETERMINED:
        y = X.data @ beta
        provisional = LinearSystem(X, y, spec.regime, seed=seed)
        ref = least_norm_ref(provisional)  # the drawn beta is NOT minimum-norm
        return replace(provisional, reference=ref)

    # over-inconsistent: residual is a scaled projection onto null(X^T)
    w = _gaussian_vector(rng, spec.m)
    fit = LinearSystem(X, w, Regime.OVER_CONSISTENT, seed=seed)
    w_col = X.data @ least_squares_ref(fit)
    r = spec.noise_scale * (w - w_col)
    rnorm = float(np.linalg.norm(r))
    if rnorm <= 1e-12 * float(np.linalg.norm(w)):
        raise SingularMatrixError("noise draw landed in the column space")
    y = X.data @ beta + r
    provisional = LinearSystem(X, y, spec.regime, seed=seed)
    ref = least_squares_ref(provisional)
    return replace(provisional, reference=ref, residual_ref=r)


# ---------------------------------------------------------------------------
# Tomography-style generator
#
# Cells of an N x N grid are the m = N^2 equations; the n = d*N^2 unknowns
# are random lines (chords) across the grid, oversampled d-fold. Entry
# (cell, line) is the length of the line's intersection with that cell
# (Siddon-style parametric tracing), so every entry is nonnegative and each
# line touches at most 2N-1 cells. The right-hand side comes from weighting
# the lines by a smooth nonnegative phantom (three seeded Gaussian bumps
# evaluated at each line's midpoint), keeping y elementwise nonnegative.


def _perimeter_point(u: float, n: int) -> tuple[float, float]:
    side, frac = divmod(u, n)
    side = int(side) % 4
    if side == 0:
        return frac, 0.0
    if side == 1:
        return float(n), frac
    if side == 2:
        return n - frac, float(n)
    return 0.0, n - frac


def _trace_line(p0, p1, n: int) -> list[tuple[int, float]]:
    """Cells crossed by segment p0->p1 inside [0,n]^2 with intersection lengths."""
    x0, y0 = p0
    x1, y1 = p1
    dx, dy = x1 - x0, y1 - y0
    length = math.hypot(dx, dy)
    if length == 0.0:
        return []
    ts = {0.0, 1.0}
    if dx != 0.0:
        for k in range(n + 1):
            t = (k - x0) / dx
            if 0.0 < t < 1.0:
                ts.add(t)
    if dy != 0.0:
        for k in range(n + 1):
            t = (k - y0) / dy
            if 0.0 < t < 1.0:
                ts.add(t)
    knots = sorted(ts)
    out = []
    for a, b in zip(knots[:-1], knots[1:]):
        if b <= a:
            continue
        tm = 0.5 * (a + b)
        ix = int(math.floor(x0 + tm * dx))
        iy = int(math.floor(y0 + tm * dy))
        if 0 <= ix < n and 0 <= iy < n:
            out.append((iy * n + ix, (b - a) * length))
    return out


def gen_tomography(spec: TomoSpec) -> LinearSystem:
    """Underdetermined N^2 x (d N^2) line-sampling system with least-norm reference.

    Line endpoints are drawn uniformly on the grid boundary; draws landing
    on a single side (a degenerate chord along the boundary) are rejected
    and redrawn. Seeds whose line set fails the full-row-rank requirement of
    the least-norm oracle are retried with seed+1, ... like gen_gaussian.
    """
    last_error = None
    for attempt in range(GEN_MAX_ATTEMPTS):
        seed = spec.seed + attempt
        try:
            return _build_tomography(spec, seed)
        except SingularMatrixError as exc:
            last_error = exc
    raise NumericalError(
        f"gen_tomography failed after {GEN_MAX_ATTEMPTS} attempts: {last_error}"
    )


def _build_tomography(spec: TomoSpec, seed: int) -> LinearSystem:
    n_grid = spec.grid_n
    m = n_grid * n_grid
    n = spec.oversample * m
    rng = Prng(seed)
    perimeter = 4.0 * n_grid

    data = np.zeros((m, n))
    midpoints = np.empty((n, 2))
    for j in range(n):
        while True:
            u0 = rng.uniform() * perimeter
            u1 = rng.uniform() * perimeter
            if int(u0 // n_grid) % 4 == int(u1 // n_grid) % 4:
                continue  # both endpoints on one side: degenerate chord
            p0 = _perimeter_point(u0, n_grid)
            p1 = _perimeter_point(u1, n_grid)
            cells = _trace_line(p0, p1, n_grid)
            if cells:
                break
        for cell, seg in cells:
            data[cell, j] += seg
        midpoints[j, 0] = 0.5 * (p0[0] + p1[0])
        midpoints[j, 1] = 0.5 * (p0[1] + p1[1])

    # smooth nonnegative phantom: three seeded Gaussian bumps over the grid
    # domain, evaluated at each line's midpoint
    beta = np.zeros(n)
    for _ in range(3):
        cx = n_grid * (0.2 + 0.6 * rng.uniform())
        cy = n_grid * (0.2 + 0.6 * rng.uniform())
        width = n_grid * (0.125 + 0.125 * rng.uniform())
        amp = 0.5 + rng.uniform()
        d_sq = (midpoints[:, 0] - cx) ** 2 + (midpoints[:, 1] - cy) ** 2
        beta += amp * np.exp(-d_sq / (2.0 * width * width))

    X = DenseMatrix(data)
    y = X.data @ beta
    provisional = LinearSystem(X, y, Regime.UNDERDETERMINED, seed=seed)
    ref = least_norm_ref(provisional)
    return replace(provisional, reference=ref)


# ---------------------------------------------------------------------------
# Text serialization

def write_matrix(path, matrix) -> None:
    data = matrix.data if isinstance(matrix, DenseMatrix) else np.asarray(matrix, dtype=float)
    with open(path, "w", newline="\n") as fh:
        fh.write(f"{data.shape[0]} {data.shape[1]}\n")
        for row in data:
            fh.write(" ".join(repr(float(v)) for v in row))
            fh.write("\n")


def write_vector(path, vec) -> None:
    vec = np.asarray(vec, dtype=float)
    with open(path, "w", newline="\n") as fh:
        fh.write(f"{vec.shape[0]}\n")
        for v in vec:
            fh.write(repr(float(v)))
            fh.write("\n")


def _parse_floats(path, lineno, line, expected) -> list[float]:
    parts = line.split()
    if len(parts) != expected:
        raise ParseError(path, lineno, f"expected {expected} values, found {len(parts)}")
    try:
        return [float(p) for p in parts]
    except ValueError as exc:
        raise ParseError(path, lineno, f"invalid number: {exc}") from None


def read_matrix(path) -> DenseMatrix:
    with open(path) as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise ParseError(path, 1, "empty matrix file")
    header = lines[0].split()
    if len(header) != 2:
        raise ParseError(path, 1, f"expected header 'm n', got {lines[0]!r}")
    try:
        m, n = int(header[0]), int(header[1])
    except ValueError:
        raise ParseError(path, 1, f"non-integer dimensions in header {lines[0]!r}") from None
    if len(lines) < m + 1:
        raise ParseError(path, len(lines), f"expected {m} matrix rows, found {len(lines) - 1}")
    rows = [_parse_floats(path, i + 2, lines[i + 1], n) for i in range(m)]
    return DenseMatrix(rows)


def read_vector(path) -> np.ndarray:
    with open(path) as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise ParseError(path, 1, "empty vector file")
    try:
        m = int(lines[0].strip())
    except ValueError:
        raise ParseError(path, 1, f"expected vector length, got {lines[0]!r}") from None
    if len(lines) < m + 1:
        raise ParseError(path, len(lines), f"expected {m} values, found {len(lines) - 1}")
    return np.array([_parse_floats(path, i + 2, lines[i + 1], 1)[0] for i in range(m)])


_REGIME_NAMES = {r.value: r for r in Regime}


def save_system(system: LinearSystem, directory, extra_meta: dict | None = None) -> None:
    """Write a system directory (X.txt, y.txt, optional refs, meta.txt)."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    write_matrix(directory / "X.txt", system.X)
    write_vector(directory / "y.txt", system.y)
    if system.reference is not None:
        write_vector(directory / "reference.txt", system.reference)
    if system.residual_ref is not None:
        write_vector(directory / "residual.txt", system.residual_ref)
    meta = {"regime": system.regime.value, "seed": system.seed}
    if extra_meta:
        meta.update(extra_meta)
    with open(directory / "meta.txt", "w", newline="\n") as fh:
        for key, value in meta.items():
            fh.write(f"{key} {'none' if value is None else value}\n")


def load_meta(directory) -> dict:
    path = Path(directory) / "meta.txt"
    if not path.exists():
        raise ConfigurationError(f"missing system file: {path}")
    meta = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            parts = line.split(maxsplit=1)
            if len(parts) != 2:
                raise ParseError(path, lineno, f"expected 'key value', got {line!r}")
            meta[parts[0]] = parts[1]
    if "regime" not in meta:
        raise ParseError(path, 1, "meta.txt is missing the regime entry")
    if meta["regime"] not in _REGIME_NAMES:
        raise ParseError(path, 1, f"unknown regime {meta['regime']!r}")
    return meta


def load_system(directory) -> LinearSystem:
    """Reconstruct a LinearSystem from a directory; invariants are revalidated."""
    directory = Path(directory)
    for name in ("X.txt", "y.txt"):
        if not (directory / name).exists():
            raise ConfigurationError(f"missing system file: {directory / name}")
    meta = load_meta(directory)
    X = read_matrix(directory / "X.txt")
    y = read_vector(directory / "y.txt")
    reference = None
    residual = None
    if (directory / "reference.txt").exists():
        reference = read_vector(directory / "reference.txt")
    if (directory / "residual.txt").exists():
        residual = read_vector(directory / "residual.txt")
    seed_text = meta.get("seed", "none")
    seed = None if seed_text == "none" else int(seed_text)
    return LinearSystem(
        X,
        y,
        _REGIME_NAMES[meta["regime"]],
        reference=reference,
        residual_ref=residual,
        seed=seed,
    )
