"""Dense real matrices, linear systems, and direct reference solutions.

Everything here is deliberately boring: row-major float64 storage with
cached norms, a symmetric positive-definite (Cholesky) solve for the Gram
systems behind the least-squares / least-norm references, and a cyclic
Jacobi eigensolver for extreme singular values. Iterative solvers are
validated against these direct routes.

All types are immutable after construction and safe to share across
threads; the functions are pure.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import ConfigurationError, NumericalError, SingularMatrixError

#: eigenvalues below RANK_RTOL * lambda_max count as zero (numeric rank)
RANK_RTOL = 1e-10

#: Jacobi sweep convergence: off-diagonal Frobenius norm <= JACOBI_RTOL * ||S||_F
JACOBI_RTOL = 1e-14
JACOBI_MAX_SWEEPS = 100


class Regime(Enum):
    """Shape/consistency class of a linear system."""

    OVER_CONSISTENT = "over-consistent"
    OVER_INCONSISTENT = "over-inconsistent"
    UNDERDETERMINED = "underdetermined"


class DenseMatrix:
    """Row-major dense real matrix with cached row/column/Frobenius norms.

    The backing array is copied on construction and marked read-only, so the
    cached squared norms stay valid for the object's lifetime.
    """

    __slots__ = ("data", "rows", "cols", "row_norms_sq", "col_norms_sq", "frob_sq")

    def __init__(self, data):
        arr = np.array(data, dtype=float)
        if arr.ndim != 2:
            raise ConfigurationError(f"matrix must be 2-D, got shape {arr.shape}")
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ConfigurationError(f"matrix dimensions must be positive, got {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ConfigurationError("matrix entries must be finite")
        arr.setflags(write=False)
        self.data = arr
        self.rows, self.cols = arr.shape
        sq = arr * arr
        row_nsq = sq.sum(axis=1)
        col_nsq = sq.sum(axis=0)
        row_nsq.setflags(write=False)
        col_nsq.setflags(write=False)
        self.row_norms_sq = row_nsq
        self.col_norms_sq = col_nsq
        self.frob_sq = float(row_nsq.sum())

    def row(self, i: int) -> np.ndarray:
        return self.data[i]

    def col(self, j: int) -> np.ndarray:
        return self.data[:, j]

    def __repr__(self):
        return f"DenseMatrix({self.rows}x{self.cols}, frob_sq={self.frob_sq:.6g})"


def matvec(matrix: DenseMatrix, v) -> np.ndarray:
    """Matrix-vector product X @ v; v must have length n."""
    v = np.asarray(v, dtype=float)
    if v.shape != (matrix.cols,):
        raise ConfigurationError(
            f"matvec dimension mismatch: matrix is {matrix.rows}x{matrix.cols}, "
            f"vector has shape {v.shape}"
        )
    return matrix.data @ v


def rmatvec(matrix: DenseMatrix, v) -> np.ndarray:
    """Transpose product X^T @ v; v must have length m."""
    v = np.asarray(v, dtype=float)
    if v.shape != (matrix.rows,):
        raise ConfigurationError(
            f"rmatvec dimension mismatch: matrix is {matrix.rows}x{matrix.cols}, "
            f"vector has shape {v.shape}"
        )
    return matrix.data.T @ v


def apply_row_projector(matrix: DenseMatrix, i: int, w) -> np.ndarray:
    """Apply P_i = I - (X^i)^T X^i / ||X^i||^2 to w, in O(n) without forming P_i."""
    nsq = float(matrix.row_norms_sq[i])
    if nsq <= 0.0:
        raise ConfigurationError(f"cannot project onto zero row {i}")
    xi = matrix.data[i]
    w = np.asarray(w, dtype=float)
    return w - ((xi @ w) / nsq) * xi


# ---------------------------------------------------------------------------
# Linear systems

def _as_readonly_vector(v, length, name):
    arr = np.array(v, dtype=float)
    if arr.shape != (length,):
        raise ConfigurationError(f"{name} must have shape ({length},), got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ConfigurationError(f"{name} entries must be finite")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class LinearSystem:
    """A system X beta = y with its regime tag and optional reference solution.

    ``reference`` holds the regime's target: the unique solution
    (over-consistent), the least-squares solution (over-inconsistent), or the
    least-norm solution (underdetermined). ``residual_ref`` holds
    r = y - X beta_LS for inconsistent systems. Construction validates the
    regime/shape pairing and, when references are present, their defining
    identities.
    """

    X: DenseMatrix
    y: np.ndarray
    regime: Regime
    reference: np.ndarray | None = None
    residual_ref: np.ndarray | None = None
    seed: int | None = None  # generator provenance, if known

    def __post_init__(self):
        object.__setattr__(self, "y", _as_readonly_vector(self.y, self.X.rows, "y"))
        m, n = self.X.rows, self.X.cols
        if self.regime in (Regime.OVER_CONSISTENT, Regime.OVER_INCONSISTENT):
            if m < n:
                raise ConfigurationError(
                    f"regime {self.regime.value} requires m >= n, got {m}x{n}"
                )
        elif m > n:
            raise ConfigurationError(f"regime underdetermined requires m <= n, got {m}x{n}")
        if self.reference is not None:
            ref = _as_readonly_vector(self.reference, n, "reference")
            object.__setattr__(self, "reference", ref)
        if self.residual_ref is not None:
            r = _as_readonly_vector(self.residual_ref, m, "residual_ref")
            object.__setattr__(self, "residual_ref", r)
        self._check_reference_identities()

    def _check_reference_identities(self):
        ynorm = float(np.linalg.norm(self.y))
        if self.regime is Regime.OVER_INCONSISTENT and self.residual_ref is not None:
            r = self.residual_ref
            lhs = float(np.linalg.norm(self.X.data.T @ r))
            bound = 1e-8 * math.sqrt(self.X.frob_sq) * float(np.linalg.norm(r))
            if lhs > bound:
                raise ConfigurationError(
                    f"residual_ref is not orthogonal to the column space: "
                    f"||X^T r|| = {lhs:.3e} exceeds {bound:.3e}"
                )
        if self.reference is not None and self.regime is not Regime.OVER_INCONSISTENT:
            gap = float(np.linalg.norm(self.X.data @ self.reference - self.y))
            if gap > 1e-8 * max(ynorm, 1e-300):
                raise ConfigurationError(
                    f"reference does not solve the system: ||X ref - y|| = {gap:.3e} "
                    f"exceeds 1e-8 * ||y|| = {1e-8 * ynorm:.3e}"
                )

    @property
    def m(self) -> int:
        return self.X.rows

    @property
    def n(self) -> int:
        return self.X.cols

    def residual_of(self, beta) -> np.ndarray:
        """Fresh residual y - X beta."""
        return self.y - self.X.data @ np.asarray(beta, dtype=float)


# ---------------------------------------------------------------------------
# Symmetric positive-definite solve (Gram systems)

def cholesky_factor(gram: np.ndarray, rtol: float = RANK_RTOL) -> np.ndarray:
    """Lower-triangular L with gram = L L^T.

    Pivots are required to stay above rtol times the largest initial
    diagonal entry; a smaller pivot raises SingularMatrixError.
    """
    a = np.array(gram, dtype=float)
    k = a.shape[0]
    if a.shape != (k, k):
        raise ConfigurationError(f"Gram matrix must be square, got {a.shape}")
    max_diag = float(a.diagonal().max(initial=0.0))
    if max_diag <= 0.0:
        raise SingularMatrixError("Gram matrix has no positive diagonal entry")
    low = np.zeros_like(a)
    floor = rtol * max_diag
    for i in range(k):
        d = a[i, i] - low[i, :i] @ low[i, :i]
        if d <= floor:
            raise SingularMatrixError(
                f"Gram matrix pivot {i} fell to {d:.3e} (threshold {floor:.3e})"
            )
        low[i, i] = math.sqrt(d)
        if i + 1 < k:
            low[i + 1 :, i] = (a[i + 1 :, i] - low[i + 1 :, :i] @ low[i, :i]) / low[i, i]
    return low


def cholesky_solve(low: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Solve (L L^T) x = b given the lower factor L."""
    k = low.shape[0]
    z = np.empty(k)
    for i in range(k):
        z[i] = (b[i] - low[i, :i] @ z[:i]) / low[i, i]
    x = np.empty(k)
    for i in range(k - 1, -1, -1):
        x[i] = (z[i] - low[i + 1 :, i] @ x[i + 1 :]) / low[i, i]
    return x


def _spd_solve(gram: np.ndarray, rhs: np.ndarray, matrix: DenseMatrix) -> np.ndarray:
    """SPD solve with one step of iterative refinement.

    On a rank-deficient Gram matrix, reports the offending eigenvalue ratio
    (computed on demand via the Jacobi sweep).
    """
    try:
        low = cholesky_factor(gram)
    except SingularMatrixError as exc:
        eigs = jacobi_eigenvalues(gram)
        lam_max = float(eigs.max(initial=0.0))
        lam_min = float(eigs.min(initial=0.0))
        ratio = lam_min / lam_max if lam_max > 0 else float("nan")
        raise SingularMatrixError(
            f"rank-deficient Gram matrix of {matrix.rows}x{matrix.cols} system: "
            f"eigenvalue ratio {ratio:.3e} below {RANK_RTOL:.1e}"
        ) from exc
    x = cholesky_solve(low, rhs)
    x += cholesky_solve(low, rhs - gram @ x)
    return x


def least_squares_ref(system: LinearSystem) -> np.ndarray:
    """Direct least-squares solution (X^T X)^{-1} X^T y via the Gram solve.

    Requires m >= n and full column rank (smallest Gram eigenvalue above
    RANK_RTOL times the largest).
    """
    X = system.X
    if X.rows < X.cols:
        raise ConfigurationError(
            f"least_squares_ref requires m >= n, got {X.rows}x{X.cols}"
        )
    gram = X.data.T @ X.data
    return _spd_solve(gram, X.data.T @ system.y, X)


def least_norm_ref(system: LinearSystem) -> np.ndarray:
    """Minimum-norm solution X^T (X X^T)^{-1} y via the Gram solve.

    Requires m <= n, full row rank, and a consistent right-hand side; the
    result lies in the row span of X by construction.
    """
    X = system.X
    if X.rows > X.cols:
        raise ConfigurationError(f"least_norm_ref requires m <= n, got {X.rows}x{X.cols}")
    gram = X.data @ X.data.T
    alpha = _spd_solve(gram, system.y, X)
    return X.data.T @ alpha


def project_row_span(matrix: DenseMatrix, v) -> np.ndarray:
    """Orthogonal projection of v onto the row span, X^T (X X^T)^{-1} X v.

    Reuses the least-norm machinery; requires full row rank.
    """
    v = np.asarray(v, dtype=float)
    gram = matrix.data @ matrix.data.T
    alpha = _spd_solve(gram, matrix.data @ v, matrix)
    return matrix.data.T @ alpha


# ---------------------------------------------------------------------------
# Spectral summary via cyclic Jacobi sweeps

def jacobi_eigenvalues(sym: np.ndarray) -> np.ndarray:
    """Eigenvalues of a symmetric matrix by cyclic Jacobi rotations.

    Sweeps until the off-diagonal Frobenius norm falls below JACOBI_RTOL
    times the Frobenius norm of the input; raises NumericalError after
    JACOBI_MAX_SWEEPS sweeps without convergence.
    """
    s = np.array(sym, dtype=float)
    k = s.shape[0]
    if s.shape != (k, k):
        raise ConfigurationError(f"expected a square symmetric matrix, got {s.shape}")
    if k == 1:
        return s.diagonal().copy()
    fnorm = math.sqrt(float((s * s).sum()))
    if fnorm == 0.0:
        return np.zeros(k)
    target = JACOBI_RTOL * fnorm
    skip = 1e-300
    for _ in range(JACOBI_MAX_SWEEPS):
        off = s - np.diag(s.diagonal())
        off_sq = float((off * off).sum())  # summed directly to avoid cancellation
        if math.sqrt(off_sq) <= target:
            return np.sort(s.diagonal().copy())
        for p in range(k - 1):
            for q in range(p + 1, k):
                spq = s[p, q]
                if abs(spq) <= skip:
                    continue
                theta = (s[q, q] - s[p, p]) / (2.0 * spq)
                t = math.copysign(1.0, theta) / (abs(theta) + math.hypot(theta, 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                sn = t * c
                rp = c * s[p] - sn * s[q]
                rq = sn * s[p] + c * s[q]
                s[p] = rp
                s[q] = rq
                cp = c * s[:, p] - sn * s[:, q]
                cq = sn * s[:, p] + c * s[:, q]
                s[:, p] = cp
                s[:, q] = cq
                s[p, q] = 0.0
                s[q, p] = 0.0
    raise NumericalError(
        f"Jacobi eigensolve did not converge within {JACOBI_MAX_SWEEPS} sweeps"
    )


@dataclass(frozen=True)
class SpectralSummary:
    """Extreme singular values of a matrix and derived spectral quantities."""

    sigma_min: float  # smallest singular value above the rank threshold
    sigma_max: float
    kappa: float = field(init=False)
    lambda_min: float = field(init=False)
    trace_sigma: float = 0.0  # Tr(X^T X) == ||X||_F^2

    def __post_init__(self):
        object.__setattr__(self, "kappa", self.sigma_max / self.sigma_min)
        object.__setattr__(self, "lambda_min", self.sigma_min**2)


def gram_eigenvalues(matrix: DenseMatrix) -> np.ndarray:
    """Eigenvalues of the smaller Gram matrix (X^T X if n <= m, else X X^T)."""
    a = matrix.data
    gram = a.T @ a if matrix.cols <= matrix.rows else a @ a.T
    return jacobi_eigenvalues(gram)


def numeric_rank(matrix: DenseMatrix) -> int:
    """Count of Gram eigenvalues strictly above RANK_RTOL times the largest."""
    eigs = gram_eigenvalues(matrix)
    lam_max = float(eigs.max(initial=0.0))
    if lam_max <= 0.0:
        return 0
    return int((eigs > RANK_RTOL * lam_max).sum())


def spectral_summary(matrix: DenseMatrix) -> SpectralSummary:
    """Extreme singular values via the Jacobi eigensolve of the smaller Gram.

    sigma_min is the square root of the smallest eigenvalue strictly above
    RANK_RTOL times the largest, i.e. the smallest *nonzero* singular value.
    """
    if matrix.frob_sq <= 0.0:
        raise ConfigurationError("spectral_summary requires a nonzero matrix")
    eigs = gram_eigenvalues(matrix)
    lam_max = float(eigs.max())
    positive = eigs[eigs > RANK_RTOL * lam_max]
    lam_min = float(positive.min())
    return SpectralSummary(
        sigma_min=math.sqrt(lam_min),
        sigma_max=math.sqrt(lam_max),
        trace_sigma=matrix.frob_sq,
    )
