"""Closed-form convergence-bound evaluators.

All four methods share the contraction factor

    alpha = 1 - sigma_min(X)^2 / ||X||_F^2,

with sigma_min the smallest nonzero singular value. The extended-method
bound for the least-norm setting is

    alpha^t ||beta_LN||^2 + 2 alpha^floor(t/2) B / (1 - alpha),
    B = ||X beta_LN||^2 / ||X||_F^2,

and plain Kaczmarz on an inconsistent system carries the additive
convergence horizon ||r||^2 / sigma_min^2 below which it cannot descend.

The extended-Kaczmarz rate appears in two inequivalent published forms;
both are exposed (``rek_rate_eq`` and ``rek_comparison``), neither silently
preferred.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, NumericalError
from .linalg import LinearSystem, Regime, SpectralSummary, spectral_summary


@dataclass(frozen=True)
class TheoryBound:
    """Spectral constants feeding the per-iteration bound evaluators.

    alpha: contraction factor 1 - sigma_min^2 / ||X||_F^2, in [0, 1).
    B: ||X ref||^2 / ||X||_F^2 (the extended-method forcing term).
    kappa_sq_term: 1 + 2 kappa^2 with kappa the condition number.
    horizon: ||r||^2 / sigma_min^2 for inconsistent systems, else exactly 0.
    """

    alpha: float
    B: float
    kappa_sq_term: float
    horizon: float

    @property
    def sigma_ratio_sq(self) -> float:
        """(sigma_min / sigma_max)^2, recovered from kappa_sq_term."""
        return 2.0 / (self.kappa_sq_term - 1.0)

    @classmethod
    def from_system(
        cls, system: LinearSystem, summary: SpectralSummary | None = None
    ) -> "TheoryBound":
        if system.reference is None:
            raise ConfigurationError("TheoryBound requires a system with a reference solution")
        if summary is None:
            summary = spectral_summary(system.X)
        frob_sq = system.X.frob_sq
        alpha = 1.0 - summary.lambda_min / frob_sq
        xref = system.X.data @ system.reference
        b_term = float(xref @ xref) / frob_sq
        if system.regime is Regime.OVER_INCONSISTENT:
            if system.residual_ref is None:
                raise ConfigurationError(
                    "inconsistent system needs residual_ref for the horizon term"
                )
            r = system.residual_ref
            horizon = float(r @ r) / summary.lambda_min
        else:
            horizon = 0.0
        return cls(
            alpha=alpha,
            B=b_term,
            kappa_sq_term=1.0 + 2.0 * summary.kappa**2,
            horizon=horizon,
        )


def _check_iteration(t: int):
    if t < 0:
        raise ConfigurationError(f"iteration index must be nonnegative, got {t}")


def bound_rk_consistent(bound: TheoryBound, t: int, init_err_sq: float) -> float:
    """alpha^t * init_err_sq — consistent-regime expected-error envelope.

    Also the envelope used for plain Gauss-Seidel with init_err_sq equal to
    the squared norm of the regime's reference (beta_0 = 0).
    """
    _check_iteration(t)
    return bound.alpha**t * init_err_sq


def bound_rk_inconsistent(bound: TheoryBound, t: int, init_err_sq: float) -> float:
    """alpha^t * init_err_sq + horizon; collapses to the consistent bound when r = 0."""
    _check_iteration(t)
    return bound.alpha**t * init_err_sq + bound.horizon


def bound_rek(bound: TheoryBound, t: int, norm_ref_sq: float) -> float:
    """Extended-Kaczmarz rate: alpha^floor(t/2) * (1 + 2 (s_min/s_max)^2 * norm_ref_sq)."""
    _check_iteration(t)
    return bound.alpha ** (t // 2) * (1.0 + 2.0 * bound.sigma_ratio_sq * norm_ref_sq)


#: labeled aliases for the two published extended-Kaczmarz forms
rek_rate_eq = bound_rek


def bound_comparison(bound: TheoryBound, t: int, norm_ref_sq: float) -> float:
    """Common extended-method envelope alpha^t (1 + 2 kappa^2) norm_ref_sq.

    Here t indexes the comparison display's half-counted iterations: the
    value applies to iterate 2t of the extended methods.
    """
    _check_iteration(t)
    return bound.alpha**t * bound.kappa_sq_term * norm_ref_sq


rek_comparison = bound_comparison


def bound_regs(bound: TheoryBound, t: int, norm_ln_sq: float) -> float:
    """Extended Gauss-Seidel bound alpha^t ||b_LN||^2 + 2 alpha^floor(t/2) B/(1-alpha)."""
    _check_iteration(t)
    if bound.alpha >= 1.0:
        raise NumericalError(f"bound is vacuous for alpha = {bound.alpha} >= 1")
    return bound.alpha**t * norm_ln_sq + 2.0 * bound.alpha ** (t // 2) * bound.B / (
        1.0 - bound.alpha
    )


def objective(system: LinearSystem, beta) -> float:
    """Least-squares objective 0.5 * ||y - X beta||^2."""
    r = system.y - system.X.data @ np.asarray(beta, dtype=float)
    return 0.5 * float(r @ r)
