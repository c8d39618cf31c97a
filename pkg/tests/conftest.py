"""Shared test helpers."""
from __future__ import annotations

import numpy as np
import pytest

from kaczgs.linalg import Regime
from kaczgs.problems import GenSpec, gen_gaussian


class FakeUniform:
    """Duck-typed rng feeding a fixed sequence of uniforms to samplers."""

    def __init__(self, values):
        self.values = list(values)

    def uniform(self) -> float:
        return self.values.pop(0)


def gaussian_system(m: int, n: int, regime: Regime, seed: int, noise_scale: float = 1.0):
    return gen_gaussian(GenSpec(m=m, n=n, regime=regime, seed=seed, noise_scale=noise_scale))


# --- exhaustive one-step enumeration oracles --------------------------------

def rk_one_step(system, beta, row):
    xi = system.X.data[row]
    return beta + ((system.y[row] - xi @ beta) / system.X.row_norms_sq[row]) * xi


def rgs_one_step(system, beta, col):
    xj = system.X.data[:, col]
    resid = system.y - system.X.data @ beta
    scale = (xj @ resid) / system.X.col_norms_sq[col]
    out = np.array(beta, dtype=float)
    out[col] += scale
    return out


def rk_enumerated_expected_error(system, beta, ref):
    """E ||beta_1 - ref||^2 by summing over every possible row draw."""
    probs = system.X.row_norms_sq / system.X.frob_sq
    total = 0.0
    for i, p in enumerate(probs):
        if p == 0:
            continue
        diff = rk_one_step(system, beta, i) - ref
        total += p * float(diff @ diff)
    return total


def rgs_enumerated_expected_xerror(system, beta, ref):
    """E ||X beta_1 - X ref||^2 by summing over every possible column draw."""
    probs = system.X.col_norms_sq / system.X.frob_sq
    total = 0.0
    for j, p in enumerate(probs):
        if p == 0:
            continue
        diff = system.X.data @ (rgs_one_step(system, beta, j) - ref)
        total += p * float(diff @ diff)
    return total


@pytest.fixture
def rng_numpy():
    return np.random.default_rng(12345)
