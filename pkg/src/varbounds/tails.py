"""Chebyshev tail bounds for weighted sums and means of correlated variables.

Bounds are returned raw; values above 1 are valid but vacuous.
"""

from __future__ import annotations

import math
import numbers
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .bounds import bound_theorem5
from .errors import InvalidInput
from .model import as_profile
from .processes import Estimate, MIN_REPS, ProcessModel, expected_mean, sample_paths, tail_frequency


def _check_delta(delta: float) -> float:
    if not (isinstance(delta, numbers.Real) and math.isfinite(delta) and delta > 0):
        raise InvalidInput(f"delta must be a finite number > 0, got {delta!r}")
    return float(delta)


@dataclass(frozen=True)
class TailQuery:
    delta: float
    n: int
    weights: Sequence[float] | None = None
    profile: Sequence[float] | None = None

    def __post_init__(self):
        _check_delta(self.delta)
        if self.n < 1:
            raise InvalidInput("n must be >= 1")


def tail_bound_weighted(weights, profile, delta: float) -> float:
    """P(|sum a_i X_i - E| > delta) <= (sum|a_i|)(sum|a_i| v_i) / delta^2."""
    delta = _check_delta(delta)
    return bound_theorem5(weights, profile) / delta**2


def tail_bound_mean(profile, delta: float, correlated: bool = True) -> float:
    """Chebyshev bound for the sample mean.

    Correlated: (1/n) sum v_i / delta^2. Uncorrelated: the same divided by n.
    """
    delta = _check_delta(delta)
    v = as_profile(profile).variances
    n = v.size
    mean_var = math.fsum(v) / n
    bound = mean_var / delta**2
    return bound if correlated else bound / n


def tail_bound_standardized(n: int, delta: float, scaled_by_n: bool = True) -> float:
    """Bound for standardized variables: 1/delta^2 for the mean, n^2/delta^2 for the sum."""
    delta = _check_delta(delta)
    if n < 1:
        raise InvalidInput("n must be >= 1")
    return 1.0 / delta**2 if scaled_by_n else n**2 / delta**2


def process_tail_bound(process: ProcessModel, n: int, delta: float) -> float:
    """Correlated mean bound using the process's own variances 1..n."""
    return tail_bound_mean([process.variance(k) for k in range(1, n + 1)], delta, correlated=True)


def empirical_tail(
    process: ProcessModel, n: int, delta: float, reps: int, seed: int, workers: int = 1
) -> Estimate:
    """Fraction of ``reps`` seeded paths with |mean_n - E mean_n| > delta."""
    return empirical_tail_curve(process, n, [delta], reps, seed, workers)[0]


def empirical_tail_curve(
    process: ProcessModel, n: int, deltas: Sequence[float], reps: int, seed: int, workers: int = 1
) -> list[Estimate]:
    """:func:`empirical_tail` for several thresholds on one set of paths."""
    if reps < MIN_REPS:
        raise InvalidInput(f"reps must be >= {MIN_REPS}")
    deltas = [_check_delta(d) for d in deltas]
    means = sample_paths(process, n, reps, seed, workers).mean(axis=1)
    center = expected_mean(process, n)
    return [tail_frequency(means, center, d) for d in deltas]


def delta_grid(start: float = 0.1, stop: float = 2.0, step: float = 0.1) -> np.ndarray:
    count = int(round((stop - start) / step)) + 1
    return np.round(start + step * np.arange(count), 12)
