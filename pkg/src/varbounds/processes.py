"""Correlated sequences with closed-form covariance kernels and samplers.

Variables are indexed from 1. ``RunningMeanNormal`` yields S_k, the running
mean of iid normals; ``Telegraph`` yields a {0, 1} signal observed at
integer times.

Monte Carlo replicates are generated in fixed blocks of ``BLOCK_REPS``
paths. Block ``b`` draws from ``default_rng([seed, b])``, so for fixed
``(seed, reps)`` every replicate is fixed and results do not depend on how
blocks are spread over workers.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, NamedTuple, Union

import numpy as np

from .errors import InvalidInput, InvalidModel

BLOCK_REPS = 4096
MIN_REPS = 100
EULER_GAMMA = 0.5772156649015329


@dataclass(frozen=True)
class RunningMeanNormal:
    """S_k = (1/k) sum_{j<=k} X_j with X_j iid N(mu, sigma^2)."""

    mu: float = 0.0
    sigma: float = 1.0
    name = "running-mean"

    def __post_init__(self):
        if not (math.isfinite(self.mu) and math.isfinite(self.sigma)) or self.sigma <= 0:
            raise InvalidInput(f"running-mean needs finite mu and sigma > 0, got mu={self.mu}, sigma={self.sigma}")

    def mean(self, i: int) -> float:
        return self.mu

    def variance(self, i: int) -> float:
        return self.sigma**2 / i

    def cov(self, i: int, j: int) -> float:
        return self.sigma**2 / max(i, j)

    def cov_matrix(self, n: int) -> np.ndarray:
        k = np.arange(1, n + 1, dtype=np.float64)
        return self.sigma**2 / np.maximum.outer(k, k)

    def sample(self, rng: np.random.Generator, reps: int, n: int) -> np.ndarray:
        x = rng.normal(self.mu, self.sigma, size=(reps, n))
        return np.cumsum(x, axis=1) / np.arange(1, n + 1)


@dataclass(frozen=True)
class Telegraph:
    """Two-state {0, 1} signal sampled at integer times.

    With rate ``lam`` and stationary ``P(X=1) = p``, the chain jumps 0->1 at
    rate 2*lam*p and 1->0 at rate 2*lam*(1-p). For p = 1/2 the flips are the
    points of a Poisson(lam) process.
    """

    lam: float = 1.0
    p: float = 0.5
    name = "telegraph"

    def __post_init__(self):
        if not math.isfinite(self.lam) or self.lam <= 0:
            raise InvalidInput(f"telegraph needs lambda > 0, got {self.lam}")
        if not 0.0 < self.p < 1.0:
            raise InvalidInput(f"telegraph needs 0 < p < 1, got {self.p}")

    @property
    def decay(self) -> float:
        return math.exp(-2.0 * self.lam)

    @property
    def switch_probability(self) -> tuple[float, float]:
        """One-step transition probabilities (P(0->1), P(1->0))."""
        q = -math.expm1(-2.0 * self.lam)
        return self.p * q, (1.0 - self.p) * q

    def mean(self, i: int) -> float:
        return self.p

    def variance(self, i: int) -> float:
        return self.p * (1.0 - self.p)

    def cov(self, i: int, j: int) -> float:
        return self.p * (1.0 - self.p) * math.exp(-2.0 * self.lam * abs(i - j))

    def cov_matrix(self, n: int) -> np.ndarray:
        k = np.arange(1, n + 1)
        lag = np.abs(np.subtract.outer(k, k))
        return self.p * (1.0 - self.p) * np.exp(-2.0 * self.lam * lag)

    def sample(self, rng: np.random.Generator, reps: int, n: int) -> np.ndarray:
        up, down = self.switch_probability
        out = np.empty((reps, n), dtype=np.float64)
        state = rng.random(reps) < self.p
        out[:, 0] = state
        for k in range(1, n):
            u = rng.random(reps)
            state = np.where(state, u >= down, u < up)
            out[:, k] = state
        return out


@dataclass(frozen=True)
class UserKernel:
    """Process given only by its second moments; it has no sampler."""

    variance_fn: Callable[[int], float]
    covariance_fn: Callable[[int, int], float]
    mean_fn: Callable[[int], float] = lambda i: 0.0
    name = "user"

    def mean(self, i: int) -> float:
        return self.mean_fn(i)

    def variance(self, i: int) -> float:
        return float(self.variance_fn(i))

    def cov(self, i: int, j: int) -> float:
        c = float(self.covariance_fn(i, j))
        if i == j:
            if not math.isclose(c, self.variance(i), rel_tol=1e-12, abs_tol=1e-300):
                raise InvalidModel(f"covariance({i},{i})={c} differs from variance({i})={self.variance(i)}")
        elif not math.isclose(c, float(self.covariance_fn(j, i)), rel_tol=1e-12, abs_tol=1e-300):
            raise InvalidModel(f"kernel is asymmetric at ({i},{j})")
        return c

    def cov_matrix(self, n: int) -> np.ndarray:
        return np.array([[self.cov(i, j) for j in range(1, n + 1)] for i in range(1, n + 1)])


ProcessModel = Union[RunningMeanNormal, Telegraph, UserKernel]

PROCESS_NAMES = ("running-mean", "telegraph")


def make_process(name: str, *, mu: float = 0.0, sigma: float = 1.0, lam: float = 1.0, p: float = 0.5) -> ProcessModel:
    if name == "running-mean":
        return RunningMeanNormal(mu, sigma)
    if name == "telegraph":
        return Telegraph(lam, p)
    raise InvalidInput(f"unknown process {name!r}; expected one of {PROCESS_NAMES}")


def kernel_cov(process: ProcessModel, i: int, j: int) -> float:
    if i < 1 or j < 1:
        raise InvalidInput(f"indices start at 1, got ({i}, {j})")
    return process.cov(i, j)


def harmonic(n: int) -> float:
    return math.fsum(1.0 / k for k in range(1, n + 1))


def harmonic_remainder(n: int) -> float:
    """eps_n in H_n = ln n + gamma + eps_n."""
    return harmonic(n) - math.log(n) - EULER_GAMMA


def running_mean_var_of_mean(sigma: float, n: int) -> float:
    """Var((1/n) sum S_i) = (sigma^2 / n^2) (2n - H_n)."""
    if n < 1:
        raise InvalidInput("n must be >= 1")
    return sigma**2 * (2.0 * n - harmonic(n)) / n**2


def telegraph_var_of_mean(lam: float, n: int, p: float = 0.5) -> float:
    """Variance of the telegraph sample mean over times 1..n.

    (p(1-p)/n) [1 + 2 (r - r^n)/(1 - r) - (2/n) sum_{k<n} k r^k], r = e^{-2 lam}.
    For p = 1/2 the prefactor is 1/(4n).
    """
    if n < 1:
        raise InvalidInput("n must be >= 1")
    if not lam > 0:
        raise InvalidInput(f"lambda must be > 0, got {lam}")
    r = math.exp(-2.0 * lam)
    geometric = (r - r**n) / -math.expm1(-2.0 * lam)
    weighted = math.fsum(k * r**k for k in range(1, n))
    return p * (1.0 - p) / n * (1.0 + 2.0 * geometric - 2.0 / n * weighted)


def var_of_mean(process: ProcessModel, n: int) -> float:
    """Closed-form Var((1/n) sum X_i) where available, else the kernel double sum."""
    if isinstance(process, RunningMeanNormal):
        return running_mean_var_of_mean(process.sigma, n)
    if isinstance(process, Telegraph):
        return telegraph_var_of_mean(process.lam, n, process.p)
    return kernel_double_sum(process, n) / n**2


def kernel_double_sum(process: ProcessModel, n: int) -> float:
    """sum_{i,j<=n} Cov(X_i, X_j), evaluated term by term."""
    return math.fsum(process.cov(i, j) for i in range(1, n + 1) for j in range(1, n + 1))


def poisson_odd_probability(lam: float) -> float:
    """P(N odd) for N ~ Poisson(lam), summed term by term."""
    if not lam > 0:
        raise InvalidInput(f"lambda must be > 0, got {lam}")
    term, k = math.exp(-lam) * lam, 1
    terms = []
    # stop once past the mode and the terms no longer move the sum
    while k <= lam or term > 1e-18 * max(terms, default=term):
        terms.append(term)
        term *= lam * lam / ((k + 1) * (k + 2))
        k += 2
    return math.fsum(terms)


@dataclass(frozen=True)
class SamplePath:
    values: np.ndarray
    seed: int
    process: str


def _check_sampler(process: ProcessModel) -> None:
    if not isinstance(process, (RunningMeanNormal, Telegraph)):
        raise InvalidInput(f"process {getattr(process, 'name', process)!r} has no sampler")


def sample_running_mean(mu: float, sigma: float, n: int, seed: int) -> SamplePath:
    if n < 1:
        raise InvalidInput("n must be >= 1")
    proc = RunningMeanNormal(mu, sigma)
    values = proc.sample(np.random.default_rng(seed), 1, n)[0]
    return SamplePath(values, seed, proc.name)


def sample_telegraph(lam: float, p: float, n: int, seed: int) -> SamplePath:
    if n < 1:
        raise InvalidInput("n must be >= 1")
    proc = Telegraph(lam, p)
    values = proc.sample(np.random.default_rng(seed), 1, n)[0]
    return SamplePath(values, seed, proc.name)


def sample_paths(process: ProcessModel, n: int, reps: int, seed: int, workers: int = 1) -> np.ndarray:
    """``reps`` x ``n`` array of independent paths, reproducible per (seed, r)."""
    _check_sampler(process)
    if n < 1 or reps < 1:
        raise InvalidInput("n and reps must be >= 1")
    blocks = [(b, min(BLOCK_REPS, reps - b * BLOCK_REPS)) for b in range(math.ceil(reps / BLOCK_REPS))]

    def run(block):
        b, size = block
        return process.sample(np.random.default_rng([seed, b]), size, n)

    if workers > 1 and len(blocks) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(run, blocks))
    else:
        parts = [run(blk) for blk in blocks]
    return np.concatenate(parts, axis=0)


class Estimate(NamedTuple):
    estimate: float
    std_error: float


STATISTICS = ("mean_n", "var_of_mean_n", "cov", "tail")


def _mean_and_se(x: np.ndarray) -> Estimate:
    m = float(np.mean(x))
    se = float(np.std(x, ddof=1) / math.sqrt(x.size))
    return Estimate(m, se)


def mc_estimate(
    process: ProcessModel,
    statistic: str,
    n: int,
    reps: int,
    seed: int,
    *,
    i: int | None = None,
    j: int | None = None,
    delta: float | None = None,
    workers: int = 1,
) -> Estimate:
    """Monte Carlo estimate with standard error.

    Statistics: ``mean_n`` (sample mean of Y_n = (1/n) sum X_k),
    ``var_of_mean_n`` (unbiased sample variance of Y_n), ``cov`` (sample
    covariance of X_i and X_j), ``tail`` (frequency of |Y_n - E Y_n| > delta).
    Standard errors for the variance and covariance come from the spread of
    the centred products.
    """
    if reps < MIN_REPS:
        raise InvalidInput(f"reps must be >= {MIN_REPS}")
    if statistic not in STATISTICS:
        raise InvalidInput(f"unknown statistic {statistic!r}; expected one of {STATISTICS}")
    if statistic == "cov":
        if i is None or j is None:
            raise InvalidInput("cov needs indices i and j")
        if not (1 <= i <= n and 1 <= j <= n):
            raise InvalidInput(f"cov indices ({i}, {j}) must lie in 1..{n}")
    if statistic == "tail" and (delta is None or not delta > 0):
        raise InvalidInput("tail needs delta > 0")

    paths = sample_paths(process, n, reps, seed, workers)
    if statistic == "cov":
        a = paths[:, i - 1] - paths[:, i - 1].mean()
        b = paths[:, j - 1] - paths[:, j - 1].mean()
        prod = a * b
        est = float(prod.sum() / (reps - 1))
        return Estimate(est, float(np.std(prod, ddof=1) / math.sqrt(reps)))

    y = paths.mean(axis=1)
    if statistic == "mean_n":
        return _mean_and_se(y)
    if statistic == "var_of_mean_n":
        sq = (y - y.mean()) ** 2
        est = float(sq.sum() / (reps - 1))
        return Estimate(est, float(np.std(sq, ddof=1) / math.sqrt(reps)))
    return tail_frequency(y, expected_mean(process, n), delta)


def expected_mean(process: ProcessModel, n: int) -> float:
    return math.fsum(process.mean(k) for k in range(1, n + 1)) / n


def tail_frequency(means: np.ndarray, center: float, delta: float) -> Estimate:
    hits = int(np.count_nonzero(np.abs(means - center) > delta))
    f = hits / means.size
    return Estimate(f, math.sqrt(f * (1.0 - f) / means.size))
