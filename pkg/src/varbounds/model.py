"""Second-moment domain types: weights, variances, correlations, covariances.

Everything here is immutable after construction. Numeric arrays are stored
as read-only numpy float64 copies.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from numbers import Rational
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from .errors import GenerationFailure, InvalidInput

SIMPLEX_TOL = 1e-12
PSD_REL_TOL = 1e-10
_MAX_GENERATION_ATTEMPTS = 16


class WeightClass(enum.Enum):
    SIMPLEX = "simplex"
    SUB_SIMPLEX = "sub-simplex"
    NON_NEGATIVE = "non-negative"
    GENERAL = "general"

    @property
    def non_negative(self) -> bool:
        return self is not WeightClass.GENERAL


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=np.float64, copy=True)
    a.setflags(write=False)
    return a


def _classify(values: Sequence[Any]) -> WeightClass:
    exact = all(isinstance(v, Rational) for v in values)
    if exact:
        total = sum((Fraction(v) for v in values), Fraction(0))
        is_one = total == 1
        strictly_inside = 0 < total < 1
    else:
        total = math.fsum(float(v) for v in values)
        is_one = abs(total - 1.0) <= SIMPLEX_TOL
        strictly_inside = 0.0 < total < 1.0 and not is_one

    if any(v < 0 for v in values):
        return WeightClass.GENERAL
    if all(v <= 1 for v in values):
        if is_one:
            return WeightClass.SIMPLEX
        if strictly_inside:
            return WeightClass.SUB_SIMPLEX
    return WeightClass.NON_NEGATIVE


@dataclass(frozen=True)
class WeightVector:
    """Weights alpha_1..alpha_n with their derived hypothesis class.

    Integer or :class:`fractions.Fraction` entries are classified with exact
    arithmetic; anything else uses floats with an absolute tolerance of
    ``SIMPLEX_TOL`` on the sum.
    """

    values: tuple
    weight_class: WeightClass = field(init=False)

    def __post_init__(self):
        vals = tuple(self.values)
        if not vals:
            raise InvalidInput("weights must be non-empty")
        for v in vals:
            if not isinstance(v, Rational) and not math.isfinite(float(v)):
                raise InvalidInput(f"non-finite weight {v!r}")
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "weight_class", _classify(vals))

    def __len__(self) -> int:
        return len(self.values)

    @property
    def array(self) -> np.ndarray:
        return np.array([float(v) for v in self.values], dtype=np.float64)

    @property
    def abs_sum(self) -> float:
        return math.fsum(abs(float(v)) for v in self.values)


def classify_weights(values: Sequence[Any]) -> WeightVector:
    return WeightVector(tuple(values))


def as_weights(weights: WeightVector | Sequence[Any]) -> WeightVector:
    if isinstance(weights, WeightVector):
        return weights
    return WeightVector(tuple(weights))


@dataclass(frozen=True)
class VarianceProfile:
    """Per-variable variances sigma_i^2, all finite and non-negative."""

    variances: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.variances, dtype=np.float64).ravel()
        if v.size == 0:
            raise InvalidInput("variance profile must be non-empty")
        if not np.all(np.isfinite(v)):
            raise InvalidInput("variances must be finite")
        if np.any(v < 0):
            raise InvalidInput("variances must be non-negative")
        object.__setattr__(self, "variances", _readonly(v))

    def __len__(self) -> int:
        return self.variances.size

    @property
    def sigmas(self) -> np.ndarray:
        return np.sqrt(self.variances)


def as_profile(profile: VarianceProfile | Sequence[float]) -> VarianceProfile:
    if isinstance(profile, VarianceProfile):
        return profile
    return VarianceProfile(np.asarray(profile, dtype=np.float64))


def psd_defect(matrix: np.ndarray) -> tuple[float, float]:
    """Return ``(lambda_min, lambda_max)`` of a symmetric matrix."""
    eig = np.linalg.eigvalsh(matrix)
    return float(eig[0]), float(eig[-1])


def is_psd(matrix: np.ndarray, rel_tol: float = PSD_REL_TOL) -> bool:
    lo, hi = psd_defect(matrix)
    return lo >= -rel_tol * max(hi, 0.0)


@dataclass(frozen=True)
class CorrelationMatrix:
    """Symmetric, unit-diagonal, entrywise-bounded correlation matrix.

    Non-PSD matrices are rejected unless ``allow_non_psd`` is set, in which
    case the instance is kept but marked ``hypothetical`` (no random vector
    has these correlations).
    """

    entries: np.ndarray
    allow_non_psd: bool = False
    psd: bool = field(init=False)

    def __post_init__(self):
        r = np.array(self.entries, dtype=np.float64)
        if r.ndim != 2 or r.shape[0] != r.shape[1] or r.shape[0] == 0:
            raise InvalidInput(f"correlation must be a non-empty square matrix, got shape {r.shape}")
        if not np.all(np.isfinite(r)):
            raise InvalidInput("correlation entries must be finite")
        if not np.array_equal(r, r.T):
            raise InvalidInput("correlation matrix is not symmetric")
        if not np.all(np.diag(r) == 1.0):
            raise InvalidInput("correlation matrix must have a unit diagonal")
        if np.any(np.abs(r) > 1.0):
            raise InvalidInput("correlation entries must satisfy |rho| <= 1")
        psd = is_psd(r)
        if not psd and not self.allow_non_psd:
            raise InvalidInput("correlation matrix is not positive semidefinite")
        object.__setattr__(self, "entries", _readonly(r))
        object.__setattr__(self, "psd", psd)

    @classmethod
    def identity(cls, n: int) -> "CorrelationMatrix":
        return cls(np.eye(n))

    @classmethod
    def constant(cls, n: int, rho: float) -> "CorrelationMatrix":
        r = np.full((n, n), float(rho))
        np.fill_diagonal(r, 1.0)
        return cls(r)

    @property
    def n(self) -> int:
        return self.entries.shape[0]

    @property
    def hypothetical(self) -> bool:
        return not self.psd


@dataclass(frozen=True)
class CovarianceModel:
    profile: VarianceProfile
    correlation: CorrelationMatrix

    def __post_init__(self):
        if len(self.profile) != self.correlation.n:
            raise InvalidInput(
                f"{len(self.profile)} variances but a {self.correlation.n}x{self.correlation.n} correlation"
            )

    @classmethod
    def from_arrays(cls, variances, correlation=None, allow_non_psd: bool = False) -> "CovarianceModel":
        profile = as_profile(variances)
        if correlation is None:
            corr = CorrelationMatrix.identity(len(profile))
        elif isinstance(correlation, CorrelationMatrix):
            corr = correlation
        else:
            corr = CorrelationMatrix(np.asarray(correlation, dtype=np.float64), allow_non_psd=allow_non_psd)
        return cls(profile, corr)

    @property
    def n(self) -> int:
        return len(self.profile)

    @property
    def hypothetical(self) -> bool:
        return self.correlation.hypothetical

    @property
    def covariance(self) -> np.ndarray:
        s = self.profile.sigmas
        cov = self.correlation.entries * np.outer(s, s)
        np.fill_diagonal(cov, self.profile.variances)
        return _readonly(cov)

    @property
    def uncorrelated(self) -> bool:
        r = self.correlation.entries
        return bool(np.all(r[~np.eye(self.n, dtype=bool)] == 0.0))


def check_correlation(r: np.ndarray, rel_tol: float = PSD_REL_TOL) -> list[str]:
    """Run the correlation invariant suite and return a list of failures."""
    problems = []
    r = np.asarray(r, dtype=np.float64)
    if not np.array_equal(r, r.T):
        problems.append("not symmetric")
    if not np.all(np.diag(r) == 1.0):
        problems.append("diagonal is not exactly 1")
    if np.any(np.abs(r) > 1.0):
        problems.append("entry with |rho| > 1")
    if not is_psd(r, rel_tol):
        lo, hi = psd_defect(r)
        problems.append(f"not PSD (lambda_min={lo:.3e}, lambda_max={hi:.3e})")
    return problems


def random_correlation(n: int, seed: int) -> CorrelationMatrix:
    """Random correlation matrix from a Gaussian Gram factor.

    Draws ``G`` (n x n), forms ``G @ G.T`` and rescales to unit diagonal.
    Deterministic in ``(n, seed)``.
    """
    if n < 1:
        raise InvalidInput("n must be >= 1")
    for attempt in range(_MAX_GENERATION_ATTEMPTS):
        rng = np.random.default_rng([seed, attempt] if attempt else seed)
        g = rng.standard_normal((n, n))
        gram = g @ g.T
        d = np.sqrt(np.diag(gram))
        if np.any(d == 0.0) or not np.all(np.isfinite(d)):
            continue
        r = gram / np.outer(d, d)
        r = 0.5 * (r + r.T)
        np.clip(r, -1.0, 1.0, out=r)
        np.fill_diagonal(r, 1.0)
        if is_psd(r):
            return CorrelationMatrix(r)
    raise GenerationFailure(f"no valid correlation matrix for n={n}, seed={seed}")


def load_instance(source: str | Path | dict) -> tuple[WeightVector, CovarianceModel]:
    """Parse an instance document.

    Schema: ``{"weights": [...], "variances": [...], "correlation": [[...], ...]}``.
    ``weights`` defaults to ``1/n`` each and ``correlation`` to the identity.
    Non-PSD correlations are accepted and flagged hypothetical.
    """
    if isinstance(source, dict):
        doc = source
    else:
        try:
            doc = json.loads(Path(source).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise InvalidInput(f"cannot read instance {source}: {exc}") from exc
    if not isinstance(doc, dict) or "variances" not in doc:
        raise InvalidInput("instance must be an object with a 'variances' array")
    variances = doc["variances"]
    if not isinstance(variances, list) or not variances:
        raise InvalidInput("'variances' must be a non-empty array")
    n = len(variances)
    weights = doc.get("weights")
    if weights is None:
        weights = [Fraction(1, n)] * n
    if len(weights) != n:
        raise InvalidInput(f"{len(weights)} weights but {n} variances")
    corr = doc.get("correlation")
    if corr is not None and (len(corr) != n or any(len(row) != n for row in corr)):
        raise InvalidInput(f"correlation must be {n}x{n}")
    try:
        model = CovarianceModel.from_arrays(variances, corr, allow_non_psd=True)
    except (TypeError, ValueError) as exc:
        if isinstance(exc, InvalidInput):
            raise
        raise InvalidInput(str(exc)) from exc
    return as_weights(weights), model
