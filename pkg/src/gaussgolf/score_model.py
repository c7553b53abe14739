"""Per-event Gaussian score models.

An 18-hole score is the sum of 18 hole scores, so the field's scores at a
venue are modeled as a Gaussian with the event's mean and standard
deviation. The comparison model is a large sample of Gaussian draws rounded
to the nearest integer stroke (a discretized Gaussian).
"""

from __future__ import annotations

import datetime as dt
import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Hashable, Sequence

import numpy as np

from gaussgolf import rng as _rng
from gaussgolf.errors import DomainError, InsufficientDataError, ValidationError

DEFAULT_MODEL_SAMPLES = 100_000

_SQRT2 = math.sqrt(2.0)


@dataclass(frozen=True)
class RoundScore:
    """One player's 18-hole total at one round of one event."""

    event_id: str
    player_id: str
    round_index: int
    date: dt.date
    strokes: int

    def __post_init__(self):
        if self.round_index < 1:
            raise ValidationError(f"round_index must be >= 1, got {self.round_index}")
        if self.strokes <= 0:
            raise ValidationError(f"strokes must be positive, got {self.strokes}")

    @property
    def key(self) -> tuple[str, str, int]:
        return (self.event_id, self.player_id, self.round_index)


@dataclass(frozen=True)
class EventModel:
    event_id: Hashable
    mu_s: float
    sigma_s: float
    n_scores: int

    @property
    def stderr_mu(self) -> float:
        """Uncertainty of the event mean, sigma_s / sqrt(N)."""
        return self.sigma_s / math.sqrt(self.n_scores)


@dataclass(frozen=True)
class EmpiricalDistribution:
    """Probability histogram with one bin per distinct integer score.

    ``bins`` holds ``(score, probability, uncertainty)`` triples in score
    order; the uncertainty of a bin is sqrt(count) / total (Poisson counts).
    """

    bins: tuple[tuple[int, float, float], ...]
    total_count: int
    counts: tuple[int, ...] = field(repr=False, default=())

    def as_dict(self) -> dict[int, tuple[float, float]]:
        return {s: (p, u) for s, p, u in self.bins}


@dataclass(frozen=True, eq=False)
class DiscretizedGaussianModel:
    mu: float
    sigma: float
    samples: np.ndarray = field(repr=False)
    n_samples: int
    seed: int | None

    def pmf(self, score: int) -> float:
        return discretized_pmf(self.mu, self.sigma, score)


def _check_scores(scores: Sequence[int]) -> np.ndarray:
    arr = np.asarray(scores)
    if arr.ndim != 1:
        raise ValidationError("scores must be a flat sequence")
    if arr.size and not np.issubdtype(arr.dtype, np.integer):
        if not np.all(np.mod(arr, 1) == 0):
            raise ValidationError("scores must be integers")
        arr = arr.astype(np.int64)
    if arr.size and arr.min() <= 0:
        raise ValidationError("scores must be positive")
    return arr


def fit_moments(scores: Sequence[int], event_id: Hashable = None) -> EventModel:
    """Mean and population standard deviation (divisor N) of ``scores``."""
    arr = _check_scores(scores)
    if arr.size < 2:
        raise InsufficientDataError()
    x = arr.astype(np.float64)
    mu = float(x.mean())
    sigma = float(math.sqrt(np.mean((x - mu) ** 2)))
    return EventModel(event_id=event_id, mu_s=mu, sigma_s=sigma, n_scores=int(arr.size))


def empirical_distribution(scores: Sequence[int]) -> EmpiricalDistribution:
    arr = _check_scores(scores)
    if arr.size == 0:
        raise InsufficientDataError("empty score list")
    total = int(arr.size)
    tally = sorted(Counter(arr.tolist()).items())
    bins = tuple((int(s), c / total, math.sqrt(c) / total) for s, c in tally)
    return EmpiricalDistribution(bins=bins, total_count=total, counts=tuple(c for _, c in tally))


def round_half_away(x: np.ndarray) -> np.ndarray:
    """Round to the nearest integer, halves away from zero."""
    x = np.asarray(x, dtype=np.float64)
    whole = np.trunc(x)
    frac = x - whole  # exact in binary floating point
    return (whole + np.where(np.abs(frac) >= 0.5, np.sign(x), 0.0)).astype(np.int64)


def rounded_normal(gen: np.random.Generator, mu: float, sigma: float, n: int) -> np.ndarray:
    """Draw ``n`` Gaussian samples from ``gen`` and round them to integers."""
    return round_half_away(mu + sigma * gen.standard_normal(n))


def sample_model(
    mu: float, sigma: float, n_samples: int = DEFAULT_MODEL_SAMPLES, seed: int = 0, key: tuple[int, ...] = ()
) -> DiscretizedGaussianModel:
    """Build the discretized-Gaussian comparison model for ``(mu, sigma)``.

    ``key`` selects an independent stream under the same seed, e.g. one
    per event.
    """
    if not sigma >= 0:
        raise ValidationError(f"sigma must be >= 0, got {sigma}")
    if n_samples < 1:
        raise ValidationError("n_samples must be >= 1")
    samples = rounded_normal(_rng.stream(seed, _rng.TAG_MODEL, *key), mu, sigma, n_samples)
    samples.flags.writeable = False
    return DiscretizedGaussianModel(
        mu=float(mu), sigma=float(sigma), samples=samples, n_samples=int(n_samples), seed=seed
    )


def normal_cdf(x: float) -> float:
    # erfc keeps full relative precision in the lower tail.
    return 0.5 * math.erfc(-x / _SQRT2)


def gaussian_pdf(y: float, mu: float, sigma: float) -> float:
    if sigma <= 0:
        raise DomainError("sigma must be positive")
    return math.exp(-((y - mu) ** 2) / (2.0 * sigma * sigma)) / math.sqrt(2.0 * math.pi * sigma * sigma)


def discretized_pmf(mu: float, sigma: float, score: int) -> float:
    """P(round(Y) == score) for Y ~ Normal(mu, sigma^2)."""
    if not sigma > 0:
        raise DomainError(f"sigma must be positive, got {sigma}")
    hi = (score + 0.5 - mu) / sigma
    lo = (score - 0.5 - mu) / sigma
    # Difference of upper-tail masses when both bounds sit above the mean
    # avoids cancellation near 1.
    if lo > 0:
        return normal_cdf(-lo) - normal_cdf(-hi)
    return normal_cdf(hi) - normal_cdf(lo)
