"""Two-sample Kolmogorov-Smirnov tests and QQ data.

Scores are integers, so the two empirical CDFs are compared at every
distinct pooled value (right-continuous steps). P-values use the
asymptotic Kolmogorov tail with an effective sample size correction.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from gaussgolf import rng as _rng
from gaussgolf.errors import InsufficientDataError, ValidationError
from gaussgolf.score_model import (
    DEFAULT_MODEL_SAMPLES,
    DiscretizedGaussianModel,
    EventModel,
    rounded_normal,
)

QQ_LEVELS = 100
DITHER_SIGMA = 0.2

_SERIES_EPS = 1e-12
# Below this lambda the alternating series converges too slowly; the
# equivalent theta-function form is used instead.
_SMALL_LAMBDA = 1.0


@dataclass(frozen=True)
class KsResult:
    d_statistic: float
    p_value: float
    n1: int
    n2: int


@dataclass(frozen=True, eq=False)
class QqSeries:
    """Matched quantiles at levels 1%..100%.

    ``data_quantiles``/``model_quantiles`` are the undithered values. The
    dithered copies exist for plotting only and are ``None`` unless a
    dither seed was supplied.
    """

    levels: np.ndarray
    data_quantiles: np.ndarray
    model_quantiles: np.ndarray
    dither_sigma: float = DITHER_SIGMA
    data_dithered: np.ndarray | None = field(default=None, repr=False)
    model_dithered: np.ndarray | None = field(default=None, repr=False)

    @property
    def points(self) -> list[tuple[float, float]]:
        return list(zip(self.data_quantiles.tolist(), self.model_quantiles.tolist()))

    @property
    def dithered_points(self) -> list[tuple[float, float]] | None:
        if self.data_dithered is None:
            return None
        return list(zip(self.data_dithered.tolist(), self.model_dithered.tolist()))


def _as_sample(x, name: str) -> np.ndarray:
    arr = np.asarray(x, dtype=np.float64).ravel()
    if arr.size == 0:
        raise InsufficientDataError(f"{name} is empty")
    if not np.all(np.isfinite(arr)):
        raise ValidationError(f"{name} contains non-finite values")
    return arr


def ks_statistic(sample_a: Sequence[float], sample_b: Sequence[float]) -> float:
    """sup_x |F_a(x) - F_b(x)| over the pooled sample values."""
    a = np.sort(_as_sample(sample_a, "sample_a"))
    b = np.sort(_as_sample(sample_b, "sample_b"))
    na, nb = a.size, b.size
    pooled = np.concatenate([a, b])
    ca = np.searchsorted(a, pooled, side="right")
    cb = np.searchsorted(b, pooled, side="right")
    # Integer numerator, one rounding: |ca/na - cb/nb| = |ca*nb - cb*na| / (na*nb).
    num = np.abs(ca * nb - cb * na).max()
    return float(num) / float(na * nb)


def kolmogorov_q(lam: float) -> float:
    """Q_KS(lambda) = 2 * sum_{k>=1} (-1)^(k-1) exp(-2 k^2 lambda^2)."""
    if lam < 0:
        raise ValidationError("lambda must be non-negative")
    if lam < 0.05:
        return 1.0  # 1 - Q_KS(0.05) is below 1e-200
    if lam < _SMALL_LAMBDA:
        # 1 - sqrt(2 pi)/lambda * sum exp(-(2k-1)^2 pi^2 / (8 lambda^2))
        c = math.pi**2 / (8.0 * lam * lam)
        total = 0.0
        k = 1
        while True:
            term = math.exp(-((2 * k - 1) ** 2) * c)
            total += term
            if term < _SERIES_EPS * total or term == 0.0:
                break
            k += 1
        q = 1.0 - math.sqrt(2.0 * math.pi) / lam * total
    else:
        q = 0.0
        k = 1
        while True:
            term = 2.0 * math.exp(-2.0 * k * k * lam * lam)
            q += term if k % 2 else -term
            if term < _SERIES_EPS:
                break
            k += 1
    return min(1.0, max(0.0, q))


def ks_pvalue(d: float, n1: int, n2: int) -> float:
    if not 0.0 <= d <= 1.0:
        raise ValidationError(f"KS statistic must lie in [0, 1], got {d}")
    if n1 < 1 or n2 < 1:
        raise ValidationError("sample sizes must be >= 1")
    if d == 0.0:
        return 1.0
    ne = n1 * n2 / (n1 + n2)
    root = math.sqrt(ne)
    return kolmogorov_q((root + 0.12 + 0.11 / root) * d)


def ks_test(sample_a, sample_b) -> KsResult:
    a = _as_sample(sample_a, "sample_a")
    b = _as_sample(sample_b, "sample_b")
    d = ks_statistic(a, b)
    return KsResult(d_statistic=d, p_value=ks_pvalue(d, a.size, b.size), n1=a.size, n2=b.size)


def event_ks_test(scores, model: DiscretizedGaussianModel) -> KsResult:
    """Compare an event's raw scores with its discretized-Gaussian model."""
    return ks_test(scores, model.samples)


def inverse_ecdf(sample, levels: int = QQ_LEVELS) -> np.ndarray:
    """Smallest sample value v with ECDF(v) >= j/levels, for j = 1..levels."""
    x = np.sort(_as_sample(sample, "sample"))
    n = x.size
    j = np.arange(1, levels + 1)
    idx = (j * n + levels - 1) // levels - 1  # ceil(j*n/levels) - 1, in integers
    return x[idx]


def qq_points(sample_a, sample_b, dither_seed: int | None = None) -> QqSeries:
    """QQ series with ``sample_a`` (data) on x and ``sample_b`` (model) on y."""
    qa = inverse_ecdf(sample_a)
    qb = inverse_ecdf(sample_b)
    levels = np.arange(1, QQ_LEVELS + 1) / QQ_LEVELS
    da = db = None
    if dither_seed is not None:
        gen = _rng.stream(dither_seed, _rng.TAG_DITHER)
        da = qa + DITHER_SIGMA * gen.standard_normal(QQ_LEVELS)
        db = qb + DITHER_SIGMA * gen.standard_normal(QQ_LEVELS)
    return QqSeries(levels, qa, qb, DITHER_SIGMA, da, db)


def _simulated_pvalue(model: EventModel, seed: int, event_index: int, iteration: int, n_model: int) -> float:
    gen = _rng.stream(seed, _rng.TAG_PVALUE_SIM, event_index, iteration)
    data = rounded_normal(gen, model.mu_s, model.sigma_s, model.n_scores)
    reference = rounded_normal(gen, model.mu_s, model.sigma_s, n_model)
    return ks_test(data, reference).p_value


def pvalue_distribution_simulation(
    event_models: Sequence[EventModel],
    iterations: int = 100,
    seed: int = 0,
    n_model_samples: int = DEFAULT_MODEL_SAMPLES,
    workers: int = 1,
) -> np.ndarray:
    """Replay every event ``iterations`` times under the Gaussian hypothesis.

    Each replay draws ``n_scores`` rounded-Gaussian scores and KS-tests them
    against a fresh ``n_model_samples``-draw model with the same moments.
    Returns an ``(iterations, len(event_models))`` array of p-values; row
    ``i`` is season replay ``i``.
    """
    models = list(event_models)
    if not models:
        raise InsufficientDataError("at least one event model is required")
    if iterations < 1:
        raise ValidationError("iterations must be >= 1")
    jobs = [(e, i) for i in range(iterations) for e in range(len(models))]

    def run(job):
        e, i = job
        return _simulated_pvalue(models[e], seed, e, i, n_model_samples)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            values = list(pool.map(run, jobs))
    else:
        values = [run(j) for j in jobs]
    return np.asarray(values, dtype=np.float64).reshape(iterations, len(models))


def compare_pvalue_distributions(observed, simulated) -> KsResult:
    """KS test of observed per-event p-values against the simulated ensemble."""
    return ks_test(observed, np.asarray(simulated).ravel())
