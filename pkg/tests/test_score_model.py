import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from gaussgolf.errors import DomainError, InsufficientDataError, ValidationError
from gaussgolf.score_model import (
    discretized_pmf,
    empirical_distribution,
    fit_moments,
    gaussian_pdf,
    normal_cdf,
    round_half_away,
    sample_model,
)


def test_fit_moments_constant():
    m = fit_moments([72, 72, 72, 72])
    assert m.mu_s == 72.0
    assert m.sigma_s == 0.0
    assert m.n_scores == 4


def test_fit_moments_three_values():
    m = fit_moments([70, 72, 74])
    assert m.mu_s == 72.0
    # population std: sqrt((4 + 0 + 4) / 3)
    assert m.sigma_s == pytest.approx(1.632993161855452, abs=1e-14)


def test_fit_moments_qschool_parameters():
    rng = np.random.default_rng(2007)
    scores = round_half_away(70.8 + 2.6 * rng.standard_normal(948))
    m = fit_moments(scores)
    assert m.n_scores == 948
    assert m.mu_s == pytest.approx(70.8, abs=0.25)
    assert m.sigma_s == pytest.approx(2.6, abs=0.2)


@pytest.mark.parametrize("bad", [[], [71]])
def test_fit_moments_insufficient(bad):
    with pytest.raises(InsufficientDataError, match="insufficient data"):
        fit_moments(bad)


def test_fit_moments_rejects_nonpositive():
    with pytest.raises(ValidationError):
        fit_moments([70, 0, 71])


def test_empirical_distribution_counts():
    d = empirical_distribution([70, 70, 72, 74]).as_dict()
    assert d == {70: (0.5, math.sqrt(2) / 4), 72: (0.25, 0.25), 74: (0.25, 0.25)}


def test_empirical_distribution_single():
    d = empirical_distribution([71])
    assert d.bins == ((71, 1.0, 1.0),)
    assert d.total_count == 1


def test_empirical_distribution_empty():
    with pytest.raises(InsufficientDataError):
        empirical_distribution([])


@given(st.lists(st.integers(55, 100), min_size=1, max_size=1000))
def test_empirical_distribution_invariants(scores):
    d = empirical_distribution(scores)
    assert abs(sum(p for _, p, _ in d.bins) - 1.0) < 1e-12
    for (s, p, u), c in zip(d.bins, d.counts):
        assert c == scores.count(s)
        assert 0.0 <= p <= 1.0
        assert u == math.sqrt(c) / len(scores)


def test_sample_model_mean():
    m = sample_model(70.8, 2.6, 100_000, seed=11)
    assert m.samples.dtype.kind == "i"
    assert len(m.samples) == 100_000
    assert abs(m.samples.mean() - 70.8) < 5 * 2.6 / math.sqrt(100_000)


def test_sample_model_degenerate():
    assert np.all(sample_model(70.0, 0.0, 10, seed=1).samples == 70)
    # halves round away from zero
    assert np.all(sample_model(70.5, 0.0, 10, seed=1).samples == 71)


def test_sample_model_deterministic():
    a = sample_model(72.1, 3.0, 1000, seed=5).samples
    b = sample_model(72.1, 3.0, 1000, seed=5).samples
    c = sample_model(72.1, 3.0, 1000, seed=6).samples
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)


def test_sample_model_rejects_negative_sigma():
    with pytest.raises(ValidationError):
        sample_model(70.0, -1.0, 10)


def test_round_half_away():
    x = np.array([-2.5, -1.5, -0.5, -0.49, 0.0, 0.49, 0.5, 1.5, 2.5, 70.5, 0.49999999999999994])
    assert round_half_away(x).tolist() == [-3, -2, -1, 0, 0, 0, 1, 2, 3, 71, 0]


@pytest.mark.parametrize("x", np.linspace(-9, 9, 73))
def test_normal_cdf_matches_high_precision(x):
    exact = float(mpmath.ncdf(mpmath.mpf(float(x))))
    assert abs(normal_cdf(float(x)) - exact) <= 1e-12


def test_discretized_pmf_center():
    assert discretized_pmf(70, 1, 70) == pytest.approx(0.3829249225480262, abs=1e-12)


def test_discretized_pmf_symmetry():
    assert discretized_pmf(70, 1, 69) == pytest.approx(discretized_pmf(70, 1, 71), abs=1e-15)


@pytest.mark.parametrize("mu,sigma", [(70, 1), (70.8, 2.6), (75.3, 3.4), (68.2, 0.3)])
def test_discretized_pmf_normalized(mu, sigma):
    lo, hi = math.floor(mu - 10 * sigma), math.ceil(mu + 10 * sigma)
    assert abs(sum(discretized_pmf(mu, sigma, k) for k in range(lo, hi + 1)) - 1.0) < 1e-12


def test_discretized_pmf_rejects_zero_sigma():
    with pytest.raises(DomainError):
        discretized_pmf(70, 0, 70)


def test_pmf_agrees_with_sampled_frequencies():
    mu, sigma, n = 70.8, 2.6, 100_000
    samples = sample_model(mu, sigma, n, seed=3).samples
    values, counts = np.unique(samples, return_counts=True)
    for v, c in zip(values, counts):
        p = discretized_pmf(mu, sigma, int(v))
        assert abs(c / n - p) <= 4 * math.sqrt(p * (1 - p) / n) + 1e-12


@pytest.mark.parametrize("mu,sigma", [(70.8, 2.6), (0.0, 1.0), (76.2, 3.3)])
def test_gaussian_pdf_integrates_to_one(mu, sigma):
    total, _ = integrate.quad(gaussian_pdf, mu - 10 * sigma, mu + 10 * sigma, args=(mu, sigma),
                              epsabs=1e-13, epsrel=1e-13, limit=200)
    assert abs(total - 1.0) < 1e-9


@settings(max_examples=25, deadline=None)
@given(mu=st.floats(65, 78), sigma=st.floats(1.0, 4.0), seed=st.integers(0, 2**32))
def test_fit_sample_fit_roundtrip(mu, sigma, seed):
    n = 20_000
    fit = fit_moments(sample_model(mu, sigma, n, seed).samples)
    assert abs(fit.mu_s - mu) <= 5 * sigma / math.sqrt(n)
    # Rounding adds 1/12 stroke^2 of variance on top of sigma^2.
    assert abs(fit.sigma_s - math.sqrt(sigma**2 + 1 / 12)) <= 5 * sigma / math.sqrt(2 * n)
