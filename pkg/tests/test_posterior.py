import itertools
import math

import numpy as np
import pytest
from scipy.special import comb

from ebpred.errors import ConfigError, ModeMismatch, TooLarge
from ebpred.linalg import Dataset, fit_configuration
from ebpred.posterior import (
    HyperParams,
    InverseGamma,
    Known,
    enumerate_posterior,
    exact_inclusion_probs,
    log_marginal_post_known,
    log_marginal_post_unknown,
    log_prior_config,
    sample_beta_given_S,
    sample_sigma2_given_S,
)


def _brute_posterior(X, y, R, alpha, gamma, a, c, sigma2=None, a0=None, b0=None):
    """Term-by-term evaluation with lstsq fits and float binomials."""
    n, p = X.shape
    out = {}
    for s in range(R + 1):
        for S in itertools.combinations(range(p), s):
            if s:
                beta, *_ = np.linalg.lstsq(X[:, S], y, rcond=None)
                rss = float(np.sum((y - X[:, S] @ beta) ** 2))
            else:
                rss = float(y @ y)
            prior = (c * p**a) ** (-s) / comb(p, s)
            w = prior * (gamma / (alpha + gamma)) ** (s / 2)
            if sigma2 is not None:
                w *= math.exp(-alpha / (2 * sigma2) * rss)
            else:
                w *= (b0 + alpha / 2 * rss) ** (-(a0 + alpha * n / 2))
            out[S] = w
    total = sum(out.values())
    return {S: w / total for S, w in out.items()}


@pytest.fixture
def tiny():
    rng = np.random.default_rng(11)
    X = rng.standard_normal((8, 5))
    y = 1.5 * X[:, 1] + rng.standard_normal(8)
    return Dataset(X, y)


def test_prior_ratio_identity():
    hp = HyperParams(a=0.05, c=1.0, R=10)
    p = 40
    for s in range(5):
        S, S1 = tuple(range(s)), tuple(range(s + 1))
        diff = log_prior_config(S1, hp, p) - log_prior_config(S, hp, p)
        expected = -math.log((p - s) / (s + 1)) - (math.log(1.0) + 0.05 * math.log(p))
        assert diff == pytest.approx(expected, rel=1e-12)


def test_prior_paper_constants():
    hp = HyperParams(R=10)
    diff = log_prior_config((4,), hp, 125) - log_prior_config((), hp, 125)
    assert diff == pytest.approx(-1.05 * math.log(125), rel=1e-12)


def test_prior_truncation():
    hp = HyperParams(R=2)
    assert log_prior_config((0, 1, 2), hp, 10) == -math.inf


def test_known_weight_empty_model(tiny):
    hp = HyperParams(R=3, sigma_mode=Known(1.0))
    fit = fit_configuration(tiny, ())
    w = log_marginal_post_known((), fit, hp, tiny.p)
    assert w == pytest.approx(log_prior_config((), hp, tiny.p) - 0.99 / 2 * tiny.yty)


def test_known_weight_monotone_in_rss(tiny):
    hp = HyperParams(R=3, sigma_mode=Known(1.0))
    f0, f1 = fit_configuration(tiny, (0,)), fit_configuration(tiny, (1,))
    w0 = log_marginal_post_known((0,), f0, hp, tiny.p)
    w1 = log_marginal_post_known((1,), f1, hp, tiny.p)
    assert (f1.rss < f0.rss) == (w1 > w0)


def test_known_enumeration_matches_brute_force(tiny):
    hp = HyperParams(R=3, sigma_mode=Known(1.0))
    got = dict(enumerate_posterior(tiny, hp))
    want = _brute_posterior(tiny.X, tiny.y, 3, 0.99, 0.005, 0.05, 1.0, sigma2=1.0)
    assert got.keys() == want.keys()
    for S in want:
        assert got[S] == pytest.approx(want[S], rel=1e-9, abs=1e-15)


def test_unknown_enumeration_matches_brute_force(tiny):
    hp = HyperParams(R=3, sigma_mode=InverseGamma(0.01, 4.0))
    got = dict(enumerate_posterior(tiny, hp))
    want = _brute_posterior(tiny.X, tiny.y, 3, 0.99, 0.005, 0.05, 1.0, a0=0.01, b0=4.0)
    for S in want:
        assert got[S] == pytest.approx(want[S], rel=1e-9, abs=1e-15)


def test_unknown_weight_on_zero_response():
    data = Dataset(np.random.default_rng(0).standard_normal((6, 3)), np.zeros(6))
    hp = HyperParams(R=2, sigma_mode=InverseGamma(0.01, 4.0))
    w = log_marginal_post_unknown((), fit_configuration(data, ()), hp, 3, 6)
    expected = log_prior_config((), hp, 3) - (0.01 + 0.99 * 6 / 2) * math.log(4.0)
    assert w == pytest.approx(expected)


def test_unknown_ranking_matches_known_for_fixed_size(tiny):
    hp_k = HyperParams(R=3, sigma_mode=Known(1.0))
    hp_u = HyperParams(R=3, sigma_mode=InverseGamma(0.01, 1e6))
    S_list = [(j,) for j in range(tiny.p)]
    fits = [fit_configuration(tiny, S) for S in S_list]
    wk = [log_marginal_post_known(S, f, hp_k, tiny.p) for S, f in zip(S_list, fits)]
    wu = [log_marginal_post_unknown(S, f, hp_u, tiny.p, tiny.n) for S, f in zip(S_list, fits)]
    assert np.argsort(wk).tolist() == np.argsort(wu).tolist()


def test_mode_mismatch(tiny):
    fit = fit_configuration(tiny, ())
    with pytest.raises(ModeMismatch):
        log_marginal_post_known((), fit, HyperParams(R=3), tiny.p)
    with pytest.raises(ModeMismatch):
        log_marginal_post_unknown((), fit, HyperParams(R=3, sigma_mode=Known(1.0)), tiny.p, tiny.n)
    with pytest.raises(ModeMismatch):
        sample_sigma2_given_S(fit, HyperParams(sigma_mode=Known(1.0)), tiny.n, np.random.default_rng(0))


def test_scale_invariance_known_mode(tiny):
    k = 3.7
    base = dict(enumerate_posterior(tiny, HyperParams(R=3, sigma_mode=Known(0.8))))
    scaled = dict(enumerate_posterior(Dataset(tiny.X, k * tiny.y), HyperParams(R=3, sigma_mode=Known(0.8 * k**2))))
    for S in base:
        assert scaled[S] == pytest.approx(base[S], abs=1e-10)


def test_enumeration_normalized_in_both_modes(tiny):
    for mode in (Known(1.0), InverseGamma()):
        post = enumerate_posterior(tiny, HyperParams(R=3, sigma_mode=mode))
        assert abs(sum(p for _, p in post) - 1.0) < 1e-12


def test_enumeration_single_covariate():
    data = Dataset(np.array([[1.0], [2.0], [0.5]]), [1.0, 1.5, 0.2])
    post = enumerate_posterior(data, HyperParams(R=1, c=2.0))
    assert len(post) == 2
    assert sum(p for _, p in post) == pytest.approx(1.0, abs=1e-12)


def test_enumeration_finds_strong_signal():
    rng = np.random.default_rng(42)
    X = rng.standard_normal((30, 10))
    y = 8 * X[:, 2] + rng.standard_normal(30)
    post = enumerate_posterior(Dataset(X, y), HyperParams(R=3))
    best = max(post, key=lambda sp: sp[1])
    assert best[0] == (2,)
    incl = exact_inclusion_probs(post, 10)
    assert incl[2] == pytest.approx(1.0, abs=1e-6)


def test_enumeration_too_large():
    rng = np.random.default_rng(0)
    data = Dataset(rng.standard_normal((60, 60)), rng.standard_normal(60))
    with pytest.raises(TooLarge):
        enumerate_posterior(data, HyperParams(R=10))


def test_beta_draws_location_and_covariance():
    Q, _ = np.linalg.qr(np.random.default_rng(7).standard_normal((20, 3)))
    y = Q @ np.array([1.0, -2.0, 0.5]) + 0.1 * np.random.default_rng(8).standard_normal(20)
    fit = fit_configuration(Dataset(Q, y), [0, 1, 2])
    hp = HyperParams(sigma_mode=Known(1.0))
    rng = np.random.default_rng(9)
    N = 100_000
    draws = np.array([sample_beta_given_S(fit, hp, 1.0, rng) for _ in range(N)])
    var = 1.0 / 0.995
    se = math.sqrt(var / N)
    assert np.all(np.abs(draws.mean(axis=0) - fit.beta_hat) < 4 * se)
    cov = np.cov(draws.T)
    # sampling sd of a variance estimate is var * sqrt(2 / N)
    np.testing.assert_allclose(np.diag(cov), var, atol=4 * var * math.sqrt(2 / N))
    off = cov[np.triu_indices(3, 1)]
    assert np.all(np.abs(off) < 4 * var / math.sqrt(N))


def test_beta_draw_empty_configuration():
    fit = fit_configuration(Dataset(np.ones((3, 1)), np.ones(3)), ())
    assert sample_beta_given_S(fit, HyperParams(), 1.0, np.random.default_rng(0)).shape == (0,)


def test_sigma2_inverse_gamma_mean_identity():
    # rss = 0 and a vanishing data term leave IG(a0, b0) with mean b0 / (a0 - 1)
    data = Dataset(np.eye(2), [0.0, 0.0])
    fit = fit_configuration(data, ())
    hp = HyperParams(alpha=1e-9, sigma_mode=InverseGamma(3.0, 2.0))
    draws = sample_sigma2_given_S(fit, hp, data.n, np.random.default_rng(0), size=400_000)
    assert draws.mean() == pytest.approx(1.0, rel=0.01)


def test_sigma2_mean_with_data():
    rng = np.random.default_rng(3)
    n = 100
    y = rng.standard_normal(n)
    y *= math.sqrt(100.0 / (y @ y))
    data = Dataset(rng.standard_normal((n, 2)), y)
    fit = fit_configuration(data, ())
    assert fit.rss == pytest.approx(100.0)
    hp = HyperParams(sigma_mode=InverseGamma(0.01, 4.0))
    draws = sample_sigma2_given_S(fit, hp, n, np.random.default_rng(1), size=100_000)
    assert np.all(draws > 0)
    assert draws.mean() == pytest.approx((4 + 49.5) / (0.01 + 49.5 - 1), rel=0.01)


def test_hyperparam_validation():
    with pytest.raises(ConfigError):
        HyperParams(alpha=1.0)
    with pytest.raises(ConfigError):
        HyperParams(gamma=0.0)
    with pytest.raises(ConfigError):
        HyperParams(alpha=0.99, gamma=0.1)
    with pytest.warns(UserWarning):
        HyperParams(alpha=0.99, gamma=0.1, force=True)
    rng = np.random.default_rng(0)
    data = Dataset(rng.standard_normal((5, 8)), rng.standard_normal(5))
    with pytest.raises(ConfigError):
        HyperParams(R=6).resolve(data)
    assert HyperParams().resolve(data).R == 5
