"""Posterior predictive distribution at a single query row.

Given a configuration ``S`` the predictive is normal (known variance) or a
location-scale Student-t (inverse-gamma variance). Averaging over the
posterior of ``S`` gives a finite mixture, sampled here by resampling
chain states.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy import stats

from .errors import DimensionMismatch, EmptyChain, TooFewDraws
from .linalg import quadratic_form

MIN_DRAWS = 100


@dataclass(frozen=True)
class LocationScale:
    """Normal (``df = inf``) or Student-t law with location ``loc`` and scale ``scale``."""

    loc: float
    scale: float
    df: float = math.inf

    @property
    def dist(self):
        if math.isinf(self.df):
            return stats.norm(loc=self.loc, scale=self.scale)
        return stats.t(self.df, loc=self.loc, scale=self.scale)

    def pdf(self, y):
        return self.dist.pdf(y)

    def cdf(self, y):
        return self.dist.cdf(y)

    def ppf(self, q):
        return self.dist.ppf(q)

    def sample(self, rng, size=None):
        if math.isinf(self.df):
            z = rng.standard_normal(size)
        else:
            z = rng.standard_t(self.df, size)
        return self.loc + self.scale * z


def _check_query(x, p):
    x = np.asarray(x, dtype=float).ravel()
    if x.shape[0] != p:
        raise DimensionMismatch(f"query row has length {x.shape[0]}, expected p={p}")
    if not np.all(np.isfinite(x)):
        raise ValueError("query row must be finite")
    return x


def conditional_predictive(fit, hp, x, sigma2=None):
    """Predictive law of a new response at ``x`` given the configuration of ``fit``.

    In known-variance mode ``sigma2`` defaults to the value in ``hp``.
    """
    x = np.asarray(x, dtype=float).ravel()
    x_s = x[list(fit.indices)] if fit.size else np.zeros(0)
    loc = float(x_s @ fit.beta_hat) if fit.size else 0.0
    inflation = 1.0 + quadratic_form(fit, x_s) / hp.shrink
    if hp.known or sigma2 is not None:
        s2 = hp.sigma_mode.sigma2 if sigma2 is None else sigma2
        return LocationScale(loc, math.sqrt(s2 * inflation))
    a0, b0 = hp.sigma_mode.a0, hp.sigma_mode.b0
    n = fit.n
    shape = a0 + 0.5 * hp.alpha * n
    scale2 = (b0 + 0.5 * hp.alpha * fit.rss) / shape * inflation
    return LocationScale(loc, math.sqrt(scale2), df=2.0 * shape)


def predictive_draw_given_S(fit, hp, x, rng, sigma2=None, size=None):
    x = np.asarray(x, dtype=float).ravel()
    if fit.size and x.shape[0] <= fit.indices[-1]:
        raise DimensionMismatch(f"query row of length {x.shape[0]} misses index {fit.indices[-1]}")
    return conditional_predictive(fit, hp, x, sigma2).sample(rng, size)


@dataclass
class PredictiveDraws:
    draws: np.ndarray
    point: float
    level: float
    interval: tuple


def sample_predictive(chain, target, x, m=10_000, rng=None, level=0.95):
    """Draw ``m`` values from the predictive mixture at query row ``x``.

    Chain states are resampled uniformly with replacement, so ``m`` is
    independent of the chain length.
    """
    if m < 1:
        raise ValueError("m must be positive")
    if not chain.states:
        raise EmptyChain("chain has no retained states")
    rng = np.random.default_rng(rng)
    x = _check_query(x, target.p)
    pick = rng.integers(len(chain.states), size=m)
    draws = np.empty(m)
    # group picks by state so each distinct configuration is fit once
    by_state = {}
    for k, i in enumerate(pick.tolist()):
        by_state.setdefault(chain.states[i], []).append(k)
    for S in sorted(by_state, key=lambda s: (len(s), s)):
        idx = np.asarray(by_state[S])
        law = conditional_predictive(target.fit(S), target.hp, x)
        draws[idx] = law.sample(rng, idx.size)
    interval = prediction_interval(draws, level) if m >= MIN_DRAWS else (math.nan, math.nan)
    return PredictiveDraws(draws=draws, point=float(draws.mean()), level=level, interval=interval)


def prediction_interval(draws, level=0.95):
    """Equal-tailed interval from empirical quantiles (linear interpolation)."""
    draws = np.asarray(draws, dtype=float).ravel()
    if draws.size < MIN_DRAWS:
        raise TooFewDraws(f"need at least {MIN_DRAWS} draws, got {draws.size}")
    if not 0 < level < 1:
        raise ValueError(f"level must lie in (0, 1), got {level}")
    zeta = 1.0 - level
    lo, hi = np.quantile(draws, [zeta / 2, 1 - zeta / 2])
    return float(lo), float(hi)


def mixture_cdf(components, y):
    """CDF of a finite mixture given ``(weight, LocationScale)`` pairs."""
    y = np.asarray(y, dtype=float)
    return sum(w * law.cdf(y) for w, law in components)


def exact_predictive_components(posterior, target, x):
    """Mixture components from an enumerated posterior (small problems only)."""
    x = _check_query(x, target.p)
    return [(prob, conditional_predictive(target.fit(S), target.hp, x)) for S, prob in posterior if prob > 0]


def oracle_predictive(target, S_star, x):
    """Predictive law at ``x`` when the true configuration is known.

    Raises ``SingularDesign`` if ``X_{S*}`` is rank deficient.
    """
    x = _check_query(x, target.p)
    S_star = tuple(sorted(S_star))
    return conditional_predictive(target.fit(S_star), target.hp, x)


def exact_interval(target, S_star, x, level=0.95):
    """Classical fixed-model prediction interval for the true configuration.

    With known variance this is ``psi_hat +- z * sigma * sqrt(1 + q)``;
    otherwise ``psi_hat +- t_{n-s} * sigma_hat * sqrt(1 + q)`` with
    ``sigma_hat^2 = rss / (n - s)``. Both have exact frequentist coverage.
    """
    x = _check_query(x, target.p)
    fit = target.fit(tuple(sorted(S_star)))
    x_s = x[list(fit.indices)]
    loc = float(x_s @ fit.beta_hat)
    q = quadratic_form(fit, x_s)
    upper = 1 - (1 - level) / 2
    if target.hp.known:
        half = stats.norm.ppf(upper) * math.sqrt(target.hp.sigma_mode.sigma2 * (1 + q))
    else:
        dof = fit.n - fit.size
        half = stats.t.ppf(upper, dof) * math.sqrt(fit.rss / dof * (1 + q))
    return loc - half, loc + half


def bvm_diagnostic(chain, target, S_star, x, m=10_000, rng=None, grid_size=512):
    """Distance between the predictive sample and the oracle predictive.

    Returns the Kolmogorov-Smirnov statistic and the mean absolute gap
    between empirical and oracle CDFs over a grid spanning the oracle's
    0.1%-99.9% quantiles.
    """
    oracle = oracle_predictive(target, S_star, x)
    draws = sample_predictive(chain, target, x, m, rng).draws
    ks = stats.kstest(draws, oracle.cdf).statistic
    grid = np.linspace(oracle.ppf(0.001), oracle.ppf(0.999), grid_size)
    ecdf = np.searchsorted(np.sort(draws), grid, side="right") / draws.size
    return {"ks": float(ks), "mean_abs_diff": float(np.mean(np.abs(ecdf - oracle.cdf(grid))))}
