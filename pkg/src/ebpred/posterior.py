"""Empirical prior and fractional posterior over configurations.

All weights are natural-log and defined up to an additive constant shared
by every configuration; the normalizer of the model-size mass function is
dropped since it cancels in every ratio.
"""

import itertools
import math
import warnings
from dataclasses import dataclass, replace

import numpy as np
from scipy.linalg import solve_triangular
from scipy.special import logsumexp

from .errors import ConfigError, ModeMismatch, SingularDesign, TooLarge
from .linalg import fit_configuration

ENUMERATION_LIMIT = 10**6


@dataclass(frozen=True)
class Known:
    """Error variance treated as known (or plugged in)."""

    sigma2: float


@dataclass(frozen=True)
class InverseGamma:
    """Inverse-gamma(shape=a0, scale=b0) prior on the error variance."""

    a0: float = 0.01
    b0: float = 4.0


@dataclass(frozen=True)
class HyperParams:
    alpha: float = 0.99
    gamma: float = 0.005
    a: float = 0.05
    c: float = 1.0
    R: int | None = None
    sigma_mode: Known | InverseGamma = InverseGamma()
    force: bool = False

    def __post_init__(self):
        if not 0 < self.alpha < 1:
            raise ConfigError(f"alpha must lie in (0, 1), got {self.alpha}")
        if not self.gamma > 0:
            raise ConfigError(f"gamma must be positive, got {self.gamma}")
        if not (self.a > 0 and self.c > 0):
            raise ConfigError("complexity constants a and c must be positive")
        if self.R is not None and self.R < 1:
            raise ConfigError(f"R must be a positive integer, got {self.R}")
        mode = self.sigma_mode
        if isinstance(mode, Known):
            if not mode.sigma2 > 0:
                raise ConfigError(f"sigma2 must be positive, got {mode.sigma2}")
        elif isinstance(mode, InverseGamma):
            if not (mode.a0 > 0 and mode.b0 > 0):
                raise ConfigError("inverse-gamma a0 and b0 must be positive")
        else:
            raise ConfigError(f"unknown sigma mode {mode!r}")
        if self.alpha + self.gamma > 1:
            if not self.force:
                raise ConfigError(
                    f"alpha + gamma = {self.alpha + self.gamma} > 1 makes prediction "
                    "intervals narrower than the oracle; pass force=True to override"
                )
            warnings.warn("alpha + gamma > 1 (forced)", stacklevel=2)

    @property
    def known(self):
        return isinstance(self.sigma_mode, Known)

    @property
    def shrink(self):
        """``alpha + gamma``, the posterior precision multiplier."""
        return self.alpha + self.gamma

    def resolve(self, data):
        """Fill in ``R`` from the design and check size constraints against it."""
        n, p = data.n, data.p
        R = data.rank if self.R is None else self.R
        if R > min(n, p):
            raise ConfigError(f"R={R} exceeds min(n, p)={min(n, p)}")
        if self.c * p**self.a <= 1:
            raise ConfigError(f"c * p**a = {self.c * p ** self.a} must exceed 1")
        return replace(self, R=R) if R != self.R else self


def log_prior_config(S, hp, p):
    s = len(S)
    if hp.R is not None and s > hp.R:
        return -math.inf
    log_binom = math.lgamma(p + 1) - math.lgamma(s + 1) - math.lgamma(p - s + 1)
    return -log_binom - s * (math.log(hp.c) + hp.a * math.log(p))


def log_marginal_post_known(S, fit, hp, p):
    if not hp.known:
        raise ModeMismatch("known-variance weight requested under inverse-gamma mode")
    lp = log_prior_config(S, hp, p)
    if lp == -math.inf:
        return lp
    s = len(S)
    return (
        lp
        + 0.5 * s * math.log(hp.gamma / hp.shrink)
        - hp.alpha * fit.rss / (2.0 * hp.sigma_mode.sigma2)
    )


def log_marginal_post_unknown(S, fit, hp, p, n):
    if hp.known:
        raise ModeMismatch("inverse-gamma weight requested under known-variance mode")
    lp = log_prior_config(S, hp, p)
    if lp == -math.inf:
        return lp
    a0, b0 = hp.sigma_mode.a0, hp.sigma_mode.b0
    s = len(S)
    return (
        lp
        + 0.5 * s * math.log(hp.gamma / hp.shrink)
        - (a0 + 0.5 * hp.alpha * n) * math.log(b0 + 0.5 * hp.alpha * fit.rss)
    )


def log_marginal_post(S, fit, hp, p, n):
    """Dispatch to the weight matching ``hp.sigma_mode``."""
    if hp.known:
        return log_marginal_post_known(S, fit, hp, p)
    return log_marginal_post_unknown(S, fit, hp, p, n)


def sigma2_posterior_params(fit, hp, n):
    """Shape and scale of the inverse-gamma conditional posterior of sigma^2."""
    if hp.known:
        raise ModeMismatch("sigma^2 has no posterior under known-variance mode")
    shape = hp.sigma_mode.a0 + 0.5 * hp.alpha * n
    scale = hp.sigma_mode.b0 + 0.5 * hp.alpha * fit.rss
    return shape, scale


def sample_beta_given_S(fit, hp, sigma2, rng):
    """Draw from N(beta_hat_S, sigma2 / (alpha + gamma) * (X_S^T X_S)^{-1})."""
    if fit.size == 0:
        return np.zeros(0)
    z = rng.standard_normal(fit.size)
    # L^{-T} z has covariance (L L^T)^{-1}
    dev = solve_triangular(fit.chol.T, z, lower=False)
    return fit.beta_hat + math.sqrt(sigma2 / hp.shrink) * dev


def sample_sigma2_given_S(fit, hp, n, rng, size=None):
    shape, scale = sigma2_posterior_params(fit, hp, n)
    return scale / rng.gamma(shape, 1.0, size=size)


def _count_models(p, R):
    return sum(math.comb(p, s) for s in range(R + 1))


def enumerate_posterior(data, hp):
    """Exact normalized posterior over all configurations with ``|S| <= R``.

    Singular configurations carry zero mass and are omitted.

    Returns
    -------
    list of (tuple, float)
        Configurations in size-then-lexicographic order with probabilities.
    """
    hp = hp.resolve(data)
    total = _count_models(data.p, hp.R)
    if total > ENUMERATION_LIMIT:
        raise TooLarge(f"{total} configurations exceed the enumeration limit {ENUMERATION_LIMIT}")
    configs, logw = [], []
    for s in range(hp.R + 1):
        for S in itertools.combinations(range(data.p), s):
            try:
                fit = fit_configuration(data, S)
            except SingularDesign:
                continue
            configs.append(S)
            logw.append(log_marginal_post(S, fit, hp, data.p, data.n))
    logw = np.asarray(logw)
    probs = np.exp(logw - logsumexp(logw))
    return list(zip(configs, probs.tolist()))


def exact_inclusion_probs(posterior, p):
    out = np.zeros(p)
    for S, prob in posterior:
        for j in S:
            out[j] += prob
    return out
