"""Metropolis-Hastings random walk over configurations.

The proposal picks uniformly among the moves available at the current
size (add one index, remove one index, or swap one in for one out) and
then picks the indices uniformly. Each step consumes exactly four
uniforms, which lets ``run_chain`` draw them in blocks.
"""

import bisect
import math
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, EmptyChain, SingularDesign
from .linalg import fit_configuration
from .posterior import log_marginal_post

ADD, REMOVE, SWAP = "add", "remove", "swap"

_BLOCK = 1 << 15


def available_moves(s, p, R):
    moves = []
    if s < R and s < p:
        moves.append(ADD)
    if s > 0:
        moves.append(REMOVE)
    if 0 < s < p:
        moves.append(SWAP)
    return moves


def _pick(u, k):
    return min(int(u * k), k - 1)


def _kth_outside(S, k):
    """The k-th smallest index not in the sorted tuple ``S``."""
    j = k
    for i in S:
        if i <= j:
            j += 1
        else:
            break
    return j


def _propose(S, p, R, u_move, u_out, u_in):
    s = len(S)
    moves = available_moves(s, p, R)
    move = moves[_pick(u_move, len(moves))]
    if move == ADD:
        j = _kth_outside(S, _pick(u_in, p - s))
        new = list(S)
        bisect.insort(new, j)
        log_ratio = (
            math.log(len(moves) / len(available_moves(s + 1, p, R)))
            + math.log(p - s)
            - math.log(s + 1)
        )
    elif move == REMOVE:
        i = _pick(u_out, s)
        new = list(S[:i] + S[i + 1 :])
        log_ratio = (
            math.log(len(moves) / len(available_moves(s - 1, p, R)))
            + math.log(s)
            - math.log(p - s + 1)
        )
    else:
        j = _kth_outside(S, _pick(u_in, p - s))
        i = _pick(u_out, s)
        new = list(S[:i] + S[i + 1 :])
        bisect.insort(new, j)
        log_ratio = 0.0
    return tuple(new), log_ratio, move


def propose(S, p, R, rng):
    """Draw a neighbouring configuration.

    Returns
    -------
    (tuple, float)
        The candidate and ``log q(S | S') - log q(S' | S)``.
    """
    u = rng.random(3)
    new, log_ratio, _ = _propose(tuple(S), p, R, *u.tolist())
    return new, log_ratio


class ModelSpaceTarget:
    """Unnormalized log posterior over configurations, with per-state caching.

    Singular configurations and those larger than ``R`` get weight ``-inf``.
    """

    def __init__(self, data, hp):
        self.data = data
        self.hp = hp.resolve(data)
        self._fits = {}
        self._logw = {}

    @property
    def p(self):
        return self.data.p

    @property
    def R(self):
        return self.hp.R

    def fit(self, S):
        fit = self._fits.get(S)
        if fit is None:
            fit = fit_configuration(self.data, S)
            self._fits[S] = fit
        return fit

    def log_weight(self, S):
        w = self._logw.get(S)
        if w is None:
            if len(S) > self.hp.R:
                w = -math.inf
            else:
                try:
                    fit = self.fit(S)
                except SingularDesign:
                    w = -math.inf
                else:
                    w = log_marginal_post(S, fit, self.hp, self.data.p, self.data.n)
            self._logw[S] = w
        return w

    def initial_state(self):
        """Single covariate with the largest absolute correlation with ``y``."""
        X, y = self.data.X, self.data.y
        Xc = X - X.mean(axis=0)
        yc = y - y.mean()
        denom = np.sqrt((Xc * Xc).sum(axis=0) * (yc @ yc))
        with np.errstate(invalid="ignore", divide="ignore"):
            corr = np.abs(Xc.T @ yc) / denom
        corr = np.nan_to_num(corr, nan=0.0, posinf=0.0)
        S = (int(np.argmax(corr)),)
        if math.isfinite(self.log_weight(S)):
            return S
        return ()


def _accept(logw_new, logw_old, log_ratio, log_u):
    if logw_new == -math.inf:
        return False
    return log_u < logw_new - logw_old + log_ratio


def mh_step(S, logw, target, rng):
    """One Metropolis-Hastings transition. Returns ``(state, logw, accepted)``."""
    u = rng.random(4)
    new, log_ratio, _ = _propose(S, target.p, target.R, u[0], u[1], u[2])
    logw_new = target.log_weight(new)
    if _accept(logw_new, logw, log_ratio, math.log(u[3]) if u[3] > 0 else -math.inf):
        return new, logw_new, True
    return S, logw, False


@dataclass
class McmcSettings:
    iters: int = 20_000
    burnin: int = 5_000
    thin: int = 1
    seed: int = 0
    draw_sigma2: bool = False

    def __post_init__(self):
        if self.burnin < 0 or self.iters <= self.burnin:
            raise ConfigError(f"need iters > burnin >= 0, got iters={self.iters}, burnin={self.burnin}")
        if self.thin < 1:
            raise ConfigError(f"thin must be >= 1, got {self.thin}")


@dataclass
class ConfigChain:
    states: list
    log_weights: np.ndarray
    accept_count: int
    n_steps: int
    seed: int
    sigma2_draws: np.ndarray | None = None
    settings: McmcSettings = field(default=None, repr=False)

    def __len__(self):
        return len(self.states)

    @property
    def acceptance_rate(self):
        return self.accept_count / self.n_steps if self.n_steps else 0.0


def run_chain(target, settings=None, init=None):
    """Run the sampler on ``target`` and keep post-burn-in, thinned states."""
    settings = settings or McmcSettings()
    rng = np.random.default_rng(settings.seed)
    p, R = target.p, target.R
    S = tuple(init) if init is not None else target.initial_state()
    logw = target.log_weight(S)
    if logw == -math.inf:
        raise ConfigError(f"initial state {S} has zero posterior mass")

    states, weights = [], []
    accepted = 0
    t = 0
    log_weight = target.log_weight
    burnin, thin = settings.burnin, settings.thin
    while t < settings.iters:
        block = min(_BLOCK, settings.iters - t)
        u = rng.random((block, 4))
        with np.errstate(divide="ignore"):
            log_u = np.log(u[:, 3]).tolist()
        u_move, u_out, u_in = u[:, 0].tolist(), u[:, 1].tolist(), u[:, 2].tolist()
        for k in range(block):
            new, log_ratio, _ = _propose(S, p, R, u_move[k], u_out[k], u_in[k])
            logw_new = log_weight(new)
            if logw_new != -math.inf and log_u[k] < logw_new - logw + log_ratio:
                S, logw = new, logw_new
                accepted += 1
            if t >= burnin and (t - burnin) % thin == 0:
                states.append(S)
                weights.append(logw)
            t += 1

    chain = ConfigChain(
        states=states,
        log_weights=np.asarray(weights),
        accept_count=accepted,
        n_steps=settings.iters,
        seed=settings.seed,
        settings=settings,
    )
    if settings.draw_sigma2 and not target.hp.known:
        chain.sigma2_draws = _draw_sigma2(chain, target, settings.seed)
    return chain


def _draw_sigma2(chain, target, seed):
    rng = np.random.default_rng([seed, 1])
    hp, n = target.hp, target.data.n
    shape = hp.sigma_mode.a0 + 0.5 * hp.alpha * n
    scales = np.array([hp.sigma_mode.b0 + 0.5 * hp.alpha * target.fit(S).rss for S in chain.states])
    return scales / rng.gamma(shape, 1.0, size=len(scales))


def state_frequencies(chain):
    if not chain.states:
        raise EmptyChain("chain has no retained states")
    counts = Counter(chain.states)
    total = len(chain.states)
    return {S: c / total for S, c in counts.items()}


def inclusion_probs(chain, p):
    freqs = state_frequencies(chain)
    out = np.zeros(p)
    for S, f in freqs.items():
        for j in S:
            out[j] += f
    return out


def posterior_mean_beta(chain, target):
    """Posterior mean of the full coefficient vector, averaging ``beta_hat_S`` over states."""
    freqs = state_frequencies(chain)
    beta = np.zeros(target.p)
    for S, f in freqs.items():
        if S:
            beta[list(S)] += f * target.fit(S).beta_hat
    return beta


def total_variation(p_map, q_map):
    keys = set(p_map) | set(q_map)
    return 0.5 * sum(abs(p_map.get(k, 0.0) - q_map.get(k, 0.0)) for k in keys)
