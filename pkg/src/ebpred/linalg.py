"""Least-squares summaries for a single configuration of active covariates.

A configuration is represented throughout the package as a strictly
increasing tuple of 0-based column indices.
"""

from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.linalg import solve_triangular

from .errors import DimensionMismatch, SingularDesign

# pivots below PIVOT_TOL * max(diag(X_S^T X_S)) are treated as rank loss
PIVOT_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class Dataset:
    """Design matrix ``X`` (n x p) and response ``y`` (n,)."""

    X: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        X = np.ascontiguousarray(self.X, dtype=float)
        y = np.asarray(self.y, dtype=float).ravel()
        if X.ndim != 2:
            raise DimensionMismatch(f"X must be 2-d, got shape {X.shape}")
        n, p = X.shape
        if n < 1 or p < 1:
            raise DimensionMismatch(f"X must be non-empty, got shape {X.shape}")
        if y.shape[0] != n:
            raise DimensionMismatch(f"y has length {y.shape[0]}, X has {n} rows")
        if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
            raise ValueError("X and y must contain only finite values")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)

    @property
    def n(self):
        return self.X.shape[0]

    @property
    def p(self):
        return self.X.shape[1]

    @cached_property
    def gram(self):
        return self.X.T @ self.X

    @cached_property
    def xty(self):
        return self.X.T @ self.y

    @cached_property
    def yty(self):
        return float(self.y @ self.y)

    @cached_property
    def rank(self):
        return int(np.linalg.matrix_rank(self.X))


def as_configuration(indices, p=None):
    """Normalize an iterable of indices into a sorted tuple, validating it."""
    S = tuple(sorted(int(i) for i in indices))
    if len(set(S)) != len(S):
        raise ValueError(f"configuration has duplicate indices: {S}")
    if S and (S[0] < 0 or (p is not None and S[-1] >= p)):
        raise ValueError(f"configuration {S} out of bounds for p={p}")
    return S


@dataclass(frozen=True, eq=False)
class LsFit:
    """Least-squares fit of ``y`` on ``X[:, indices]``.

    ``chol`` is the lower-triangular Cholesky factor of ``X_S^T X_S``.
    """

    indices: tuple
    beta_hat: np.ndarray
    chol: np.ndarray
    rss: float
    fitted: np.ndarray

    @property
    def size(self):
        return len(self.indices)

    @property
    def n(self):
        return self.fitted.shape[0]


def fit_configuration(data, S):
    """Least-squares fit for configuration ``S``.

    Raises
    ------
    SingularDesign
        If ``X_S^T X_S`` is not numerically positive definite.
    """
    S = as_configuration(S, data.p)
    if not S:
        return LsFit(
            indices=S,
            beta_hat=np.zeros(0),
            chol=np.zeros((0, 0)),
            rss=data.yty,
            fitted=np.zeros(data.n),
        )
    if len(S) > data.n:
        raise SingularDesign(f"|S|={len(S)} exceeds n={data.n}")
    idx = np.asarray(S)
    G = data.gram[np.ix_(idx, idx)]
    scale = float(np.max(np.diag(G)))
    if not scale > 0:
        raise SingularDesign(f"configuration {S} has all-zero columns")
    try:
        L = np.linalg.cholesky(G)
    except np.linalg.LinAlgError:
        raise SingularDesign(f"X_S^T X_S not positive definite for S={S}") from None
    if np.min(np.diag(L)) ** 2 < PIVOT_TOL * scale:
        raise SingularDesign(f"near-collinear columns in S={S}")
    z = solve_triangular(L, data.xty[idx], lower=True)
    beta = solve_triangular(L.T, z, lower=False)
    fitted = data.X[:, idx] @ beta
    resid = data.y - fitted
    return LsFit(indices=S, beta_hat=beta, chol=L, rss=float(resid @ resid), fitted=fitted)


def quadratic_form(fit, x_s):
    """Return ``x_S^T (X_S^T X_S)^{-1} x_S`` using the stored Cholesky factor."""
    x_s = np.asarray(x_s, dtype=float).ravel()
    if x_s.shape[0] != fit.size:
        raise DimensionMismatch(f"x_S has length {x_s.shape[0]}, configuration has {fit.size}")
    if fit.size == 0:
        return 0.0
    w = solve_triangular(fit.chol, x_s, lower=True)
    return float(w @ w)
