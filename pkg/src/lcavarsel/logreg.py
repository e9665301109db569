"""Multinomial logistic regression of one categorical variable on others.

Predictors are dummy coded against their first level and the response's
first category is the softmax reference, so the parameter count is
``(C_response - 1) * (1 + sum(C_r - 1))``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import linalg
from scipy.special import logsumexp

from .data import CategoricalDataset
from .lca import compress_rows

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class LogRegConfig:
    max_iter: int = 100
    grad_tol: float = 1e-8
    # a zero-count cell fitted below this probability signals separation
    sep_tol: float = 1e-8


@dataclass(frozen=True, eq=False)
class LogRegModel:
    response: int
    predictors: tuple[int, ...]
    coefficients: np.ndarray  # (C_response - 1, 1 + sum(C_r - 1))
    loglik: float
    n_params: int
    n_obs: int
    converged: bool
    n_iter: int = 0
    separated: bool = False

    @property
    def bic(self) -> float:
        return 2.0 * self.loglik - self.n_params * math.log(self.n_obs)

    def to_dict(self, var_names: Sequence[str] | None = None) -> dict:
        name = (lambda j: var_names[j]) if var_names is not None else (lambda j: j)
        return {
            "response": name(self.response),
            "predictors": [name(j) for j in self.predictors],
            "coefficients": self.coefficients.tolist(),
            "loglik": self.loglik,
            "bic": self.bic,
            "n_params": self.n_params,
            "converged": self.converged,
        }


def design_matrix(patterns: np.ndarray, n_categories: Sequence[int]) -> np.ndarray:
    """Intercept plus treatment-coded dummies for each categorical column."""
    cols = [np.ones(patterns.shape[0])]
    for j, c in enumerate(n_categories):
        for level in range(1, c):
            cols.append((patterns[:, j] == level).astype(float))
    return np.column_stack(cols)


def _loglik(beta, X, Y):
    eta = np.zeros(Y.shape)
    eta[:, 1:] = X @ beta.T
    logp = eta - logsumexp(eta, axis=1, keepdims=True)
    return float(np.sum(Y * logp)), logp


def _neg_hessian(X, n, P):
    K = P.shape[1] - 1
    D = X.shape[1]
    A = np.empty((K * D, K * D))
    Pk = P[:, 1:]
    for c in range(K):
        for d in range(c, K):
            w = -n * Pk[:, c] * Pk[:, d]
            if c == d:
                w = w + n * Pk[:, c]
            block = (X * w[:, None]).T @ X
            A[c * D:(c + 1) * D, d * D:(d + 1) * D] = block
            if d != c:
                A[d * D:(d + 1) * D, c * D:(c + 1) * D] = block.T
    return A


def _newton_step(A, g):
    try:
        return linalg.cho_solve(linalg.cho_factor(A, check_finite=False), g, check_finite=False)
    except linalg.LinAlgError:
        return np.linalg.lstsq(A, g, rcond=None)[0]


def fit_multinom(
    data: CategoricalDataset,
    response: int,
    predictors: Sequence[int] = (),
    config: LogRegConfig | None = None,
) -> LogRegModel:
    """Maximum-likelihood softmax regression by damped Newton ascent.

    Under (quasi-)separation the maximum is only approached as coefficients
    diverge; iteration then runs until the cap, or until the likelihood stops
    changing in floating point, and ``converged`` is False. The attained
    log-likelihood is still a valid (finite) value for BIC.
    """
    config = config or LogRegConfig()
    predictors = tuple(sorted(set(int(p) for p in predictors)))
    if response in predictors:
        raise ValueError("response cannot be one of its predictors")
    n = data.n_rows
    y = data.codes[:, response]
    C = data.n_categories[response]
    pcat = [data.n_categories[p] for p in predictors]
    if predictors:
        patterns, _, inverse = compress_rows(data.codes[:, predictors], pcat)
    else:
        patterns, inverse = np.zeros((1, 0), dtype=np.int64), np.zeros(n, dtype=np.int64)
    U = patterns.shape[0]
    Y = np.bincount(inverse * C + y, minlength=U * C).reshape(U, C).astype(float)
    n_u = Y.sum(axis=1)
    X = design_matrix(patterns, pcat)
    K, D = C - 1, X.shape[1]

    beta = np.zeros((K, D))
    marg = Y.sum(axis=0) + 0.5
    beta[:, 0] = np.log(marg[1:] / marg[0])
    ll, logp = _loglik(beta, X, Y)
    converged = separated = False
    it = 0
    for it in range(1, config.max_iter + 1):
        P = np.exp(logp)
        grad = ((Y[:, 1:] - n_u[:, None] * P[:, 1:]).T @ X)
        separated = bool(np.any((Y == 0) & (P < config.sep_tol)))
        if np.max(np.abs(grad)) < config.grad_tol and not separated:
            converged = True
            it -= 1
            break
        step = _newton_step(_neg_hessian(X, n_u, P), grad.ravel()).reshape(K, D)
        t = 1.0
        while True:
            cand = beta + t * step
            ll_new, logp_new = _loglik(cand, X, Y)
            if ll_new >= ll:
                break
            t *= 0.5
            if t < 1e-10:
                ll_new = None
                break
        if ll_new is None:  # no ascent direction left in floating point
            break
        gain = ll_new - ll
        beta, ll, logp = cand, ll_new, logp_new
        if separated and gain <= 1e-12 * (1.0 + abs(ll)):
            break
    return LogRegModel(
        response=response,
        predictors=predictors,
        coefficients=beta,
        loglik=min(ll, 0.0),
        n_params=K * D,
        n_obs=n,
        converged=converged,
        n_iter=it,
        separated=separated and not converged,
    )


def select_predictors(
    data: CategoricalDataset,
    response: int,
    candidates: Sequence[int],
    config: LogRegConfig | None = None,
    cache: dict | None = None,
) -> LogRegModel:
    """Backward stepwise choice of predictors by regression BIC.

    Starts from all candidates, takes two removal steps, then alternates
    removal and inclusion until a full pass changes nothing. Removal drops
    the argmin of BIC(full) - BIC(without j) when it is <= 0; inclusion adds
    the argmax of BIC(with k) - BIC(current) when it is > 0. The empty
    predictor set is a legal outcome. Ties resolve to the lowest index.
    """
    cands = tuple(sorted(set(int(c) for c in candidates)))
    if response in cands:
        raise ValueError("response cannot be a candidate predictor")
    if cache is None:
        cache = {}

    def fit(preds) -> LogRegModel:
        key = (response, tuple(sorted(preds)))
        model = cache.get(key)
        if model is None:
            model = cache[key] = fit_multinom(data, response, key[1], config)
        return model

    chosen = list(cands)
    dropped: list[int] = []
    current = fit(chosen)

    def removal() -> bool:
        nonlocal current
        if not chosen:
            return False
        diffs = [(current.bic - fit([p for p in chosen if p != j]).bic, j) for j in chosen]
        best_diff, j = min(diffs, key=lambda t: t[0])
        if best_diff <= 0:
            chosen.remove(j)
            dropped.append(j)
            current = fit(chosen)
            return True
        return False

    def inclusion() -> bool:
        nonlocal current
        if not dropped:
            return False
        diffs = [(fit(chosen + [k]).bic - current.bic, k) for k in sorted(dropped)]
        best_diff, k = max(diffs, key=lambda t: t[0])
        if best_diff > 0:
            dropped.remove(k)
            chosen.append(k)
            chosen.sort()
            current = fit(chosen)
            return True
        return False

    removal()
    cap = max(1, 2 * len(cands))
    for _ in range(cap):
        changed = removal()
        changed = inclusion() or changed
        if not changed:
            break
    else:
        log.warning("stepwise predictor search for variable %d hit the %d-pass cap", response, cap)
    return current
