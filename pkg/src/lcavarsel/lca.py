"""Latent class models fitted by EM with random restarts."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import _backend
from .data import CategoricalDataset


class FitFailure(RuntimeError):
    """Every restart ended with a vanishing class."""


@dataclass(frozen=True)
class FitConfig:
    n_restarts: int = 10
    max_iter: int = 1000
    rel_tol: float = 1e-8
    seed: int = 0
    smoothing_eps: float = 1e-10

    def __post_init__(self):
        if self.n_restarts < 1:
            raise ValueError("n_restarts must be >= 1")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")
        if not self.rel_tol > 0:
            raise ValueError("rel_tol must be > 0")
        if not 0 < self.smoothing_eps < 0.5:
            raise ValueError("smoothing_eps must lie in (0, 0.5)")


@dataclass(frozen=True, eq=False)
class LcaModel:
    """A fitted latent class model on the variables ``vars``.

    ``theta[i]`` is a (g, C) array of category probabilities for ``vars[i]``;
    ``posterior`` is the (N, g) matrix of class membership probabilities.
    """

    vars: tuple[int, ...]
    g: int
    tau: np.ndarray
    theta: tuple[np.ndarray, ...]
    loglik: float
    n_params: int
    n_obs: int
    posterior: np.ndarray
    converged: bool = True
    n_iter: int = 0
    loglik_trace: np.ndarray = field(default_factory=lambda: np.empty(0))
    restart_logliks: tuple[float, ...] = ()

    @property
    def bic(self) -> float:
        return 2.0 * self.loglik - self.n_params * math.log(self.n_obs)

    @property
    def z_hat(self) -> np.ndarray:
        return classify(self)

    def to_dict(self, var_names: Sequence[str] | None = None) -> dict:
        out = {
            "g": self.g,
            "tau": self.tau.tolist(),
            "theta": [[t[g].tolist() for t in self.theta] for g in range(self.g)],
            "loglik": self.loglik,
            "bic": self.bic,
            "n_params": self.n_params,
        }
        if var_names is not None:
            out["vars"] = [var_names[j] for j in self.vars]
        else:
            out["vars"] = list(self.vars)
        return out


def n_free_params(n_categories: Sequence[int], g: int) -> int:
    return (g - 1) + g * sum(c - 1 for c in n_categories)


def max_identifiable_g(n_categories: Sequence[int], g_max: int | float = math.inf) -> int:
    """Largest G with prod(C) > (sum(C) - M + 1) * G, capped at ``g_max``.

    One class is always allowed, even when the inequality fails at G = 1.
    """
    if len(n_categories) == 0:
        raise ValueError("empty variable list")
    if any(c < 2 for c in n_categories):
        raise ValueError("every variable needs at least 2 categories")
    prod = math.prod(int(c) for c in n_categories)
    per_class = sum(n_categories) - len(n_categories) + 1
    g_star = (prod - 1) // per_class  # strict inequality
    return int(max(1, min(g_max, g_star)))


def compress_rows(codes: np.ndarray, n_categories: Sequence[int]):
    """Collapse identical rows. Returns (patterns, counts, inverse)."""
    n_categories = tuple(int(c) for c in n_categories)
    if math.prod(n_categories) < 2**62:
        keys = np.ravel_multi_index(codes.T, n_categories)
        uniq, inverse, counts = np.unique(keys, return_inverse=True, return_counts=True)
        patterns = np.stack(np.unravel_index(uniq, n_categories), axis=1)
    else:
        patterns, inverse, counts = np.unique(codes, axis=0, return_inverse=True, return_counts=True)
    return patterns, counts.astype(float), inverse.ravel()


def _initial_responsibilities(rng, inverse, n_patterns, g):
    # Row-level uniform simplex draws, summed within each pattern.
    r = rng.dirichlet(np.ones(g), size=inverse.shape[0])
    out = np.empty((n_patterns, g))
    for k in range(g):
        out[:, k] = np.bincount(inverse, weights=r[:, k], minlength=n_patterns)
    return out


def fit_lca(
    data: CategoricalDataset,
    vars: Sequence[int],
    g: int,
    config: FitConfig | None = None,
    *,
    enforce_bound: bool = True,
) -> LcaModel:
    """Fit a ``g``-class model on ``vars`` and keep the best restart.

    Set ``enforce_bound=False`` to fit beyond the identifiability bound; the
    likelihood is still well defined there, only the parameters are not.

    Raises
    ------
    ValueError
        ``g`` exceeds the identifiability bound and ``enforce_bound`` is set.
    FitFailure
        Every restart converged with some class weight below 1 / (10 N).
    """
    config = config or FitConfig()
    vars = tuple(int(v) for v in vars)
    if not vars:
        raise ValueError("vars must be non-empty")
    if g < 1:
        raise ValueError("g must be >= 1")
    ncat = [data.n_categories[v] for v in vars]
    if enforce_bound and g > 1 and g > max_identifiable_g(ncat):
        raise ValueError(f"g={g} violates the identifiability bound for these variables")

    n = data.n_rows
    patterns, weights, inverse = compress_rows(data.codes[:, vars], ncat)
    offsets = np.zeros(len(vars) + 1, dtype=np.int64)
    offsets[1:] = np.cumsum(ncat)
    idx = np.ascontiguousarray(patterns + offsets[:-1], dtype=np.int32)
    weights = np.ascontiguousarray(weights)
    min_weight = 1.0 / (10 * n)

    best = None
    restart_lls = []
    n_restarts = 1 if g == 1 else config.n_restarts
    for r in range(n_restarts):
        rng = np.random.default_rng(np.random.SeedSequence(config.seed, spawn_key=(r,)))
        resp = _initial_responsibilities(rng, inverse, len(weights), g)
        tau, theta, post, lls, converged = _backend.run_em(
            idx, weights, offsets, resp, config.max_iter, config.rel_tol, config.smoothing_eps
        )
        ll = float(lls[-1])
        restart_lls.append(ll)
        if g > 1 and tau.min() < min_weight:
            continue
        if best is None or ll > best[0]:
            best = (ll, tau, theta, post, lls, converged)
    if best is None:
        raise FitFailure(f"all {n_restarts} restarts degenerate for g={g}")

    ll, tau, theta, post, lls, converged = best
    thetas = tuple(theta[:, offsets[i]:offsets[i + 1]].copy() for i in range(len(vars)))
    return LcaModel(
        vars=vars,
        g=g,
        tau=tau,
        theta=thetas,
        loglik=ll,
        n_params=n_free_params(ncat, g),
        n_obs=n,
        posterior=post[inverse],
        converged=converged,
        n_iter=len(lls),
        loglik_trace=lls,
        restart_logliks=tuple(restart_lls),
    )


def best_lca_over_g(
    data: CategoricalDataset,
    vars: Sequence[int],
    g_max: int,
    config: FitConfig | None = None,
    g_min: int = 1,
    cache: dict | None = None,
) -> LcaModel:
    """Fit G = g_min .. min(g_max, G*) and return the highest-BIC model.

    Ties go to the smaller G. ``cache`` maps (sorted vars, G) to fitted
    models (or the :class:`FitFailure` raised) and is filled in place.
    """
    vars = tuple(sorted(int(v) for v in vars))
    if not vars:
        raise ValueError("vars must be non-empty")
    g_top = max_identifiable_g([data.n_categories[v] for v in vars], g_max)
    g_lo = max(1, min(g_min, g_top))
    best = None
    last_err = None
    for g in range(g_lo, g_top + 1):
        key = (vars, g)
        if cache is not None and key in cache:
            model = cache[key]
        else:
            try:
                model = fit_lca(data, vars, g, config)
            except FitFailure as err:
                model = err
            if cache is not None:
                cache[key] = model
        if isinstance(model, FitFailure):
            last_err = model
            continue
        if best is None or model.bic > best.bic:
            best = model
    if best is None:
        raise last_err or FitFailure("no class count could be fitted")
    return best


def classify(model: LcaModel) -> np.ndarray:
    """MAP class per row (0-based); ties resolve to the lowest class index."""
    return np.argmax(model.posterior, axis=1)
