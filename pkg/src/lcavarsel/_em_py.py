"""Pure numpy EM loop for latent class models on compressed response patterns.

Used when the compiled ``_em`` extension is unavailable, and as the
reference the compiled kernel is benchmarked and tested against.
"""

import numpy as np


def _mstep(onehot, offsets, wresp, eps):
    class_mass = wresp.sum(axis=0)
    counts = wresp.T @ onehot  # G x K
    with np.errstate(invalid="ignore", divide="ignore"):
        theta = counts / class_mass[:, None]
    starts = offsets[:-1]
    sizes = np.diff(offsets)
    empty = class_mass <= 0
    if empty.any():
        theta[empty] = np.repeat(1.0 / sizes, sizes)
    theta = np.clip(theta, eps, 1.0 - eps)
    theta /= np.repeat(np.add.reduceat(theta, starts, axis=1), sizes, axis=1)
    tau = np.clip(class_mass / class_mass.sum(), eps, 1.0 - eps)
    tau /= tau.sum()
    return tau, theta


def _estep(onehot, weights, tau, theta):
    logp = onehot @ np.log(theta).T + np.log(tau)
    mx = logp.max(axis=1, keepdims=True)
    lse = mx + np.log(np.exp(logp - mx).sum(axis=1, keepdims=True))
    post = np.exp(logp - lse)
    return float(weights @ lse[:, 0]), post


def run_em(idx, weights, offsets, resp, max_iter, rel_tol, eps):
    """Run EM from initial weighted responsibilities.

    Parameters
    ----------
    idx : int array (P, M)
        Response patterns as flat category indices (code plus variable offset).
    weights : float array (P,)
        Row multiplicity of each pattern.
    offsets : int array (M + 1,)
        Start of each variable's block in the flat category axis.
    resp : float array (P, G)
        Row-summed initial responsibilities per pattern; the first step is an M-step.
    max_iter, rel_tol, eps
        Iteration cap, relative log-likelihood tolerance, probability clamp.

    Returns
    -------
    tau, theta, post, lls, converged
        ``theta`` is (G, K) over the flat category axis; ``post`` holds per-row
        posteriors for each pattern; ``lls`` is the log-likelihood trace. The
        returned parameters are the ones that produced ``lls[-1]``.
    """
    idx = np.asarray(idx)
    P = idx.shape[0]
    K = int(offsets[-1])
    onehot = np.zeros((P, K))
    rows = np.repeat(np.arange(P), idx.shape[1])
    onehot[rows, idx.ravel()] = 1.0
    offsets = np.asarray(offsets, dtype=np.intp)

    tau, theta = _mstep(onehot, offsets, np.asarray(resp, dtype=float), eps)
    lls = []
    prev = -np.inf
    converged = False
    post = None
    for it in range(max_iter):
        ll, post = _estep(onehot, weights, tau, theta)
        lls.append(ll)
        if it > 0 and (ll - prev) / (1.0 + abs(ll)) < rel_tol:
            converged = True
            break
        prev = ll
        if it == max_iter - 1:
            break
        tau, theta = _mstep(onehot, offsets, weights[:, None] * post, eps)
    return tau, theta, post, np.array(lls), converged
