"""Pure-numpy kernel implementations (fallback backend).

Same signatures and semantics as ``_numba``; see package docstring for the
shared data layout. Within one backend results are exactly reproducible;
across backends sparse-only arithmetic is bit-identical (integer-valued
updates) while dense contributions may differ in the last few ulps because
summation order differs.
"""

from __future__ import annotations

import numpy as np


def score_rows(weights, sparse_ids, dense, scale):
    """Per-action scores for one feature vector.

    ``weights`` has one row per feature: sparse rows first, then
    ``len(dense)`` dense rows. Sparse features contribute their row sums,
    dense features ``scale * value`` times their rows.
    """
    n_actions = weights.shape[1]
    scores = np.zeros(n_actions)
    if len(sparse_ids):
        scores += weights[sparse_ids].sum(axis=0)
    d = len(dense)
    if d:
        scores += scale * (dense @ weights[weights.shape[0] - d :])
    return scores


def _argmax_first(scores):
    return int(np.argmax(scores))


def _lazy_flush(weights, acc, last_step, rows, action, step):
    acc[rows, action] += (step - last_step[rows, action]) * weights[rows, action]
    last_step[rows, action] = step


def perceptron_epoch(
    weights, acc, last_step, step0, indptr, ids, dense, scale, gold, order
):
    """One epoch of multiclass perceptron updates with lazy averaging.

    Instances are visited in ``order``; ``step0`` is the number of
    instances already consumed by earlier epochs. Returns the number of
    pre-update correct predictions and the new step counter.
    """
    n_dense = dense.shape[1]
    n_sparse = weights.shape[0] - n_dense
    dense_rows = np.arange(n_sparse, weights.shape[0])
    correct = 0
    step = step0
    for i in order:
        step += 1
        lo, hi = indptr[i], indptr[i + 1]
        rows = ids[lo:hi]
        x = dense[i]
        scores = score_rows(weights, rows, x, scale)
        pred = _argmax_first(scores)
        g = gold[i]
        if pred == g:
            correct += 1
            continue
        nz = x != 0.0
        active = dense_rows[nz]
        xv = x[nz]
        for action, sign in ((g, 1.0), (pred, -1.0)):
            _lazy_flush(weights, acc, last_step, rows, action, step)
            weights[rows, action] += sign
            if len(active):
                _lazy_flush(weights, acc, last_step, active, action, step)
                weights[active, action] += sign * scale * xv
    return correct, step


def average_weights(weights, acc, last_step, final_step):
    """Finalize the running average: mean weight value over all steps."""
    if final_step == 0:
        return weights.copy()
    return (acc + (final_step - last_step) * weights) / final_step


def hinge_epoch(
    weights, wscale, indptr, ids, dense, scale, gold, order, lr, l2
):
    """One epoch of multiclass hinge-loss SGD with L2 decay.

    Effective weights are ``wscale * weights``; decay multiplies the scale
    instead of every row. Returns (correct, new wscale).
    """
    n_dense = dense.shape[1]
    n_sparse = weights.shape[0] - n_dense
    dense_rows = np.arange(n_sparse, weights.shape[0])
    correct = 0
    for i in order:
        lo, hi = indptr[i], indptr[i + 1]
        rows = ids[lo:hi]
        scores = wscale * score_rows(weights, rows, dense[i], scale)
        g = gold[i]
        if _argmax_first(scores) == g:
            correct += 1
        margin = scores + 1.0
        margin[g] = scores[g]
        viol = _argmax_first(margin)
        if l2 > 0.0:
            wscale *= 1.0 - lr * l2
            if wscale < 1e-9:
                weights *= wscale
                wscale = 1.0
        if viol != g:
            x = dense[i]
            step = lr / wscale
            for action, sign in ((g, step), (viol, -step)):
                weights[rows, action] += sign
                if n_dense:
                    weights[dense_rows, action] += sign * scale * x
    return correct, wscale


def accumulate_stats(indptr, ids, vals, n):
    """Streaming sums for PCA: per-dimension totals and the raw scatter
    matrix ``sum_t x_t x_t^T`` over sparse vectors in CSR form."""
    sums = np.zeros(n)
    scatter = np.zeros((n, n))
    for t in range(len(indptr) - 1):
        lo, hi = indptr[t], indptr[t + 1]
        r = ids[lo:hi]
        v = vals[lo:hi]
        sums[r] += v
        scatter[np.ix_(r, r)] += np.outer(v, v)
    return sums, scatter


def power_iteration(cov, starts, tol, abs_floor, max_iter):
    """Top-k eigenpairs of a symmetric PSD matrix by deflated power
    iteration.

    Deflation is by projection: every iterate is re-orthogonalized against
    the components already found. ``starts`` supplies one initial vector
    per requested component; convergence requires both a stable eigenvalue
    estimate (``|lam - lam_prev| <= tol * lam + abs_floor``) and a stable
    eigenvector (movement per iteration <= tol), since the eigenvalue
    settles quadratically faster than the vector.
    """
    n = cov.shape[0]
    k = starts.shape[0]
    comps = np.zeros((n, k))
    eigs = np.zeros(k)
    for j in range(k):
        basis = comps[:, :j]
        v = starts[j] - basis @ (basis.T @ starts[j])
        norm = np.linalg.norm(v)
        if norm == 0.0:
            v = np.zeros(n)
            v[j % n] = 1.0
            v -= basis @ (basis.T @ v)
            norm = np.linalg.norm(v)
        v /= norm
        lam_prev = np.inf
        for _ in range(max_iter):
            w = cov @ v
            w -= basis @ (basis.T @ w)
            lam = np.linalg.norm(w)
            if lam <= abs_floor:
                break
            w /= lam
            moved = min(np.linalg.norm(w - v), np.linalg.norm(w + v))
            v = w
            if moved <= tol and abs(lam - lam_prev) <= tol * lam + abs_floor:
                break
            lam_prev = lam
        v -= basis @ (basis.T @ v)
        v /= np.linalg.norm(v)
        comps[:, j] = v
        eigs[j] = v @ (cov @ v)
    return comps, eigs


def project_sparse(components, mean_proj, ids, vals):
    """Project a sparse vector: ``components.T @ x - mean_proj``."""
    if len(ids):
        return components[ids].T @ vals - mean_proj
    return -mean_proj.copy()
