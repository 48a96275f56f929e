"""Numba-jitted kernel implementations (fast backend).

Loop-level twins of ``_numpy``; compiled lazily on first call and cached
on disk, so the first call per process may pause for compilation once.
"""

from __future__ import annotations

import numpy as np
from numba import njit


@njit(cache=True)
def score_rows(weights, sparse_ids, dense, scale):
    n_actions = weights.shape[1]
    n_dense = dense.shape[0]
    n_sparse = weights.shape[0] - n_dense
    scores = np.zeros(n_actions)
    for p in range(sparse_ids.shape[0]):
        row = sparse_ids[p]
        for a in range(n_actions):
            scores[a] += weights[row, a]
    for j in range(n_dense):
        x = dense[j]
        if x != 0.0:
            sx = scale * x
            for a in range(n_actions):
                scores[a] += sx * weights[n_sparse + j, a]
    return scores


@njit(cache=True, inline="always")
def _argmax_first(scores):
    best = 0
    for a in range(1, scores.shape[0]):
        if scores[a] > scores[best]:
            best = a
    return best


@njit(cache=True, inline="always")
def _lazy_flush(weights, acc, last_step, row, action, step):
    acc[row, action] += (step - last_step[row, action]) * weights[row, action]
    last_step[row, action] = step


@njit(cache=True)
def perceptron_epoch(
    weights, acc, last_step, step0, indptr, ids, dense, scale, gold, order
):
    n_actions = weights.shape[1]
    n_dense = dense.shape[1]
    n_sparse = weights.shape[0] - n_dense
    correct = 0
    step = step0
    for pos in range(order.shape[0]):
        i = order[pos]
        step += 1
        lo, hi = indptr[i], indptr[i + 1]
        scores = np.zeros(n_actions)
        for p in range(lo, hi):
            row = ids[p]
            for a in range(n_actions):
                scores[a] += weights[row, a]
        for j in range(n_dense):
            x = dense[i, j]
            if x != 0.0:
                sx = scale * x
                for a in range(n_actions):
                    scores[a] += sx * weights[n_sparse + j, a]
        pred = _argmax_first(scores)
        g = gold[i]
        if pred == g:
            correct += 1
            continue
        for p in range(lo, hi):
            row = ids[p]
            _lazy_flush(weights, acc, last_step, row, g, step)
            weights[row, g] += 1.0
            _lazy_flush(weights, acc, last_step, row, pred, step)
            weights[row, pred] -= 1.0
        for j in range(n_dense):
            x = dense[i, j]
            if x != 0.0:
                row = n_sparse + j
                delta = scale * x
                _lazy_flush(weights, acc, last_step, row, g, step)
                weights[row, g] += delta
                _lazy_flush(weights, acc, last_step, row, pred, step)
                weights[row, pred] -= delta
    return correct, step


@njit(cache=True)
def average_weights(weights, acc, last_step, final_step):
    out = weights.copy()
    if final_step == 0:
        return out
    for row in range(weights.shape[0]):
        for a in range(weights.shape[1]):
            out[row, a] = (
                acc[row, a] + (final_step - last_step[row, a]) * weights[row, a]
            ) / final_step
    return out


@njit(cache=True)
def hinge_epoch(weights, wscale, indptr, ids, dense, scale, gold, order, lr, l2):
    n_actions = weights.shape[1]
    n_dense = dense.shape[1]
    n_sparse = weights.shape[0] - n_dense
    correct = 0
    for pos in range(order.shape[0]):
        i = order[pos]
        lo, hi = indptr[i], indptr[i + 1]
        scores = np.zeros(n_actions)
        for p in range(lo, hi):
            row = ids[p]
            for a in range(n_actions):
                scores[a] += weights[row, a]
        for j in range(n_dense):
            x = dense[i, j]
            if x != 0.0:
                sx = scale * x
                for a in range(n_actions):
                    scores[a] += sx * weights[n_sparse + j, a]
        for a in range(n_actions):
            scores[a] *= wscale
        g = gold[i]
        if _argmax_first(scores) == g:
            correct += 1
        viol = -1
        best = -np.inf
        for a in range(n_actions):
            m = scores[a] + (0.0 if a == g else 1.0)
            if m > best:
                best = m
                viol = a
        if l2 > 0.0:
            wscale *= 1.0 - lr * l2
            if wscale < 1e-9:
                for row in range(weights.shape[0]):
                    for a in range(n_actions):
                        weights[row, a] *= wscale
                wscale = 1.0
        if viol != g:
            step = lr / wscale
            for p in range(lo, hi):
                row = ids[p]
                weights[row, g] += step
                weights[row, viol] -= step
            for j in range(n_dense):
                row = n_sparse + j
                delta = step * scale * dense[i, j]
                weights[row, g] += delta
                weights[row, viol] -= delta
    return correct, wscale


@njit(cache=True)
def accumulate_stats(indptr, ids, vals, n):
    sums = np.zeros(n)
    scatter = np.zeros((n, n))
    for t in range(indptr.shape[0] - 1):
        lo, hi = indptr[t], indptr[t + 1]
        for p in range(lo, hi):
            sums[ids[p]] += vals[p]
            for q in range(lo, hi):
                scatter[ids[p], ids[q]] += vals[p] * vals[q]
    return sums, scatter


@njit(cache=True)
def _project_out(basis, j, v):
    # v -= basis[:, :j] @ (basis[:, :j].T @ v), written loop-wise
    n = v.shape[0]
    for c in range(j):
        dot = 0.0
        for m in range(n):
            dot += basis[m, c] * v[m]
        for m in range(n):
            v[m] -= dot * basis[m, c]


@njit(cache=True)
def power_iteration(cov, starts, tol, abs_floor, max_iter):
    n = cov.shape[0]
    k = starts.shape[0]
    comps = np.zeros((n, k))
    eigs = np.zeros(k)
    for j in range(k):
        v = starts[j].copy()
        _project_out(comps, j, v)
        norm = np.sqrt(np.sum(v * v))
        if norm == 0.0:
            v = np.zeros(n)
            v[j % n] = 1.0
            _project_out(comps, j, v)
            norm = np.sqrt(np.sum(v * v))
        for m in range(n):
            v[m] /= norm
        lam_prev = np.inf
        for _ in range(max_iter):
            w = np.dot(cov, v)
            _project_out(comps, j, w)
            lam = np.sqrt(np.sum(w * w))
            if lam <= abs_floor:
                break
            moved_minus = 0.0
            moved_plus = 0.0
            for m in range(n):
                wm = w[m] / lam
                moved_minus += (wm - v[m]) ** 2
                moved_plus += (wm + v[m]) ** 2
                v[m] = wm
            moved = np.sqrt(min(moved_minus, moved_plus))
            if moved <= tol and abs(lam - lam_prev) <= tol * lam + abs_floor:
                break
            lam_prev = lam
        _project_out(comps, j, v)
        norm = np.sqrt(np.sum(v * v))
        for m in range(n):
            v[m] /= norm
        rayleigh = float(np.dot(v, np.dot(cov, v)))
        comps[:, j] = v
        eigs[j] = rayleigh
    return comps, eigs


@njit(cache=True)
def project_sparse(components, mean_proj, ids, vals):
    k = components.shape[1]
    y = np.zeros(k)
    for p in range(ids.shape[0]):
        row = ids[p]
        val = vals[p]
        for c in range(k):
            y[c] += val * components[row, c]
    for c in range(k):
        y[c] -= mean_proj[c]
    return y
