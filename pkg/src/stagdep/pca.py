"""Principal-component compression of sparse supertag vectors.

Fits the top-k eigenvectors of the (optionally centered) covariance of a
stream of sparse n-vectors without ever materializing a dense data
matrix, then projects new sparse vectors into the k-dimensional space.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import container, kernels
from .errors import DataError

EIG_TOL = 1e-9
MAX_ITER = 1000
_FORMAT_VERSION = 1


@dataclass(frozen=True)
class PcaModel:
    """Mean vector plus an orthonormal n-by-k projection basis.

    ``components`` columns are ordered by decreasing explained variance;
    each column's largest-magnitude entry is positive. ``total_variance``
    is the trace of the fitted covariance, used for cumulative fractions.
    """

    n: int
    k: int
    center: bool
    mean: np.ndarray
    components: np.ndarray
    explained_variance: np.ndarray
    total_variance: float
    mean_proj: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if not (1 <= self.k <= self.n):
            raise ValueError(f"need 1 <= k <= n, got k={self.k}, n={self.n}")
        if self.mean.shape != (self.n,):
            raise ValueError("mean shape mismatch")
        if self.components.shape != (self.n, self.k):
            raise ValueError("components shape mismatch")
        if self.explained_variance.shape != (self.k,):
            raise ValueError("explained_variance shape mismatch")
        if np.any(np.diff(self.explained_variance) > 0) or np.any(
            self.explained_variance < 0
        ):
            raise ValueError("explained_variance must be non-increasing and >= 0")
        mp = (
            self.components.T @ self.mean
            if self.center
            else np.zeros(self.k)
        )
        object.__setattr__(self, "mean_proj", mp)


def _as_csr(vectors):
    """Pack an iterable of (ids, values) sparse vectors into CSR arrays."""
    indptr = [0]
    all_ids = []
    all_vals = []
    for ids, vals in vectors:
        all_ids.append(np.asarray(ids, dtype=np.int32))
        all_vals.append(np.asarray(vals, dtype=np.float64))
        indptr.append(indptr[-1] + len(all_ids[-1]))
    if len(indptr) == 1:
        raise ValueError("empty vector stream")
    return (
        np.asarray(indptr, dtype=np.int64),
        np.concatenate(all_ids) if all_ids else np.zeros(0, np.int32),
        np.concatenate(all_vals) if all_vals else np.zeros(0, np.float64),
    )


def fit(vectors, n: int, k: int, seed: int = 0, center: bool = True) -> PcaModel:
    """Fit a :class:`PcaModel` on a stream of sparse (ids, values) pairs.

    The covariance is accumulated in one streaming pass (running sums plus
    the raw scatter matrix); eigenpairs come from deflated power iteration
    to relative eigenvalue tolerance 1e-9, at most 1000 iterations per
    component. Deterministic for a fixed seed.
    """
    if k > n:
        raise ValueError(f"k={k} exceeds input dimension n={n}")
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    indptr, ids, vals = _as_csr(vectors)
    count = len(indptr) - 1
    if len(ids) and int(ids.max()) >= n:
        raise ValueError(f"vector id {int(ids.max())} out of range for n={n}")

    sums, scatter = kernels.accumulate_stats(indptr, ids, vals, n)
    mean = sums / count
    if center:
        cov = scatter - count * np.outer(mean, mean)
        cov /= max(count - 1, 1)
    else:
        cov = scatter / count
    cov = (cov + cov.T) / 2.0

    total_variance = float(np.trace(cov))

    starts = np.random.default_rng(seed).standard_normal((k, n))
    abs_floor = EIG_TOL * max(total_variance, 0.0) / max(n, 1)
    comps, eigs = kernels.power_iteration(cov, starts, EIG_TOL, abs_floor, MAX_ITER)

    rank_tol = max(n, count) * np.finfo(np.float64).eps * max(float(eigs.max()), 0.0)
    rank = int(np.sum(eigs > rank_tol))
    if rank < k:
        raise ValueError(
            f"data has only {rank} independent directions, cannot fit k={k}"
        )

    # descending eigenvalue order, then the sign convention
    idx = np.argsort(-eigs, kind="stable")
    eigs = np.maximum(eigs[idx], 0.0)
    comps = comps[:, idx]
    for j in range(k):
        col = comps[:, j]
        if col[int(np.argmax(np.abs(col)))] < 0:
            comps[:, j] = -col

    return PcaModel(
        n=n,
        k=k,
        center=center,
        mean=mean,
        components=np.ascontiguousarray(comps),
        explained_variance=eigs,
        total_variance=total_variance,
    )


def project(model: PcaModel, ids, vals) -> np.ndarray:
    """Project one sparse n-vector to the k principal directions.

    Computes ``components.T @ (x - mean)`` when the model is centered and
    ``components.T @ x`` otherwise, touching only the nonzero entries.
    """
    ids = np.asarray(ids, dtype=np.int32)
    vals = np.asarray(vals, dtype=np.float64)
    if len(ids) and int(ids.max()) >= model.n:
        raise ValueError(
            f"vector id {int(ids.max())} out of range for model n={model.n}"
        )
    return kernels.project_sparse(model.components, model.mean_proj, ids, vals)


def explained_variance_report(model: PcaModel) -> list[tuple[int, float, float]]:
    """Rows of (1-based component index, variance, cumulative fraction of
    the total training variance)."""
    total = model.total_variance if model.total_variance > 0 else 1.0
    rows = []
    cum = 0.0
    for j, var in enumerate(model.explained_variance, start=1):
        cum += float(var)
        rows.append((j, float(var), cum / total))
    return rows


def save_pca(model: PcaModel, path) -> None:
    container.save_container(
        path,
        meta={
            "format": "stagdep-pca",
            "version": _FORMAT_VERSION,
            "n": model.n,
            "k": model.k,
            "center": model.center,
            "total_variance": model.total_variance,
        },
        arrays={
            "mean": model.mean,
            "components": model.components,
            "explained_variance": model.explained_variance,
        },
    )


def load_pca(path) -> PcaModel:
    meta, arrays = container.load_container(path)
    if meta.get("format") != "stagdep-pca":
        raise DataError(f"{path}: not a PCA model file")
    if meta.get("version") != _FORMAT_VERSION:
        raise DataError(
            f"{path}: PCA file version {meta.get('version')} unsupported "
            f"(expected {_FORMAT_VERSION})"
        )
    return PcaModel(
        n=int(meta["n"]),
        k=int(meta["k"]),
        center=bool(meta["center"]),
        mean=arrays["mean"],
        components=arrays["components"],
        explained_variance=arrays["explained_variance"],
        total_variance=float(meta["total_variance"]),
    )
