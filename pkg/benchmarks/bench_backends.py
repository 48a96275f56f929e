#!/usr/bin/env python3
"""Benchmark the numba kernels against the pure-numpy fallback.

Runs each kernel on a training-sized workload with both backends and then
times an end-to-end train/parse cycle, rebinding the kernel functions in
``stagdep.kernels`` per run. The numba timings exclude JIT compilation
(one warmup call per kernel).

Usage: python benchmarks/bench_backends.py [--sentences N]
"""

import argparse
import sys
import time
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "tests"))

from corpus import make_corpus  # noqa: E402

from stagdep import kernels, parser, treebank  # noqa: E402
from stagdep.classifier import TrainConfig  # noqa: E402
from stagdep.kernels import _numba, _numpy  # noqa: E402

KERNEL_NAMES = [
    "score_rows",
    "perceptron_epoch",
    "average_weights",
    "hinge_epoch",
    "accumulate_stats",
    "power_iteration",
    "project_sparse",
]


def _instances(rng, n_inst, n_sparse, n_dense, n_actions):
    indptr = [0]
    ids = []
    for _ in range(n_inst):
        ids.extend(sorted(rng.choice(n_sparse, size=49, replace=False)))
        indptr.append(len(ids))
    dense = rng.standard_normal((n_inst, n_dense))
    gold = rng.integers(0, n_actions, n_inst).astype(np.int32)
    return (
        np.asarray(indptr, np.int64),
        np.asarray(ids, np.int32),
        np.ascontiguousarray(dense),
        gold,
    )


def bench_kernels(repeat=3):
    rng = np.random.default_rng(0)
    n_inst, n_sparse, n_dense, n_actions = 20_000, 60_000, 128, 40
    indptr, ids, dense, gold = _instances(rng, n_inst, n_sparse, n_dense, n_actions)
    order = rng.permutation(n_inst).astype(np.int64)

    sp_indptr = [0]
    sp_ids, sp_vals = [], []
    for _ in range(10_000):
        m = int(rng.integers(2, 6))
        sp_ids.extend(sorted(rng.choice(1000, size=m, replace=False)))
        sp_vals.extend(rng.random(m))
        sp_indptr.append(len(sp_ids))
    sp_args = (
        np.asarray(sp_indptr, np.int64),
        np.asarray(sp_ids, np.int32),
        np.asarray(sp_vals, np.float64),
        1000,
    )

    cov_data = rng.standard_normal((500, 2000))
    cov = np.cov(cov_data)
    starts = rng.standard_normal((32, 500))
    comps = rng.standard_normal((4726, 64))
    mean_proj = rng.standard_normal(64)
    proj_ids = np.sort(rng.choice(4726, size=5, replace=False)).astype(np.int32)
    proj_vals = rng.random(5)

    def workloads(impl):
        w = np.zeros((n_sparse + n_dense, n_actions))
        acc = np.zeros_like(w)
        last = np.zeros_like(w)
        wh = np.zeros_like(w)
        one_ids = ids[indptr[0] : indptr[1]]
        return {
            "score_rows": lambda: [
                impl.score_rows(w, one_ids, dense[0], 1.0) for _ in range(2000)
            ],
            "perceptron_epoch": lambda: impl.perceptron_epoch(
                w, acc, last, 0, indptr, ids, dense, 1.0, gold, order
            ),
            "average_weights": lambda: impl.average_weights(w, acc, last, n_inst),
            "hinge_epoch": lambda: impl.hinge_epoch(
                wh, 1.0, indptr, ids, dense, 1.0, gold, order, 0.1, 0.01
            ),
            "accumulate_stats": lambda: impl.accumulate_stats(*sp_args),
            "power_iteration": lambda: impl.power_iteration(
                cov, starts, 1e-9, 1e-12, 1000
            ),
            "project_sparse": lambda: [
                impl.project_sparse(comps, mean_proj, proj_ids, proj_vals)
                for _ in range(20_000)
            ],
        }

    results = {}
    for backend, impl in (("numpy", _numpy), ("numba", _numba)):
        jobs = workloads(impl)
        for name in KERNEL_NAMES:
            jobs[name]()  # warmup (JIT compile for numba)
            best = min(_timed(jobs[name]) for _ in range(repeat))
            results[(backend, name)] = best
    return results


def _timed(fn):
    start = time.perf_counter()
    fn()
    return time.perf_counter() - start


def _bind(impl):
    for name in KERNEL_NAMES:
        setattr(kernels, name, getattr(impl, name))


def bench_end_to_end(n_sentences):
    train = make_corpus(n_sentences, seed=101, min_len=5, max_len=14)
    dev = make_corpus(200, seed=202, min_len=5, max_len=14)
    annotations = treebank.synth_supertags(train + dev, 200, 0.2, seed=303)
    attached = treebank.attach_supertags(train + dev, annotations)
    train_a, dev_a = attached[:n_sentences], attached[n_sentences:]
    inv = treebank.synthetic_inventory(200)

    rows = {}
    for backend, impl in (("numpy", _numpy), ("numba", _numba)):
        _bind(impl)
        start = time.perf_counter()
        model = parser.train_pipeline(
            train_a, "BL+BS+SD", k=64, inventory=inv,
            hyper=TrainConfig(epochs=15, seed=7),
        )
        train_time = time.perf_counter() - start
        parser.parse_corpus(model, dev_a[:10])  # warmup
        start = time.perf_counter()
        parser.parse_corpus(model, dev_a)
        parse_time = time.perf_counter() - start
        rows[backend] = (train_time, len(dev_a) / parse_time)
    _bind(_numba if kernels.BACKEND == "numba" else _numpy)
    return rows


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--sentences", type=int, default=500,
                    help="training sentences for the end-to-end run")
    args = ap.parse_args()

    print(f"active backend: {kernels.BACKEND}")
    print("\n== kernel timings (best of 3, seconds) ==")
    results = bench_kernels()
    print(f"{'kernel':<22}{'numpy':>10}{'numba':>10}{'speedup':>9}")
    for name in KERNEL_NAMES:
        np_t = results[("numpy", name)]
        nb_t = results[("numba", name)]
        print(f"{name:<22}{np_t:>10.4f}{nb_t:>10.4f}{np_t / nb_t:>8.1f}x")

    print(f"\n== end-to-end, BL+BS+SD k=64, {args.sentences} train sentences ==")
    rows = bench_end_to_end(args.sentences)
    print(f"{'backend':<10}{'train (s)':>12}{'parse (sents/s)':>18}")
    for backend in ("numpy", "numba"):
        train_time, rate = rows[backend]
        print(f"{backend:<10}{train_time:>12.2f}{rate:>18.0f}")


if __name__ == "__main__":
    main()
