"""Backend parity: the numba kernels must agree with the numpy fallback."""

import os
import subprocess
import sys

import numpy as np
import pytest

from stagdep.kernels import _numba, _numpy


def _random_instances(rng, n_instances, n_sparse, n_dense, n_actions):
    indptr = [0]
    ids = []
    for _ in range(n_instances):
        m = int(rng.integers(1, 6))
        ids.extend(sorted(rng.choice(n_sparse, size=m, replace=False)))
        indptr.append(len(ids))
    dense = (
        rng.standard_normal((n_instances, n_dense))
        if n_dense
        else np.zeros((n_instances, 0))
    )
    if n_dense:
        dense[rng.random(dense.shape) < 0.3] = 0.0
    gold = rng.integers(0, n_actions, n_instances).astype(np.int32)
    return (
        np.asarray(indptr, dtype=np.int64),
        np.asarray(ids, dtype=np.int32),
        np.ascontiguousarray(dense),
        gold,
    )


class TestScoreRows:
    def test_sparse_exact(self):
        rng = np.random.default_rng(0)
        w = rng.integers(-5, 6, (30, 4)).astype(np.float64)
        for _ in range(20):
            ids = np.sort(rng.choice(30, size=3, replace=False)).astype(np.int32)
            a = _numpy.score_rows(w, ids, np.zeros(0), 1.0)
            b = _numba.score_rows(w, ids, np.zeros(0), 1.0)
            assert np.array_equal(a, b)

    def test_dense_close(self):
        rng = np.random.default_rng(1)
        w = rng.standard_normal((20, 4))
        ids = np.array([2, 7], dtype=np.int32)
        dense = rng.standard_normal(6)
        a = _numpy.score_rows(w, ids, dense, 0.7)
        b = _numba.score_rows(w, ids, dense, 0.7)
        assert np.allclose(a, b, atol=1e-12)


class TestPerceptronEpochParity:
    @pytest.mark.parametrize("n_dense", [0, 4])
    def test_epoch_parity(self, n_dense):
        rng = np.random.default_rng(3)
        n_sparse, n_actions, n_inst = 25, 5, 60
        indptr, ids, dense, gold = _random_instances(
            rng, n_inst, n_sparse, n_dense, n_actions
        )
        order = rng.permutation(n_inst).astype(np.int64)
        results = []
        for impl in (_numpy, _numba):
            w = np.zeros((n_sparse + n_dense, n_actions))
            acc = np.zeros_like(w)
            last = np.zeros_like(w)
            correct, step = impl.perceptron_epoch(
                w, acc, last, 0, indptr, ids, dense, 0.5, gold, order
            )
            avg = impl.average_weights(w, acc, last, step)
            results.append((correct, step, w, avg))
        (c1, s1, w1, a1), (c2, s2, w2, a2) = results
        assert (c1, s1) == (c2, s2)
        if n_dense == 0:
            assert np.array_equal(w1, w2)
            assert np.array_equal(a1, a2)
        else:
            assert np.allclose(w1, w2, atol=1e-9)
            assert np.allclose(a1, a2, atol=1e-9)


class TestHingeEpochParity:
    def test_sparse_parity(self):
        rng = np.random.default_rng(5)
        indptr, ids, dense, gold = _random_instances(rng, 50, 20, 0, 4)
        order = np.arange(50, dtype=np.int64)
        outs = []
        for impl in (_numpy, _numba):
            w = np.zeros((20, 4))
            correct, wscale = impl.hinge_epoch(
                w, 1.0, indptr, ids, dense, 1.0, gold, order, 0.1, 0.01
            )
            outs.append((correct, wscale, w))
        assert outs[0][0] == outs[1][0]
        assert outs[0][1] == pytest.approx(outs[1][1], abs=1e-15)
        assert np.allclose(outs[0][2], outs[1][2], atol=1e-12)


class TestPcaKernelParity:
    def test_accumulate_stats_exact(self):
        rng = np.random.default_rng(7)
        indptr = [0]
        ids, vals = [], []
        for _ in range(40):
            m = int(rng.integers(1, 5))
            picked = np.sort(rng.choice(12, size=m, replace=False))
            ids.extend(picked)
            vals.extend(rng.random(m))
            indptr.append(len(ids))
        args = (
            np.asarray(indptr, np.int64),
            np.asarray(ids, np.int32),
            np.asarray(vals, np.float64),
            12,
        )
        s1, sc1 = _numpy.accumulate_stats(*args)
        s2, sc2 = _numba.accumulate_stats(*args)
        assert np.array_equal(s1, s2)
        assert np.array_equal(sc1, sc2)

    def test_power_iteration_close(self):
        rng = np.random.default_rng(9)
        a = rng.standard_normal((8, 40))
        cov = np.cov(a)
        starts = rng.standard_normal((8, 8))
        c1, e1 = _numpy.power_iteration(cov, starts, 1e-9, 1e-12, 1000)
        c2, e2 = _numba.power_iteration(cov, starts, 1e-9, 1e-12, 1000)
        assert np.allclose(e1, e2, rtol=1e-8)
        assert np.allclose(np.abs(c1), np.abs(c2), atol=1e-6)

    def test_project_sparse_close(self):
        rng = np.random.default_rng(11)
        comps = rng.standard_normal((15, 4))
        mean_proj = rng.standard_normal(4)
        ids = np.array([1, 8, 12], dtype=np.int32)
        vals = rng.random(3)
        a = _numpy.project_sparse(comps, mean_proj, ids, vals)
        b = _numba.project_sparse(comps, mean_proj, ids, vals)
        assert np.allclose(a, b, atol=1e-12)


class TestEndToEndParity:
    def test_trained_models_agree_sparse_only(self, monkeypatch):
        from stagdep import classifier
        from stagdep.classifier import ActionSpace, TrainConfig
        from stagdep.features import FeatureDictionary, FeatureVector
        from stagdep.transition import LEFT_ARC, SHIFT, Transition

        rng = np.random.default_rng(13)
        d = FeatureDictionary()
        for i in range(15):
            d.id_for(0, f"v{i}")
        d.freeze()
        actions = ActionSpace((Transition(SHIFT), Transition(LEFT_ARC, "x")))
        instances = [
            (
                FeatureVector(
                    sparse=np.sort(
                        rng.choice(15, size=3, replace=False)
                    ).astype(np.int32),
                    dense=np.zeros(0),
                ),
                int(g),
            )
            for g in rng.integers(0, 2, 40)
        ]
        weights = {}
        for name, impl in (("numpy", _numpy), ("numba", _numba)):
            monkeypatch.setattr(classifier.kernels, "perceptron_epoch",
                                impl.perceptron_epoch)
            monkeypatch.setattr(classifier.kernels, "average_weights",
                                impl.average_weights)
            model = classifier.train(
                instances, actions, TrainConfig(epochs=5, seed=3), d
            )
            weights[name] = model.weights
        assert np.array_equal(weights["numpy"], weights["numba"])


class TestBackendSelection:
    def _backend_with_env(self, value):
        env = dict(os.environ, STAGDEP_BACKEND=value)
        proc = subprocess.run(
            [sys.executable, "-c",
             "from stagdep.kernels import BACKEND; print(BACKEND)"],
            capture_output=True, text=True, env=env,
        )
        return proc

    def test_force_numpy(self):
        proc = self._backend_with_env("numpy")
        assert proc.returncode == 0 and proc.stdout.strip() == "numpy"

    def test_auto_prefers_numba(self):
        proc = self._backend_with_env("auto")
        assert proc.returncode == 0 and proc.stdout.strip() == "numba"

    def test_bad_value_rejected(self):
        proc = self._backend_with_env("bogus")
        assert proc.returncode != 0
        assert "STAGDEP_BACKEND" in proc.stderr
