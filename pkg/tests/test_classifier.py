import numpy as np
import pytest

from stagdep.classifier import (
    ActionSpace,
    LinearModel,
    TrainConfig,
    predict_legal,
    score,
    train,
)
from stagdep.features import FeatureDictionary, FeatureVector
from stagdep.transition import LEFT_ARC, RIGHT_ARC, SHIFT, Transition


def _fv(ids, dense=()):
    return FeatureVector(
        sparse=np.asarray(ids, dtype=np.int32),
        dense=np.asarray(dense, dtype=np.float64),
    )


def _dictionary(n):
    d = FeatureDictionary()
    for i in range(n):
        d.id_for(0, f"v{i}")
    d.freeze()
    return d


THREE_ACTIONS = ActionSpace(
    (Transition(SHIFT), Transition(LEFT_ARC, "a"), Transition(RIGHT_ARC, "b"))
)
TWO_ACTIONS = ActionSpace((Transition(SHIFT), Transition(LEFT_ARC, "a")))


class TestActionSpace:
    def test_shift_always_first(self):
        space = ActionSpace.from_transitions(
            [Transition(RIGHT_ARC, "z"), Transition(LEFT_ARC, "m")]
        )
        assert space.actions[0] == Transition(SHIFT)
        assert space.id_of(Transition(SHIFT)) == 0

    def test_sorted_within_kind(self):
        space = ActionSpace.from_transitions(
            [
                Transition(LEFT_ARC, "z"),
                Transition(LEFT_ARC, "a"),
                Transition(RIGHT_ARC, "m"),
                Transition(LEFT_ARC, "a"),
            ]
        )
        assert [str(t) for t in space.actions] == [
            "shift", "left_arc:a", "left_arc:z", "right_arc:m",
        ]

    def test_unknown_action(self):
        with pytest.raises(ValueError, match="not in action space"):
            TWO_ACTIONS.id_of(Transition(RIGHT_ARC, "zzz"))

    def test_must_start_with_shift(self):
        with pytest.raises(ValueError, match="shift"):
            ActionSpace((Transition(LEFT_ARC, "a"),))


class TestTrain:
    def test_separable_two_features(self):
        instances = [(_fv([0]), 0), (_fv([1]), 1)] * 5
        model = train(
            instances, TWO_ACTIONS, TrainConfig(epochs=10, seed=0), _dictionary(2)
        )
        assert model.meta["epoch_accuracy"][-1] == 1.0

    def test_xor_is_inseparable_but_terminates(self):
        instances = [
            (_fv([2]), 0),
            (_fv([0, 1, 2]), 0),
            (_fv([0, 2]), 1),
            (_fv([1, 2]), 1),
        ] * 5
        model = train(
            instances, TWO_ACTIONS, TrainConfig(epochs=25, seed=1), _dictionary(3)
        )
        assert all(acc < 1.0 for acc in model.meta["epoch_accuracy"])

    def test_deterministic_same_seed(self):
        rng = np.random.default_rng(3)
        instances = [
            (_fv(sorted(rng.choice(20, size=4, replace=False))), int(g))
            for g in rng.integers(0, 3, size=60)
        ]
        cfg = TrainConfig(epochs=5, seed=42)
        a = train(instances, THREE_ACTIONS, cfg, _dictionary(20))
        b = train(instances, THREE_ACTIONS, cfg, _dictionary(20))
        assert np.array_equal(a.weights, b.weights)
        c = train(instances, THREE_ACTIONS, TrainConfig(epochs=5, seed=43),
                  _dictionary(20))
        assert not np.array_equal(a.weights, c.weights)

    def test_separable_random_sets_converge_within_50_epochs(self):
        rng = np.random.default_rng(11)
        for trial in range(5):
            instances = []
            for _ in range(100):
                g = int(rng.integers(0, 3))
                noise = 3 + rng.choice(17, size=3, replace=False)
                instances.append((_fv(sorted({g, *noise})), g))
            model = train(
                instances,
                THREE_ACTIONS,
                TrainConfig(epochs=50, seed=trial),
                _dictionary(20),
            )
            assert model.meta["epoch_accuracy"][-1] == 1.0

    def test_dense_features_learnable(self):
        # class decided purely by which dense coordinate is hot
        instances = [
            (_fv([], [1.0, 0.0]), 0),
            (_fv([], [0.0, 1.0]), 1),
        ] * 10
        model = train(
            instances,
            TWO_ACTIONS,
            TrainConfig(epochs=20, seed=0, dense_scale=0.5),
            _dictionary(0),
            dense_dim=2,
        )
        assert model.meta["epoch_accuracy"][-1] == 1.0
        assert predict_legal(model, _fv([], [1.0, 0.0]), {SHIFT, LEFT_ARC}) == \
            Transition(SHIFT)

    def test_bias_feature(self):
        # class 1 dominates; only a bias row can express that prior for
        # feature-free vectors
        instances = [(_fv([]), 1)] * 9 + [(_fv([0]), 0)]
        model = train(
            instances,
            TWO_ACTIONS,
            TrainConfig(epochs=20, seed=0, add_bias=True),
            _dictionary(1),
        )
        assert model.weights.shape[0] == 2  # dictionary row + bias row
        assert predict_legal(model, _fv([]), {SHIFT, LEFT_ARC}) == \
            Transition(LEFT_ARC, "a")

    def test_hinge_trainer_separable(self):
        instances = [(_fv([0]), 0), (_fv([1]), 1)] * 5
        model = train(
            instances,
            TWO_ACTIONS,
            TrainConfig(trainer="hinge_sgd", epochs=30, seed=0, l2=0.01),
            _dictionary(2),
        )
        assert model.meta["epoch_accuracy"][-1] == 1.0

    def test_empty_stream_rejected(self):
        with pytest.raises(ValueError, match="empty"):
            train([], TWO_ACTIONS, TrainConfig(), _dictionary(1))

    def test_unknown_gold_action_rejected(self):
        with pytest.raises(ValueError, match="outside action space"):
            train([(_fv([0]), 7)], TWO_ACTIONS, TrainConfig(), _dictionary(1))


def _manual_model(weights, dense_dim=0, dense_scale=1.0, actions=THREE_ACTIONS):
    return LinearModel(
        actions=actions,
        dictionary=_dictionary(weights.shape[0] - dense_dim),
        weights=np.asarray(weights, dtype=np.float64),
        dense_dim=dense_dim,
        dense_scale=dense_scale,
        meta={},
    )


class TestScore:
    def test_empty_vector_scores_zero(self):
        model = _manual_model(np.arange(12.0).reshape(4, 3))
        assert np.array_equal(score(model, _fv([])), np.zeros(3))

    def test_single_feature_returns_row(self):
        w = np.arange(12.0).reshape(4, 3)
        model = _manual_model(w)
        assert np.array_equal(score(model, _fv([2])), w[2])

    def test_dense_scale_linearity(self):
        w = np.ones((4, 3))
        base = _manual_model(w, dense_dim=2, dense_scale=1.0)
        double = _manual_model(w, dense_dim=2, dense_scale=2.0)
        fv = _fv([0], [0.5, 0.25])
        sparse_part = w[0]
        assert np.allclose(
            score(double, fv) - sparse_part,
            2.0 * (score(base, fv) - sparse_part),
        )

    def test_dense_length_checked(self):
        model = _manual_model(np.ones((4, 3)), dense_dim=2)
        with pytest.raises(ValueError, match="dense length"):
            score(model, _fv([0]))


class TestPredictLegal:
    def test_tie_breaks_to_lowest_id(self):
        model = _manual_model(np.zeros((4, 3)))
        got = predict_legal(model, _fv([1]), {SHIFT, LEFT_ARC, RIGHT_ARC})
        assert got == Transition(SHIFT)

    def test_best_global_masked_out(self):
        w = np.zeros((4, 3))
        w[1] = [0.0, 5.0, 1.0]  # left_arc wins globally
        model = _manual_model(w)
        got = predict_legal(model, _fv([1]), {SHIFT, RIGHT_ARC})
        assert got == Transition(RIGHT_ARC, "b")

    def test_translation_invariance(self):
        rng = np.random.default_rng(0)
        w = rng.standard_normal((6, 3))
        model = _manual_model(w)
        shifted = _manual_model(w + 10.0)
        fv = _fv([0, 3, 5])
        legal = {SHIFT, LEFT_ARC, RIGHT_ARC}
        assert predict_legal(model, fv, legal) == predict_legal(shifted, fv, legal)

    def test_masking_soundness(self):
        rng = np.random.default_rng(7)
        model = _manual_model(rng.standard_normal((10, 3)))
        legal_sets = [{SHIFT}, {RIGHT_ARC}, {SHIFT, RIGHT_ARC},
                      {SHIFT, LEFT_ARC, RIGHT_ARC}]
        for _ in range(50):
            fv = _fv(sorted(rng.choice(10, size=3, replace=False)))
            for legal in legal_sets:
                assert predict_legal(model, fv, legal).kind in legal

    def test_empty_legal_rejected(self):
        model = _manual_model(np.zeros((2, 3)))
        with pytest.raises(ValueError, match="legal"):
            predict_legal(model, _fv([0]), set())
