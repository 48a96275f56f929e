"""Multiclass linear model over labeled transitions.

Labels are fused into the action space (``left_arc:det`` is one class).
The weight table has one row per feature: sparse boolean rows first, then
the dense-block rows, whose contribution is multiplied by a single global
scale factor. The reference trainer is an averaged multiclass perceptron;
a hinge-loss SGD trainer with L2 decay sits behind the same interface.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .features import FeatureDictionary, FeatureVector
from .transition import LEFT_ARC, RIGHT_ARC, SHIFT, Transition

log = logging.getLogger(__name__)

TRAINERS = ("avg_perceptron", "hinge_sgd")


@dataclass(frozen=True)
class ActionSpace:
    """Ordered labeled transitions; ids are positions and stay stable.

    Shift is always present at id 0, followed by the observed left_arc
    labels and then the observed right_arc labels, each sorted.
    """

    actions: tuple[Transition, ...]
    index: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if not self.actions or self.actions[0] != Transition(SHIFT):
            raise ValueError("action space must start with shift")
        index = {}
        for i, t in enumerate(self.actions):
            key = (t.kind, t.label)
            if key in index:
                raise ValueError(f"duplicate action {t}")
            index[key] = i
        object.__setattr__(self, "index", index)

    @classmethod
    def from_transitions(cls, transitions) -> "ActionSpace":
        left = set()
        right = set()
        for t in transitions:
            if t.kind == LEFT_ARC:
                left.add(t.label)
            elif t.kind == RIGHT_ARC:
                right.add(t.label)
        actions = [Transition(SHIFT)]
        actions += [Transition(LEFT_ARC, lab) for lab in sorted(left)]
        actions += [Transition(RIGHT_ARC, lab) for lab in sorted(right)]
        return cls(tuple(actions))

    def __len__(self) -> int:
        return len(self.actions)

    def id_of(self, t: Transition) -> int:
        try:
            return self.index[(t.kind, t.label)]
        except KeyError:
            raise ValueError(f"action {t} not in action space") from None


@dataclass
class TrainConfig:
    trainer: str = "avg_perceptron"
    epochs: int = 10
    seed: int = 0
    dense_scale: float = 1.0
    l2: float = 0.0
    lr: float = 0.1
    shuffle: bool = True
    add_bias: bool = False

    def __post_init__(self):
        if self.trainer not in TRAINERS:
            raise ValueError(f"trainer must be one of {TRAINERS}")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")


@dataclass(frozen=True, eq=False)
class LinearModel:
    """Trained weights plus everything needed to score a feature vector.

    Weight rows: dictionary features first, then the always-on bias row
    (when enabled), then the dense block.
    """

    actions: ActionSpace
    dictionary: FeatureDictionary
    weights: np.ndarray
    dense_dim: int
    dense_scale: float
    meta: dict
    add_bias: bool = False

    @property
    def bias_row(self) -> int | None:
        return len(self.dictionary) if self.add_bias else None


def _pack(instances, n_actions, bias_row=None):
    indptr = [0]
    ids = []
    dense = []
    gold = []
    bias = (
        np.asarray([], dtype=np.int32)
        if bias_row is None
        else np.asarray([bias_row], dtype=np.int32)
    )
    for fv, g in instances:
        if not (0 <= g < n_actions):
            raise ValueError(f"gold action id {g} outside action space")
        ids.append(np.concatenate([fv.sparse, bias]))
        dense.append(fv.dense)
        gold.append(g)
        indptr.append(indptr[-1] + len(ids[-1]))
    if not gold:
        raise ValueError("empty instance stream")
    dense_dims = {len(d) for d in dense}
    if len(dense_dims) != 1:
        raise ValueError(f"inconsistent dense lengths {sorted(dense_dims)}")
    return (
        np.asarray(indptr, dtype=np.int64),
        np.concatenate(ids).astype(np.int32)
        if any(len(i) for i in ids)
        else np.zeros(0, np.int32),
        np.ascontiguousarray(np.stack(dense) if dense_dims != {0} else
                             np.zeros((len(gold), 0))),
        np.asarray(gold, dtype=np.int32),
    )


def train(
    instances,
    actions: ActionSpace,
    hyper: TrainConfig,
    dictionary: FeatureDictionary,
    dense_dim: int = 0,
) -> LinearModel:
    """Train a model on (FeatureVector, gold action id) pairs.

    Deterministic for a fixed seed; per-epoch training accuracy is logged
    and recorded in the model metadata. The dictionary must already hold
    every sparse id the instances use (it is frozen here if it was not).
    """
    dictionary.freeze()
    bias_row = len(dictionary) if hyper.add_bias else None
    indptr, ids, dense, gold = _pack(instances, len(actions), bias_row)
    if dense.shape[1] != dense_dim:
        raise ValueError(
            f"instances carry dense length {dense.shape[1]}, expected {dense_dim}"
        )
    n_rows = len(dictionary) + int(hyper.add_bias) + dense_dim
    if len(ids) and int(ids.max()) >= n_rows - dense_dim:
        raise ValueError("sparse feature id outside dictionary")
    n = len(gold)
    rng = np.random.default_rng(hyper.seed)
    weights = np.zeros((n_rows, len(actions)))
    epoch_accuracy = []

    if hyper.trainer == "avg_perceptron":
        acc = np.zeros_like(weights)
        last_step = np.zeros_like(weights)
        step = 0
        for epoch in range(hyper.epochs):
            order = rng.permutation(n) if hyper.shuffle else np.arange(n)
            correct, step = kernels.perceptron_epoch(
                weights,
                acc,
                last_step,
                step,
                indptr,
                ids,
                dense,
                hyper.dense_scale,
                gold,
                order.astype(np.int64),
            )
            epoch_accuracy.append(correct / n)
            log.info(
                "epoch %d: training accuracy %.4f", epoch + 1, correct / n
            )
            if correct == n:
                break
        final = kernels.average_weights(weights, acc, last_step, step)
    else:
        wscale = 1.0
        for epoch in range(hyper.epochs):
            order = rng.permutation(n) if hyper.shuffle else np.arange(n)
            correct, wscale = kernels.hinge_epoch(
                weights,
                wscale,
                indptr,
                ids,
                dense,
                hyper.dense_scale,
                gold,
                order.astype(np.int64),
                hyper.lr,
                hyper.l2,
            )
            epoch_accuracy.append(correct / n)
            log.info(
                "epoch %d: training accuracy %.4f", epoch + 1, correct / n
            )
        final = wscale * weights

    meta = {
        "trainer": hyper.trainer,
        "epochs": hyper.epochs,
        "seed": hyper.seed,
        "l2": hyper.l2,
        "lr": hyper.lr,
        "shuffle": hyper.shuffle,
        "add_bias": hyper.add_bias,
        "instances": n,
        "epoch_accuracy": epoch_accuracy,
        "backend": kernels.BACKEND,
    }
    return LinearModel(
        actions=actions,
        dictionary=dictionary,
        weights=final,
        dense_dim=dense_dim,
        dense_scale=hyper.dense_scale,
        meta=meta,
        add_bias=hyper.add_bias,
    )


def score(model: LinearModel, fv: FeatureVector) -> np.ndarray:
    """Per-action scores; without the bias flag an empty vector scores zero."""
    if len(fv.dense) != model.dense_dim:
        raise ValueError(
            f"dense length {len(fv.dense)} does not match model "
            f"dense_dim {model.dense_dim}"
        )
    sparse = fv.sparse
    if model.add_bias:
        sparse = np.concatenate(
            [sparse, np.asarray([model.bias_row], dtype=np.int32)]
        )
    return kernels.score_rows(model.weights, sparse, fv.dense, model.dense_scale)


def predict_legal(model: LinearModel, fv: FeatureVector, legal) -> Transition:
    """Highest-scoring action whose kind is legal; ties break to the
    lowest action id."""
    if not legal:
        raise ValueError("no legal transition kinds")
    scores = score(model, fv)
    best = None
    best_score = 0.0
    for aid, action in enumerate(model.actions.actions):
        if action.kind not in legal:
            continue
        if best is None or scores[aid] > best_score:
            best = action
            best_score = scores[aid]
    if best is None:
        raise ValueError("no action in the action space has a legal kind")
    return best
