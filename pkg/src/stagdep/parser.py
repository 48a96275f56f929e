"""Greedy parsing loop, training pipeline, evaluation, and ablation grid.

Also owns the on-disk model container, which bundles the trained weight
table with the feature model, feature dictionary, action space, optional
PCA model, and optional supertag inventory so a model file is
self-contained at parse time.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import classifier, container, pca as pca_mod, transition
from .classifier import ActionSpace, LinearModel, TrainConfig
from .errors import DataError
from .features import FeatureDictionary, FeatureModel, extract_features
from .transition import Arc, derive_sequence, initial_config, is_terminal, legal
from .treebank import Sentence, SupertagInventory, is_projective

log = logging.getLogger(__name__)

MODEL_FORMAT_VERSION = 1

DEFAULT_PUNCT_POS = ("``", "''", ".", ",", ":", "-LRB-", "-RRB-", "PUNCT")


@dataclass(frozen=True)
class ModelContainer:
    """Everything a parse run needs, as stored in a model file."""

    linear: LinearModel
    feature_model: FeatureModel
    pca: pca_mod.PcaModel | None
    inventory: SupertagInventory | None
    meta: dict


@dataclass(frozen=True)
class ParseResult:
    """Predicted arc sets, one tuple per input sentence."""

    arcs: tuple[tuple[Arc, ...], ...]

    def __len__(self) -> int:
        return len(self.arcs)


@dataclass(frozen=True)
class EvalReport:
    uas: float
    las: float
    scored_tokens: int
    total_tokens: int
    sentence_count: int
    exclude_punct: bool

    def __post_init__(self):
        if not (0.0 <= self.las <= self.uas <= 1.0):
            raise ValueError(
                f"need 0 <= LAS <= UAS <= 1, got UAS={self.uas} LAS={self.las}"
            )

    def __str__(self):
        conv = "excluded" if self.exclude_punct else "scored"
        return (
            f"UAS {100 * self.uas:.2f}  LAS {100 * self.las:.2f}  "
            f"({self.scored_tokens} tokens over {self.sentence_count} "
            f"sentences, punctuation {conv})"
        )


def parse_sentence(model: ModelContainer, sentence: Sentence) -> tuple[Arc, ...]:
    """Greedy parse: extract, predict among legal moves, apply, repeat.

    Always terminates in exactly 2N transitions and attaches every token.
    """
    config = initial_config(sentence)
    limit = 2 * len(sentence)
    steps = 0
    while not is_terminal(config):
        if steps >= limit:
            raise AssertionError("parse exceeded 2N transitions")
        fv = extract_features(
            config,
            sentence,
            model.feature_model,
            model.linear.dictionary,
            pca_model=model.pca,
            inventory=model.inventory,
        )
        t = classifier.predict_legal(model.linear, fv, legal(config))
        config = transition.apply(config, t)
        steps += 1
    return config.arcs


def parse_corpus(model: ModelContainer, sentences) -> ParseResult:
    return ParseResult(tuple(parse_sentence(model, s) for s in sentences))


def attach_predictions(sentences, result: ParseResult) -> list[Sentence]:
    """Write predicted heads/labels onto copies of the gold sentences."""
    if len(sentences) != len(result):
        raise DataError(
            f"{len(sentences)} sentences but {len(result)} parse results"
        )
    out = []
    for sent, arcs in zip(sentences, result.arcs):
        heads = [0] * len(sent)
        labels = [""] * len(sent)
        for h, d, lab in arcs:
            heads[d - 1] = h
            labels[d - 1] = lab
        out.append(sent.with_predictions(heads, labels))
    return out


def evaluate(
    gold_sentences,
    result: ParseResult,
    exclude_punct: bool = False,
    punct_pos=DEFAULT_PUNCT_POS,
) -> EvalReport:
    """Attachment scores of predicted arcs against the gold trees."""
    if len(gold_sentences) != len(result):
        raise DataError(
            f"{len(gold_sentences)} gold sentences but {len(result)} predictions"
        )
    punct = set(punct_pos)
    scored = total = correct_head = correct_labeled = 0
    for sent, arcs in zip(gold_sentences, result.arcs):
        pred_head = {}
        pred_label = {}
        for h, d, lab in arcs:
            if d in pred_head:
                raise DataError(f"token {d} has two predicted heads")
            pred_head[d] = h
            pred_label[d] = lab
        if set(pred_head) != {t.index for t in sent}:
            raise DataError(
                f"predictions cover {len(pred_head)} tokens, "
                f"sentence has {len(sent)}"
            )
        for tok in sent:
            total += 1
            if exclude_punct and tok.pos in punct:
                continue
            scored += 1
            if pred_head[tok.index] == tok.gold_head:
                correct_head += 1
                if pred_label[tok.index] == tok.gold_label:
                    correct_labeled += 1
    if scored == 0:
        raise DataError("no scored tokens (is everything punctuation?)")
    return EvalReport(
        uas=correct_head / scored,
        las=correct_labeled / scored,
        scored_tokens=scored,
        total_tokens=total,
        sentence_count=len(gold_sentences),
        exclude_punct=exclude_punct,
    )


def evaluate_sentences(
    gold_sentences,
    predicted_sentences,
    exclude_punct: bool = False,
    punct_pos=DEFAULT_PUNCT_POS,
) -> EvalReport:
    """Evaluate a predicted treebank (HEAD/DEPREL columns) against gold."""
    if len(gold_sentences) != len(predicted_sentences):
        raise DataError(
            f"{len(gold_sentences)} gold sentences but "
            f"{len(predicted_sentences)} predicted"
        )
    arcs = []
    for i, (g, p) in enumerate(
        zip(gold_sentences, predicted_sentences), start=1
    ):
        if len(g) != len(p) or any(
            gt.form != pt.form for gt, pt in zip(g, p)
        ):
            raise DataError(f"sentence {i}: token mismatch between files")
        arcs.append(
            tuple(Arc(t.gold_head, t.index, t.gold_label) for t in p)
        )
    return evaluate(
        gold_sentences, ParseResult(tuple(arcs)), exclude_punct, punct_pos
    )


def _pca_vectors(sentences, subsample: float, per_type: bool, rng):
    seen_forms = set()
    for sent in sentences:
        for tok in sent:
            if tok.supertag_dist is None:
                continue
            if per_type:
                if tok.form in seen_forms:
                    continue
                seen_forms.add(tok.form)
            if subsample < 1.0 and rng.random() >= subsample:
                continue
            yield tok.supertag_dist.ids, tok.supertag_dist.probs


def fit_pca_on_sentences(
    sentences,
    n: int,
    k: int,
    seed: int = 0,
    center: bool = True,
    subsample: float = 1.0,
    per_type: bool = False,
) -> pca_mod.PcaModel:
    """Fit the supertag-distribution PCA on annotated sentences."""
    rng = np.random.default_rng(seed)
    vectors = list(_pca_vectors(sentences, subsample, per_type, rng))
    if not vectors:
        raise DataError("no supertag distributions found for PCA fitting")
    return pca_mod.fit(vectors, n=n, k=k, seed=seed, center=center)


def train_pipeline(
    sentences,
    feature_model_name: str,
    *,
    k: int = 0,
    sd_addresses: str = "s0s1",
    inventory: SupertagInventory | None = None,
    hyper: TrainConfig | None = None,
    center: bool = True,
    pca_subsample: float = 1.0,
    pca_per_type: bool = False,
) -> ModelContainer:
    """Train a parsing model end to end.

    Filters non-projective sentences (logged), fits the PCA when the
    distribution block is enabled, generates oracle instances, fits and
    freezes the feature dictionary, trains the classifier, and bundles
    the result.
    """
    hyper = hyper or TrainConfig()
    fm = FeatureModel.from_name(feature_model_name, k=k, sd_addresses=sd_addresses)

    kept = []
    dropped = []
    for i, sent in enumerate(sentences, start=1):
        if is_projective(sent):
            kept.append(sent)
        else:
            dropped.append(i)
    if dropped:
        log.warning(
            "filtered %d non-projective sentence(s): %s",
            len(dropped),
            ", ".join(map(str, dropped[:20])) + ("..." if len(dropped) > 20 else ""),
        )
    if not kept:
        raise DataError("every training sentence was filtered as non-projective")

    if fm.needs_supertags() and not any(
        tok.best_supertag is not None for sent in kept for tok in sent
    ):
        raise DataError(
            f"feature model {fm.name} needs supertag annotations, "
            "but no token carries any"
        )

    pca_model = None
    if fm.use_sd:
        dists = [
            tok.supertag_dist
            for sent in kept
            for tok in sent
            if tok.supertag_dist is not None
        ]
        if not dists:
            raise DataError("SD features enabled but no distributions present")
        n = inventory.n if inventory is not None else dists[0].n
        pca_seed = int(
            np.random.SeedSequence((hyper.seed, 1)).generate_state(1)[0]
        )
        pca_model = fit_pca_on_sentences(
            kept,
            n=n,
            k=k,
            seed=pca_seed,
            center=center,
            subsample=pca_subsample,
            per_type=pca_per_type,
        )

    dictionary = FeatureDictionary()
    staged = []
    for sent in kept:
        for config, t in derive_sequence(sent):
            fv = extract_features(
                config,
                sent,
                fm,
                dictionary,
                pca_model=pca_model,
                inventory=inventory,
            )
            staged.append((fv, t))
    dictionary.freeze()
    actions = ActionSpace.from_transitions(t for _, t in staged)
    instances = [(fv, actions.id_of(t)) for fv, t in staged]

    linear = classifier.train(
        instances, actions, hyper, dictionary, dense_dim=fm.dense_dim
    )
    meta = {
        "sentences": len(kept),
        "filtered_nonprojective": len(dropped),
        "center": center,
        "pca_subsample": pca_subsample,
        "pca_per_type": pca_per_type,
    }
    return ModelContainer(
        linear=linear,
        feature_model=fm,
        pca=pca_model,
        inventory=inventory,
        meta=meta,
    )


def save_model(model: ModelContainer, path) -> None:
    fm = model.feature_model
    addresses_key = next(
        key
        for key, value in (("s0s1", ("s0", "s1")), ("s0b0", ("s0", "b0")))
        if value == fm.sd_addresses
    )
    tids, values = model.linear.dictionary.to_arrays()
    meta = {
        "format": "stagdep-model",
        "version": MODEL_FORMAT_VERSION,
        "feature_model": {
            "name": fm.name,
            "k": fm.k,
            "sd_addresses": addresses_key,
        },
        "actions": [str(t) for t in model.linear.actions.actions],
        "dense_dim": model.linear.dense_dim,
        "dense_scale": model.linear.dense_scale,
        "add_bias": model.linear.add_bias,
        "dict_values": values,
        "inventory": list(model.inventory.tags) if model.inventory else None,
        "train": model.linear.meta,
        "pipeline": model.meta,
        "pca": None
        if model.pca is None
        else {
            "n": model.pca.n,
            "k": model.pca.k,
            "center": model.pca.center,
            "total_variance": model.pca.total_variance,
        },
    }
    arrays = {"weights": model.linear.weights, "dict_template_ids": tids}
    if model.pca is not None:
        arrays["pca_mean"] = model.pca.mean
        arrays["pca_components"] = model.pca.components
        arrays["pca_explained_variance"] = model.pca.explained_variance
    container.save_container(path, meta, arrays)


def load_model(path) -> ModelContainer:
    meta, arrays = container.load_container(path)
    if meta.get("format") != "stagdep-model":
        raise DataError(f"{path}: not a stagdep model file")
    if meta.get("version") != MODEL_FORMAT_VERSION:
        raise DataError(
            f"{path}: model file version {meta.get('version')} unsupported "
            f"(expected {MODEL_FORMAT_VERSION})"
        )
    fm_meta = meta["feature_model"]
    fm = FeatureModel.from_name(
        fm_meta["name"], k=int(fm_meta["k"]), sd_addresses=fm_meta["sd_addresses"]
    )
    dictionary = FeatureDictionary.from_arrays(
        arrays["dict_template_ids"], meta["dict_values"]
    )
    actions = ActionSpace(
        tuple(transition.Transition.from_string(s) for s in meta["actions"])
    )
    pca_model = None
    if meta["pca"] is not None:
        pm = meta["pca"]
        pca_model = pca_mod.PcaModel(
            n=int(pm["n"]),
            k=int(pm["k"]),
            center=bool(pm["center"]),
            mean=arrays["pca_mean"],
            components=arrays["pca_components"],
            explained_variance=arrays["pca_explained_variance"],
            total_variance=float(pm["total_variance"]),
        )
    inventory = (
        SupertagInventory(tuple(meta["inventory"]))
        if meta["inventory"] is not None
        else None
    )
    linear = LinearModel(
        actions=actions,
        dictionary=dictionary,
        weights=arrays["weights"],
        dense_dim=int(meta["dense_dim"]),
        dense_scale=float(meta["dense_scale"]),
        meta=meta["train"],
        add_bias=bool(meta["add_bias"]),
    )
    return ModelContainer(
        linear=linear,
        feature_model=fm,
        pca=pca_model,
        inventory=inventory,
        meta=meta["pipeline"],
    )


class AblationRow(NamedTuple):
    config: str
    k: int
    report: EvalReport
    seed: int
    captured_variance: float | None


def ablation_run(
    train_sentences,
    dev_sentences,
    runs,
    *,
    inventory: SupertagInventory | None = None,
    hyper: TrainConfig | None = None,
    center: bool = True,
    sd_addresses: str = "s0s1",
    exclude_punct: bool = False,
) -> list[AblationRow]:
    """Train and evaluate one model per (feature name, k) pair.

    Every run uses the same seed and hyperparameters, so a rerun over the
    same inputs reproduces the table exactly.
    """
    hyper = hyper or TrainConfig()
    rows = []
    for entry in runs:
        name, k = entry if isinstance(entry, tuple) else (entry, 0)
        log.info("ablation run: %s (k=%d)", name, k)
        model = train_pipeline(
            train_sentences,
            name,
            k=k,
            sd_addresses=sd_addresses,
            inventory=inventory,
            hyper=hyper,
            center=center,
        )
        report = evaluate(
            dev_sentences,
            parse_corpus(model, dev_sentences),
            exclude_punct=exclude_punct,
        )
        captured = None
        if model.pca is not None:
            captured = pca_mod.explained_variance_report(model.pca)[-1][2]
        rows.append(
            AblationRow(
                config=model.feature_model.name,
                k=k,
                report=report,
                seed=hyper.seed,
                captured_variance=captured,
            )
        )
    return rows


def format_results_table(rows) -> str:
    """Tab-separated ablation results, one line per run."""
    out = [
        "config\tk\tuas\tlas\ttokens\tpunct\tseed\tcaptured_variance\n"
    ]
    for row in rows:
        punct = "excluded" if row.report.exclude_punct else "scored"
        captured = (
            "-" if row.captured_variance is None else f"{row.captured_variance:.6f}"
        )
        out.append(
            f"{row.config}\t{row.k}\t{row.report.uas:.6f}\t"
            f"{row.report.las:.6f}\t{row.report.scored_tokens}\t"
            f"{punct}\t{row.seed}\t{captured}\n"
        )
    return "".join(out)
