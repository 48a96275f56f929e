"""The ``stagdep`` command line tool.

Subcommands: train, parse, eval, pca-fit, synth-supertags, ablate.
Options may also come from a JSON config file (``--config``); explicit
flags win on conflict. Exit codes: 0 success, 1 I/O or data error,
2 usage error. All randomness flows from ``--seed``.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys

from . import parser as parsing, pca as pca_mod, treebank
from .classifier import TrainConfig
from .errors import DataError
from .features import FeatureModel

log = logging.getLogger("stagdep")


class UsageError(Exception):
    """Bad flag combination detected after argument parsing."""


def _read(path: str) -> str:
    with open(path, "r", encoding="utf-8") as fh:
        return fh.read()


def _write(path: str, text: str) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def _load_treebank(path: str):
    return treebank.parse_conll(_read(path))


def _load_annotated(tb_path, tags_path, inv):
    sentences = _load_treebank(tb_path)
    if tags_path is None:
        return sentences
    if inv is None:
        raise UsageError("--supertags requires --inventory")
    annotations = treebank.parse_supertag_file(_read(tags_path), inv)
    return treebank.attach_supertags(sentences, annotations)


def _hyper(args) -> TrainConfig:
    return TrainConfig(
        trainer=args.trainer,
        epochs=args.epochs,
        seed=args.seed,
        dense_scale=args.dense_scale,
        l2=args.l2,
        lr=args.lr,
        add_bias=args.add_bias,
    )


def cmd_train(args) -> int:
    try:
        fm = FeatureModel.from_name(
            args.features, k=args.k, sd_addresses=args.sd_addresses
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    if fm.needs_supertags() and args.supertags is None:
        raise UsageError(
            f"feature model {fm.name} requires --supertags and --inventory"
        )
    inv = treebank.load_inventory(_read(args.inventory)) if args.inventory else None
    sentences = _load_annotated(args.treebank, args.supertags, inv)
    model = parsing.train_pipeline(
        sentences,
        args.features,
        k=args.k,
        sd_addresses=args.sd_addresses,
        inventory=inv,
        hyper=_hyper(args),
        center=not args.no_center,
        pca_subsample=args.pca_subsample,
        pca_per_type=args.pca_per_type,
    )
    parsing.save_model(model, args.model)
    print(
        f"trained {model.feature_model.name} on {model.meta['sentences']} "
        f"sentences ({model.meta['filtered_nonprojective']} non-projective "
        f"filtered); model written to {args.model}"
    )
    return 0


def cmd_parse(args) -> int:
    model = parsing.load_model(args.model)
    inv = model.inventory
    if model.feature_model.needs_supertags() and args.supertags is None:
        log.warning(
            "model %s uses supertag features but no --supertags file was "
            "given; those features fall back to NULL/zero values",
            model.feature_model.name,
        )
    sentences = _load_treebank(args.input)
    if args.supertags is not None:
        if inv is None:
            raise DataError(
                "model carries no supertag inventory; cannot read --supertags"
            )
        annotations = treebank.parse_supertag_file(_read(args.supertags), inv)
        sentences = treebank.attach_supertags(sentences, annotations)
    result = parsing.parse_corpus(model, sentences)
    predicted = parsing.attach_predictions(sentences, result)
    _write(args.output, treebank.emit_conll(predicted, use_predicted=True))
    print(f"parsed {len(sentences)} sentences into {args.output}")
    return 0


def cmd_eval(args) -> int:
    gold = _load_treebank(args.gold)
    pred = _load_treebank(args.pred)
    report = parsing.evaluate_sentences(
        gold,
        pred,
        exclude_punct=args.exclude_punct,
        punct_pos=tuple(args.punct_pos.split(",")),
    )
    text = str(report) + "\n"
    sys.stdout.write(text)
    if args.output:
        _write(args.output, text)
    return 0


def cmd_pca_fit(args) -> int:
    inv = treebank.load_inventory(_read(args.inventory))
    sentences = _load_annotated(args.treebank, args.supertags, inv)
    model = parsing.fit_pca_on_sentences(
        sentences,
        n=inv.n,
        k=args.k,
        seed=args.seed,
        center=not args.no_center,
        subsample=args.pca_subsample,
        per_type=args.pca_per_type,
    )
    pca_mod.save_pca(model, args.output)
    print(f"fitted PCA (n={model.n}, k={model.k}) written to {args.output}")
    for idx, var, cum in pca_mod.explained_variance_report(model):
        print(f"component {idx}: variance {var:.6g}, cumulative {cum:.4f}")
    return 0


def cmd_synth_supertags(args) -> int:
    sentences = _load_treebank(args.treebank)
    annotations = treebank.synth_supertags(
        sentences, args.inventory_size, args.noise, args.seed
    )
    inv = treebank.synthetic_inventory(args.inventory_size)
    _write(args.output, treebank.emit_supertag_file(annotations, inv))
    _write(args.inventory_out, treebank.emit_inventory(inv))
    print(
        f"wrote synthetic supertags for {len(sentences)} sentences to "
        f"{args.output} (inventory: {args.inventory_out})"
    )
    return 0


def cmd_ablate(args) -> int:
    configs = [c.strip() for c in args.configs.split(",") if c.strip()]
    if not configs:
        raise UsageError("--configs must name at least one feature model")
    sweep = (
        [int(x) for x in args.k_sweep.split(",")] if args.k_sweep else None
    )
    runs = []
    needs_tags = False
    for name in configs:
        try:
            fm = FeatureModel.from_name(
                name, k=args.k, sd_addresses=args.sd_addresses
            )
        except ValueError as exc:
            raise UsageError(str(exc)) from None
        needs_tags = needs_tags or fm.needs_supertags()
        if fm.use_sd and sweep:
            runs.extend((name, kk) for kk in sweep)
        else:
            runs.append((name, args.k if fm.use_sd else 0))
    if needs_tags and (args.train_supertags is None or args.dev_supertags is None):
        raise UsageError(
            "configs with supertag features require --train-supertags and "
            "--dev-supertags"
        )
    inv = treebank.load_inventory(_read(args.inventory)) if args.inventory else None
    train_sents = _load_annotated(args.train, args.train_supertags, inv)
    dev_sents = _load_annotated(args.dev, args.dev_supertags, inv)
    rows = parsing.ablation_run(
        train_sents,
        dev_sents,
        runs,
        inventory=inv,
        hyper=_hyper(args),
        center=not args.no_center,
        sd_addresses=args.sd_addresses,
        exclude_punct=args.exclude_punct,
    )
    table = parsing.format_results_table(rows)
    sys.stdout.write(table)
    if args.output:
        _write(args.output, table)
    return 0


def _add_train_options(p):
    p.add_argument("--epochs", type=int, default=15, help="training epochs")
    p.add_argument(
        "--trainer",
        choices=("avg_perceptron", "hinge_sgd"),
        default="avg_perceptron",
    )
    p.add_argument("--l2", type=float, default=0.0, help="L2 strength (hinge_sgd)")
    p.add_argument("--lr", type=float, default=0.1, help="learning rate (hinge_sgd)")
    p.add_argument(
        "--dense-scale",
        type=float,
        default=1.0,
        help="global scale on the dense supertag block",
    )
    p.add_argument("--add-bias", action="store_true",
                   help="include an always-on bias feature")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--k", type=int, default=64, help="PCA dimensionality")
    p.add_argument(
        "--sd-addresses",
        choices=("s0s1", "s0b0"),
        default="s0s1",
        help="tokens the dense block describes: two stack words or stack+buffer",
    )
    p.add_argument("--no-center", action="store_true", help="skip PCA mean-centering")
    p.add_argument("--pca-subsample", type=float, default=1.0)
    p.add_argument("--pca-per-type", action="store_true")


def build_parser() -> tuple[argparse.ArgumentParser, dict]:
    subcommands: dict[str, argparse.ArgumentParser] = {}
    top = argparse.ArgumentParser(
        prog="stagdep",
        description="Greedy arc-standard dependency parsing with supertag features.",
    )
    top.add_argument(
        "--config", help="JSON file of option defaults (flags win on conflict)"
    )
    sub = top.add_subparsers(dest="command", required=True)

    p = subcommands["train"] = sub.add_parser(
        "train", help="train a parsing model"
    )
    p.add_argument("--treebank", required=True)
    p.add_argument("--model", required=True, help="output model file")
    p.add_argument("--features", default="BL", help="e.g. BL, BL+BS, BL+BS+SD")
    p.add_argument("--supertags", help="supertag annotation file")
    p.add_argument("--inventory", help="supertag inventory file")
    _add_train_options(p)
    p.set_defaults(func=cmd_train)

    p = subcommands["parse"] = sub.add_parser(
        "parse", help="parse a treebank with a trained model"
    )
    p.add_argument("--model", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--supertags")
    p.set_defaults(func=cmd_parse)

    p = subcommands["eval"] = sub.add_parser(
        "eval", help="score a parsed file against gold"
    )
    p.add_argument("--gold", required=True)
    p.add_argument("--pred", required=True)
    p.add_argument("--exclude-punct", action="store_true")
    p.add_argument(
        "--punct-pos",
        default=",".join(parsing.DEFAULT_PUNCT_POS),
        help="comma-separated POS tags treated as punctuation",
    )
    p.add_argument("--output", help="also write the report here")
    p.set_defaults(func=cmd_eval)

    p = subcommands["pca-fit"] = sub.add_parser(
        "pca-fit", help="fit the supertag-distribution PCA"
    )
    p.add_argument("--treebank", required=True)
    p.add_argument("--supertags", required=True)
    p.add_argument("--inventory", required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--no-center", action="store_true")
    p.add_argument("--pca-subsample", type=float, default=1.0)
    p.add_argument("--pca-per-type", action="store_true")
    p.set_defaults(func=cmd_pca_fit)

    p = subcommands["synth-supertags"] = sub.add_parser(
        "synth-supertags", help="generate synthetic supertag annotations"
    )
    p.add_argument("--treebank", required=True)
    p.add_argument("--inventory-size", type=int, required=True)
    p.add_argument("--noise", type=float, default=0.2)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--output", required=True)
    p.add_argument("--inventory-out", required=True)
    p.set_defaults(func=cmd_synth_supertags)

    p = subcommands["ablate"] = sub.add_parser(
        "ablate", help="run a feature-model / k grid"
    )
    p.add_argument("--train", required=True)
    p.add_argument("--dev", required=True)
    p.add_argument("--configs", required=True, help="comma-separated model names")
    p.add_argument("--k-sweep", help="comma-separated k values for SD configs")
    p.add_argument("--train-supertags")
    p.add_argument("--dev-supertags")
    p.add_argument("--inventory")
    p.add_argument("--exclude-punct", action="store_true")
    p.add_argument("--output", help="results table file")
    _add_train_options(p)
    p.set_defaults(func=cmd_ablate)

    return top, subcommands


def main(argv=None) -> int:
    logging.basicConfig(
        level=logging.INFO, stream=sys.stderr, format="%(levelname)s %(message)s"
    )
    argv = list(sys.argv[1:]) if argv is None else list(argv)

    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)

    top, subcommands = build_parser()
    if known.config:
        try:
            defaults = json.loads(_read(known.config))
        except (OSError, json.JSONDecodeError) as exc:
            print(f"stagdep: cannot read config file: {exc}", file=sys.stderr)
            return 1
        if not isinstance(defaults, dict):
            print("stagdep: config file must hold a JSON object", file=sys.stderr)
            return 2
        defaults = {k.replace("-", "_"): v for k, v in defaults.items()}
        known_dests = {
            action.dest
            for p in subcommands.values()
            for action in p._actions
        }
        unknown = sorted(set(defaults) - known_dests)
        if unknown:
            print(
                f"stagdep: unknown config file option(s): {', '.join(unknown)}",
                file=sys.stderr,
            )
            return 2
        for p in subcommands.values():
            p.set_defaults(
                **{k: v for k, v in defaults.items()
                   if k in {a.dest for a in p._actions}}
            )

    try:
        args = top.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"stagdep: {exc}", file=sys.stderr)
        return 2
    except (DataError, OSError, ValueError) as exc:
        print(f"stagdep: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
