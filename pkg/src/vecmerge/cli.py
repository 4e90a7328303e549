"""Command-line front end.

Every run echoes its resolved configuration to stderr so logs are
self-describing, and all randomness flows from explicit ``--seed`` flags.
Exit codes: 0 success, 1 usage error, 2 data or validation error, 3 numeric
failure.
"""

from __future__ import annotations

import argparse
import logging
import sys

import numpy as np

from . import align as align_mod
from . import classifier as clf_mod
from . import evaluate as eval_mod
from . import merge as merge_mod
from . import model_io
from . import toydata
from .errors import DataError, NumericError, ParseError

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_NUMERIC = 3

METHOD_TAGS = {
    "lsq": align_mod.LEAST_SQUARES,
    "procrustes": align_mod.PROCRUSTES,
    "rcsls": align_mod.RCSLS,
}


class _Parser(argparse.ArgumentParser):
    """Argument parser whose usage errors exit with code 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _pair_spec(text: str):
    """Parse a --pairs value: 'all-common', 'top-norm', or 'top-norm:N'."""
    if text == "all-common":
        return ("all-common", None)
    if text == "top-norm":
        return ("top-norm", 1000)
    if text.startswith("top-norm:"):
        tail = text.split(":", 1)[1]
        try:
            budget = int(tail)
        except ValueError:
            raise argparse.ArgumentTypeError(f"bad top-norm budget {tail!r}") from None
        if budget < 1:
            raise argparse.ArgumentTypeError("top-norm budget must be positive")
        return ("top-norm", budget)
    raise argparse.ArgumentTypeError(
        f"expected 'all-common', 'top-norm', or 'top-norm:N', got {text!r}"
    )


def _batch_spec(text: str):
    if text == "full":
        return "full"
    try:
        size = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad batch size {text!r}") from None
    if size < 1:
        raise argparse.ArgumentTypeError("batch size must be positive")
    return size


def _is_classifier_file(path) -> bool:
    with open(path, encoding="utf-8") as handle:
        first = handle.readline()
    return first.startswith(clf_mod.MAGIC + " ")


def _load_feature_table(path) -> model_io.EmbeddingModel:
    """Load an embedding file, or a classifier file's word-feature table."""
    if _is_classifier_file(path):
        return clf_mod.load_classifier(path).word_features()
    return model_io.load_embeddings(path)


def _read_documents(path):
    """Read documents for prediction: labeled lines or bare token lines."""
    documents = []
    with open(path, encoding="utf-8") as handle:
        for lineno, line in enumerate(handle.read().splitlines(), start=1):
            tokens = line.split()
            if tokens and tokens[0].startswith(model_io.LABEL_PREFIX):
                tokens = tokens[1:]
            if not tokens:
                raise ParseError(path, lineno, "empty document")
            documents.append(tokens)
    return documents


def _write_text(path, text: str) -> None:
    if path is None:
        sys.stdout.write(text)
        return
    with open(path, "w", encoding="utf-8") as handle:
        handle.write(text)


def cmd_align(args) -> int:
    old = _load_feature_table(args.old)
    new = _load_feature_table(args.new)
    strategy, budget = args.pairs
    if strategy == "top-norm":
        pairs = merge_mod.select_training_pairs(old, new, "top-norm", budget)
    else:
        pairs = merge_mod.select_training_pairs(old, new, "all-common")
    logger.info("selected %d training pairs (%s)", pairs.m, strategy)
    method = METHOD_TAGS[args.method]
    if method == align_mod.LEAST_SQUARES:
        qmap = align_mod.least_squares_align(pairs, normalize=args.normalize)
    elif method == align_mod.PROCRUSTES:
        qmap = align_mod.procrustes_align(pairs, normalize=args.normalize)
        if qmap.non_unique:
            logger.warning("procrustes minimizer is not unique (degenerate spectrum)")
    else:
        config = align_mod.RcslsConfig(
            k=args.k,
            epochs=args.epochs,
            learning_rate=args.lr,
            batch_size=args.batch_size,
            init=args.init,
            seed=args.seed,
        )
        qmap = align_mod.rcsls_align(pairs, config)
        logger.info("final rcsls loss %.6f", qmap.final_loss)
    align_mod.save_map(qmap, args.out)
    logger.info("wrote map %s (method %s, d=%d)", args.out, qmap.method, qmap.dim)
    return EXIT_OK


def cmd_merge_vectors(args) -> int:
    old = model_io.load_embeddings(args.old)
    new = model_io.load_embeddings(args.new)
    qmap = align_mod.load_map(args.map)
    merged = merge_mod.merge_embeddings(old, new, qmap, args.alpha)
    model_io.save_embeddings(merged, args.out)
    logger.info("wrote %d merged vectors to %s", len(merged), args.out)
    return EXIT_OK


def cmd_merge_classifiers(args) -> int:
    old = clf_mod.load_classifier(args.old)
    new = clf_mod.load_classifier(args.new)
    qmap = align_mod.load_map(args.map)
    merged = merge_mod.merge_classifiers(old, new, qmap, args.alpha)
    clf_mod.save_classifier(merged, args.out)
    logger.info(
        "wrote merged classifier to %s (%d features)", args.out, len(merged.features)
    )
    return EXIT_OK


def cmd_train(args) -> int:
    data = model_io.load_labeled(args.data)
    config = clf_mod.TrainConfig(
        dim=args.dim,
        epochs=args.epochs,
        learning_rate=args.lr,
        ngram_order=args.ngram_order,
        min_count=args.min_count,
        seed=args.seed,
    )
    init_from = clf_mod.load_classifier(args.init_from) if args.init_from else None
    model = clf_mod.train(data, config, init_from=init_from)
    clf_mod.save_classifier(model, args.out)
    logger.info(
        "trained on %d documents, %d features; wrote %s",
        len(data), len(model.features), args.out,
    )
    return EXIT_OK


def cmd_predict(args) -> int:
    model = clf_mod.load_classifier(args.model)
    documents = _read_documents(args.data)
    unknown = 0
    lines = []
    for tokens in documents:
        unknown += clf_mod.unknown_key_count(tokens, model)
        proba = clf_mod.predict_proba(tokens, model)
        label = model.labels[int(np.argmax(proba))]
        if args.prob:
            lines.append(f"{label}\t{float(proba.max()):.6f}")
        else:
            lines.append(label)
    _write_text(args.out, "\n".join(lines) + "\n")
    logger.info("%d documents, %d unknown feature keys", len(documents), unknown)
    return EXIT_OK


def cmd_vote(args) -> int:
    model_a = clf_mod.load_classifier(args.model_a)
    model_b = clf_mod.load_classifier(args.model_b)
    documents = _read_documents(args.data)
    lines = [clf_mod.vote_ensemble(tokens, model_a, model_b) for tokens in documents]
    _write_text(args.out, "\n".join(lines) + "\n")
    logger.info("voted on %d documents", len(documents))
    return EXIT_OK


def cmd_eval_analogy(args) -> int:
    model = model_io.load_embeddings(args.model, lowercase=not args.no_lowercase)
    data = model_io.load_analogies(args.data, lowercase=not args.no_lowercase)
    report = eval_mod.eval_analogy(model, data)
    variant = args.variant
    rows = eval_mod.analogy_report_rows(report, variant, per_category=args.per_category)
    _write_text(args.out, eval_mod.render_report(rows))
    if args.figure:
        from . import plotting

        figure_rows = eval_mod.analogy_report_rows(report, variant, per_category=True)
        plotting.save_accuracy_figure(
            figure_rows, args.figure,
            title=f"analogy accuracy: {variant}",
            highlight="overall", label="split",
        )
    logger.info(
        "analogy accuracy %.4f (%d/%d)", report.accuracy, report.n_correct, report.n_total
    )
    return EXIT_OK


def cmd_eval_accuracy(args) -> int:
    model = clf_mod.load_classifier(args.model)
    data = model_io.load_labeled(args.data)
    accuracy = eval_mod.eval_accuracy(model, data)
    rows = [(args.variant, "test", accuracy)]
    _write_text(args.out, eval_mod.render_report(rows))
    logger.info("accuracy %.4f on %d documents", accuracy, len(data))
    return EXIT_OK


def cmd_split_analogy(args) -> int:
    data = model_io.load_analogies(args.data, lowercase=not args.no_lowercase)
    if args.banned_file:
        with open(args.banned_file, encoding="utf-8") as handle:
            banned = {line.strip() for line in handle if line.strip()}
    else:
        banned = eval_mod.sample_banned(data, args.fraction, args.seed)
    result = eval_mod.split_analogy(data, banned)
    model_io.save_analogies(result.in_vocab, args.out_in)
    model_io.save_analogies(result.out_of_vocab, args.out_oov)
    if args.banned_out:
        # sorted so the file does not depend on set iteration order
        _write_text(args.banned_out, "\n".join(sorted(banned)) + "\n")
    logger.info(
        "split %d questions into %d in-vocab / %d out-of-vocab (%d banned tokens)",
        data.n_questions,
        result.in_vocab.n_questions,
        result.out_of_vocab.n_questions,
        len(banned),
    )
    return EXIT_OK


def cmd_experiment(args) -> int:
    if args.toy:
        shard0, shard1, test = toydata.load_bundled()
    else:
        if not (args.shard0 and args.shard1 and args.test):
            print(
                "error: provide --toy or all of --shard0, --shard1, --test",
                file=sys.stderr,
            )
            return EXIT_USAGE
        shard0 = model_io.load_labeled(args.shard0)
        shard1 = model_io.load_labeled(args.shard1)
        test = model_io.load_labeled(args.test)
    strategy, budget = args.pairs
    config = eval_mod.ExperimentConfig(
        dim=args.dim,
        epochs=args.epochs,
        learning_rate=args.lr,
        ngram_order=args.ngram_order,
        min_count=args.min_count,
        pair_strategy=strategy,
        pair_count=budget if budget is not None else 1000,
        k=args.k,
        align_epochs=args.align_epochs,
        align_lr=args.align_lr,
        alpha=args.alpha,
        seed=args.seed,
    )
    rows = eval_mod.run_merge_experiment(shard0, shard1, test, config)
    _write_text(args.out, eval_mod.render_report(rows))
    if args.figure:
        from . import plotting

        plotting.save_accuracy_figure(
            rows, args.figure,
            title="shard-merge experiment", highlight="rcsls-fine",
        )
    return EXIT_OK


def _add_common_rcsls_flags(parser) -> None:
    parser.add_argument("--k", type=int, default=10, help="neighborhood size")
    parser.add_argument("--lr", type=float, default=1.0, help="learning rate")
    parser.add_argument("--epochs", type=int, default=10, help="training epochs")
    parser.add_argument(
        "--batch-size", type=_batch_spec, default="full",
        help="pairs per step, or 'full'",
    )
    parser.add_argument(
        "--init", choices=("procrustes", "identity"), default="procrustes",
        help="starting map",
    )
    parser.add_argument("--seed", type=int, default=0, help="random seed")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="vecmerge",
        description="Align word-vector models trained on different corpora "
        "and merge them by weighted averaging.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("align", help="fit an alignment map")
    p.add_argument("--old", required=True, help="old model (embeddings or classifier)")
    p.add_argument("--new", required=True, help="new model (embeddings or classifier)")
    p.add_argument(
        "--method", choices=tuple(METHOD_TAGS), default="procrustes",
        help="alignment estimator",
    )
    p.add_argument(
        "--pairs", type=_pair_spec, default=("all-common", None),
        help="pair selection: all-common, top-norm, or top-norm:N",
    )
    p.add_argument(
        "--normalize", action="store_true",
        help="row-normalize pairs for lsq/procrustes (rcsls always normalizes)",
    )
    _add_common_rcsls_flags(p)
    p.add_argument("--out", required=True, help="output map file")
    p.set_defaults(func=cmd_align)

    p = sub.add_parser("merge-vectors", help="merge two embedding files")
    p.add_argument("--old", required=True)
    p.add_argument("--new", required=True)
    p.add_argument("--map", required=True, help="alignment map file")
    p.add_argument("--alpha", type=float, default=0.5, help="confidence in new data")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_merge_vectors)

    p = sub.add_parser("merge-classifiers", help="merge two classifier files")
    p.add_argument("--old", required=True)
    p.add_argument("--new", required=True)
    p.add_argument("--map", required=True, help="alignment map file")
    p.add_argument("--alpha", type=float, default=0.5, help="confidence in new data")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_merge_classifiers)

    p = sub.add_parser("train", help="train a linear text classifier")
    p.add_argument("--data", required=True, help="labeled training file")
    p.add_argument("--dim", type=int, default=10, help="hidden dimensions")
    p.add_argument("--epochs", type=int, default=5)
    p.add_argument("--lr", type=float, default=0.5)
    p.add_argument("--ngram-order", type=int, choices=(1, 2), default=1)
    p.add_argument("--min-count", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument(
        "--init-from", default=None,
        help="warm-start features from this classifier file",
    )
    p.add_argument("--out", required=True, help="output classifier file")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("predict", help="predict labels for documents")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True, help="documents, labeled or bare lines")
    p.add_argument("--prob", action="store_true", help="append the max probability")
    p.add_argument("--out", default=None, help="output file (default stdout)")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("vote", help="two-model voting ensemble")
    p.add_argument("--model-a", required=True)
    p.add_argument("--model-b", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--out", default=None, help="output file (default stdout)")
    p.set_defaults(func=cmd_vote)

    p = sub.add_parser("eval-analogy", help="word-analogy accuracy")
    p.add_argument("--model", required=True, help="embedding file")
    p.add_argument("--data", required=True, help="analogy question file")
    p.add_argument("--no-lowercase", action="store_true")
    p.add_argument("--per-category", action="store_true")
    p.add_argument("--variant", default="model", help="variant name in the report")
    p.add_argument("--out", default=None, help="report file (default stdout)")
    p.add_argument("--figure", default=None, help="also render a PNG chart here")
    p.set_defaults(func=cmd_eval_analogy)

    p = sub.add_parser("eval-accuracy", help="classification accuracy")
    p.add_argument("--model", required=True, help="classifier file")
    p.add_argument("--data", required=True, help="labeled test file")
    p.add_argument("--variant", default="model", help="variant name in the report")
    p.add_argument("--out", default=None, help="report file (default stdout)")
    p.set_defaults(func=cmd_eval_accuracy)

    p = sub.add_parser("split-analogy", help="split questions around banned tokens")
    p.add_argument("--data", required=True, help="analogy question file")
    p.add_argument("--fraction", type=float, default=0.1, help="banned share per category")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument(
        "--banned-file", default=None,
        help="use this token list instead of sampling",
    )
    p.add_argument("--no-lowercase", action="store_true")
    p.add_argument("--out-in", required=True, help="in-vocabulary questions")
    p.add_argument("--out-oov", required=True, help="out-of-vocabulary questions")
    p.add_argument("--banned-out", default=None, help="write the banned tokens here")
    p.set_defaults(func=cmd_split_analogy)

    p = sub.add_parser("experiment", help="run the shard-merge comparison")
    p.add_argument("--toy", action="store_true", help="use the bundled toy corpus")
    p.add_argument("--shard0", default=None, help="labeled shard-0 file")
    p.add_argument("--shard1", default=None, help="labeled shard-1 file")
    p.add_argument("--test", default=None, help="labeled test file")
    p.add_argument("--dim", type=int, default=10)
    p.add_argument("--epochs", type=int, default=5)
    p.add_argument("--lr", type=float, default=0.5)
    p.add_argument("--ngram-order", type=int, choices=(1, 2), default=2)
    p.add_argument("--min-count", type=int, default=1)
    p.add_argument(
        "--pairs", type=_pair_spec, default=("top-norm", 1000),
        help="alignment pair selection",
    )
    p.add_argument("--k", type=int, default=10, help="rcsls neighborhood size")
    p.add_argument("--align-epochs", type=int, default=10)
    p.add_argument("--align-lr", type=float, default=1.0)
    p.add_argument("--alpha", type=float, default=0.5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None, help="report file (default stdout)")
    p.add_argument("--figure", default=None, help="also render a PNG chart here")
    p.set_defaults(func=cmd_experiment)

    return parser


def _echo_config(args) -> None:
    values = {k: v for k, v in vars(args).items() if k != "func"}
    rendered = " ".join(f"{k}={values[k]}" for k in sorted(values))
    print(f"config: {rendered}", file=sys.stderr)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    logging.basicConfig(level=logging.INFO, format="%(message)s", stream=sys.stderr)
    _echo_config(args)
    try:
        return args.func(args)
    except ParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except DataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except NumericError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
