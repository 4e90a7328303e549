"""Evaluation harnesses: word analogies, classification accuracy, and the
shard-merge experiment driver.

Analogy questions are scored by the additive offset rule (3CosAdd) on
unit-normalized vectors, with the three query tokens excluded from the
candidate set.  Reports are tab-separated (variant, split, accuracy) tables.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from .align import RcslsConfig, normalize_rows, rcsls_align
from .classifier import (
    LinearTextClassifier,
    TrainConfig,
    predict_label,
    train,
    vote_ensemble,
)
from .errors import DataError
from .merge import merge_classifiers, select_training_pairs
from .model_io import AnalogyDataset, EmbeddingModel, LabeledDataset

logger = logging.getLogger(__name__)

REPORT_HEADER = ("variant", "split", "accuracy")

EXPERIMENT_VARIANTS = (
    "train-s0",
    "train-s1",
    "train-union",
    "fine-tune",
    "vote",
    "rcsls-fine",
)


@dataclass(eq=False)
class AnalogySplit:
    """An analogy dataset partitioned around a banned-token set.

    A question lands in ``out_of_vocab`` iff at least one of its four tokens
    is banned; the two parts partition the source dataset.
    """

    out_of_vocab: AnalogyDataset
    in_vocab: AnalogyDataset
    banned: set[str]


def split_analogy(data: AnalogyDataset, banned) -> AnalogySplit:
    """Partition questions by whether they touch a banned token.

    Question order is preserved within each part; categories left empty on
    one side are dropped from that side.
    """
    banned = set(banned)
    oov_cats = []
    in_cats = []
    for name, questions in data.categories:
        oov = [q for q in questions if any(tok in banned for tok in q)]
        rest = [q for q in questions if not any(tok in banned for tok in q)]
        if oov:
            oov_cats.append((name, oov))
        if rest:
            in_cats.append((name, rest))
    return AnalogySplit(AnalogyDataset(oov_cats), AnalogyDataset(in_cats), banned)


def sample_banned(data: AnalogyDataset, fraction: float, seed: int) -> set[str]:
    """Sample a banned-token set, taking ceil(fraction * vocab) per category.

    Each category's vocabulary is sampled uniformly without replacement; the
    union over categories is returned.
    """
    if not 0.0 < fraction < 1.0:
        raise DataError(f"fraction must lie strictly between 0 and 1, got {fraction}")
    rng = np.random.default_rng(seed)
    banned: set[str] = set()
    for _, questions in data.categories:
        vocab = sorted({tok for q in questions for tok in q})
        if not vocab:
            continue
        # the tiny slack keeps float noise in fraction*n from bumping the ceiling
        count = math.ceil(fraction * len(vocab) - 1e-9)
        picks = rng.choice(len(vocab), size=count, replace=False)
        banned.update(vocab[i] for i in picks)
    return banned


@dataclass(eq=False)
class AnalogyReport:
    """Per-category correct/total counts plus the micro-averaged overall."""

    categories: list[tuple[str, int, int]]

    @property
    def n_correct(self) -> int:
        return sum(c for _, c, _ in self.categories)

    @property
    def n_total(self) -> int:
        return sum(t for _, _, t in self.categories)

    @property
    def accuracy(self) -> float:
        return self.n_correct / self.n_total if self.n_total else 0.0


def eval_analogy(model: EmbeddingModel, data: AnalogyDataset) -> AnalogyReport:
    """Score analogy questions with 3CosAdd over the model vocabulary.

    For ``a : b :: c : ?`` the prediction is the vocabulary token maximizing
    cosine similarity to ``b - a + c`` (unit vectors), with a, b, c excluded.
    Questions with any query token missing count as incorrect rather than
    being skipped, so fully out-of-vocabulary question sets score 0.0.
    """
    normed = normalize_rows(model.matrix)
    results = []
    for name, questions in data.categories:
        correct = 0
        for a, b, c, d in questions:
            if a not in model or b not in model or c not in model:
                continue
            ia, ib, ic = model.index_of(a), model.index_of(b), model.index_of(c)
            offset = normed[ib] - normed[ia] + normed[ic]
            scores = normed @ offset
            scores[[ia, ib, ic]] = -np.inf
            if model.vocab[int(np.argmax(scores))] == d:
                correct += 1
        results.append((name, correct, len(questions)))
    return AnalogyReport(results)


def eval_accuracy(model: LinearTextClassifier, data: LabeledDataset) -> float:
    """Fraction of documents whose predicted label matches the gold label."""
    if not data.documents:
        raise DataError("dataset is empty")
    known = set(model.labels)
    for label, _ in data.documents:
        if label not in known:
            raise DataError(f"gold label {label!r} is not among the model labels")
    hits = sum(
        1 for label, tokens in data.documents if predict_label(tokens, model) == label
    )
    return hits / len(data.documents)


def vote_accuracy(
    a: LinearTextClassifier, b: LinearTextClassifier, data: LabeledDataset
) -> float:
    """Accuracy of the two-model vote ensemble."""
    if not data.documents:
        raise DataError("dataset is empty")
    hits = sum(
        1 for label, tokens in data.documents if vote_ensemble(tokens, a, b) == label
    )
    return hits / len(data.documents)


@dataclass
class ExperimentConfig:
    """Settings for :func:`run_merge_experiment`.

    Training fields mirror :class:`TrainConfig`; ``pair_strategy`` and
    ``pair_count`` select alignment pairs; ``k``, ``align_epochs`` and
    ``align_lr`` drive RCSLS; ``alpha`` weights the merge.  Every random
    choice flows from ``seed``.
    """

    dim: int = 10
    epochs: int = 5
    learning_rate: float = 0.5
    ngram_order: int = 2
    min_count: int = 1
    pair_strategy: str = "top-norm"
    pair_count: int = 1000
    k: int = 10
    align_epochs: int = 10
    align_lr: float = 1.0
    alpha: float = 0.5
    seed: int = 0

    def train_config(self) -> TrainConfig:
        return TrainConfig(
            dim=self.dim,
            epochs=self.epochs,
            learning_rate=self.learning_rate,
            ngram_order=self.ngram_order,
            min_count=self.min_count,
            seed=self.seed,
        )


def run_merge_experiment(
    shard0: LabeledDataset,
    shard1: LabeledDataset,
    test: LabeledDataset,
    config: ExperimentConfig | None = None,
) -> list[tuple[str, str, float]]:
    """Train, align, merge, and evaluate the six comparison variants.

    Variants: a model per shard, one on the union, a fine-tuned model (shard1
    warm-started from shard0's features), the two-shard vote ensemble, and
    the merged model (shard0's model aligned with RCSLS onto the fine-tuned
    model, then averaged at alpha).  Returns (variant, split, accuracy) rows.
    """
    if config is None:
        config = ExperimentConfig()
    tc = config.train_config()

    logger.info("training shard models (%d + %d documents)", len(shard0), len(shard1))
    model0 = train(shard0, tc)
    model1 = train(shard1, tc)
    union = LabeledDataset.from_documents(shard0.documents + shard1.documents)
    model_union = train(union, tc)
    model_fine = train(shard1, tc, init_from=model0)

    pairs = select_training_pairs(
        model0.word_features(),
        model_fine.word_features(),
        config.pair_strategy,
        config.pair_count,
    )
    k = config.k
    if k > pairs.m:
        logger.info("clamping k from %d to the pair count %d", k, pairs.m)
        k = pairs.m
    qmap = rcsls_align(
        pairs,
        RcslsConfig(
            k=k,
            epochs=config.align_epochs,
            learning_rate=config.align_lr,
            seed=config.seed,
        ),
    )
    merged = merge_classifiers(model0, model_fine, qmap, config.alpha)

    rows = [
        ("train-s0", "test", eval_accuracy(model0, test)),
        ("train-s1", "test", eval_accuracy(model1, test)),
        ("train-union", "test", eval_accuracy(model_union, test)),
        ("fine-tune", "test", eval_accuracy(model_fine, test)),
        ("vote", "test", vote_accuracy(model0, model1, test)),
        ("rcsls-fine", "test", eval_accuracy(merged, test)),
    ]
    for variant, split, accuracy in rows:
        logger.info("%s %s accuracy %.4f", variant, split, accuracy)
    return rows


def render_report(rows) -> str:
    """Format (variant, split, accuracy) rows as a tab-separated table."""
    lines = ["\t".join(REPORT_HEADER)]
    for variant, split, accuracy in rows:
        lines.append(f"{variant}\t{split}\t{accuracy:.4f}")
    return "\n".join(lines) + "\n"


def analogy_report_rows(
    report: AnalogyReport, variant: str, per_category: bool = False
) -> list[tuple[str, str, float]]:
    """Report rows for an analogy evaluation, optionally per category."""
    rows = []
    if per_category:
        rows += [
            (variant, name, correct / total if total else 0.0)
            for name, correct, total in report.categories
        ]
    rows.append((variant, "overall", report.accuracy))
    return rows
