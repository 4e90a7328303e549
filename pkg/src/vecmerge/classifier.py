"""A minimal fastText-style linear text classifier.

Documents are embedded as the mean of their word and n-gram feature vectors
and scored by a softmax output layer.  N-grams are stored under explicit
string keys (tokens joined by ``_``) rather than hashed buckets, so two
models' feature tables can be matched key by key when merging.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from .errors import DataError, ParseError
from .model_io import EmbeddingModel, LabeledDataset

logger = logging.getLogger(__name__)

MAGIC = "VMLC"
FORMAT_VERSION = "1"


@dataclass(eq=False)
class LinearTextClassifier:
    """Feature embeddings plus a K x d softmax output layer."""

    features: EmbeddingModel
    outputs: np.ndarray
    labels: list[str]
    ngram_order: int = 1

    def __post_init__(self):
        self.outputs = np.asarray(self.outputs, dtype=np.float64)
        self.labels = list(self.labels)
        if self.ngram_order not in (1, 2):
            raise DataError(f"ngram_order must be 1 or 2, got {self.ngram_order}")
        if len(self.labels) < 2:
            raise DataError("a classifier needs at least 2 labels")
        if len(set(self.labels)) != len(self.labels):
            raise DataError("label list contains duplicates")
        if self.outputs.ndim != 2 or self.outputs.shape != (
            len(self.labels),
            self.features.dim,
        ):
            raise DataError(
                f"outputs must be {len(self.labels)}x{self.features.dim}, "
                f"got {self.outputs.shape}"
            )
        if not np.isfinite(self.outputs).all():
            raise DataError("output matrix contains non-finite values")

    @property
    def dim(self) -> int:
        return self.features.dim

    @property
    def n_labels(self) -> int:
        return len(self.labels)

    def word_features(self) -> EmbeddingModel:
        """The feature table restricted to word keys.

        Keys containing ``_`` are treated as n-gram keys and dropped; this is
        the convention used when selecting alignment training pairs.
        """
        keep = [i for i, key in enumerate(self.features.vocab) if "_" not in key]
        vocab = [self.features.vocab[i] for i in keep]
        return EmbeddingModel(vocab, self.features.matrix[keep])


@dataclass
class TrainConfig:
    """Settings for :func:`train`."""

    dim: int = 10
    epochs: int = 5
    learning_rate: float = 0.5
    ngram_order: int = 1
    min_count: int = 1
    seed: int = 0

    def __post_init__(self):
        if self.dim < 1:
            raise DataError(f"dim must be at least 1, got {self.dim}")
        if self.epochs < 1:
            raise DataError(f"epochs must be at least 1, got {self.epochs}")
        if self.learning_rate < 0:
            raise DataError(f"learning rate must be non-negative, got {self.learning_rate}")
        if self.ngram_order not in (1, 2):
            raise DataError(f"ngram_order must be 1 or 2, got {self.ngram_order}")
        if self.min_count < 1:
            raise DataError(f"min_count must be at least 1, got {self.min_count}")


def doc_feature_keys(tokens, ngram_order: int) -> list[str]:
    """Unigram keys plus, at order 2, consecutive-bigram keys ``a_b``."""
    keys = list(tokens)
    if ngram_order == 2:
        keys += [a + "_" + b for a, b in zip(tokens, tokens[1:])]
    return keys


def featurize(doc, model: LinearTextClassifier) -> np.ndarray:
    """Mean of the feature vectors of the document's known keys.

    Unknown keys are skipped silently; a document with no known keys maps to
    the zero vector.  Repeated keys count once per occurrence.
    """
    if not doc:
        raise DataError("cannot featurize an empty document")
    table = model.features
    rows = [table.index_of(k) for k in doc_feature_keys(doc, model.ngram_order) if k in table]
    if not rows:
        return np.zeros(model.dim)
    return table.matrix[rows].mean(axis=0)


def unknown_key_count(doc, model: LinearTextClassifier) -> int:
    """How many of the document's feature keys are missing from the table."""
    return sum(
        1 for k in doc_feature_keys(doc, model.ngram_order) if k not in model.features
    )


def _softmax(scores: np.ndarray) -> np.ndarray:
    shifted = np.exp(scores - scores.max())
    return shifted / shifted.sum()


def predict_proba(doc, model: LinearTextClassifier) -> np.ndarray:
    """Softmax label probabilities for one document."""
    return _softmax(model.outputs @ featurize(doc, model))


def predict_label(doc, model: LinearTextClassifier) -> str:
    """Most probable label; ties break toward the earlier label."""
    return model.labels[int(np.argmax(predict_proba(doc, model)))]


def negative_log_likelihood(model: LinearTextClassifier, data: LabeledDataset) -> float:
    """Mean negative log probability of the gold labels."""
    if not data.documents:
        raise DataError("dataset is empty")
    index = {label: i for i, label in enumerate(model.labels)}
    total = 0.0
    for label, tokens in data.documents:
        if label not in index:
            raise DataError(f"unknown label {label!r}")
        proba = predict_proba(tokens, model)
        total -= math.log(max(proba[index[label]], 1e-300))
    return total / len(data.documents)


def train(
    data: LabeledDataset,
    config: TrainConfig | None = None,
    init_from: LinearTextClassifier | None = None,
) -> LinearTextClassifier:
    """Train by SGD on the softmax negative log likelihood.

    Feature vectors start uniform in [-1/d, 1/d] from the seed and the output
    layer starts at zero; with ``init_from``, vectors of keys present in that
    model replace their random init (the warm start used by the fine-tune
    baseline; its output layer is still zero).  The learning rate decays
    linearly to zero over all steps.  Single-threaded, deterministic for a
    fixed seed.
    """
    if config is None:
        config = TrainConfig()
    if len(data.labels) < 2:
        raise DataError("training needs at least 2 distinct labels")
    if init_from is not None and init_from.dim != config.dim:
        raise DataError(
            f"init model dimension {init_from.dim} != configured dim {config.dim}"
        )

    counts: dict[str, int] = {}
    order: list[str] = []
    for _, tokens in data.documents:
        for key in doc_feature_keys(tokens, config.ngram_order):
            if key not in counts:
                counts[key] = 0
                order.append(key)
            counts[key] += 1
    keys = [k for k in order if counts[k] >= config.min_count]
    key_index = {k: i for i, k in enumerate(keys)}

    rng = np.random.default_rng(config.seed)
    dim = config.dim
    feats = rng.uniform(-1.0 / dim, 1.0 / dim, size=(len(keys), dim))
    if init_from is not None:
        for i, key in enumerate(keys):
            if key in init_from.features:
                feats[i] = init_from.features.row(key)
    outputs = np.zeros((len(data.labels), dim))

    label_index = {label: i for i, label in enumerate(data.labels)}
    docs = []
    for label, tokens in data.documents:
        rows = [
            key_index[k]
            for k in doc_feature_keys(tokens, config.ngram_order)
            if k in key_index
        ]
        docs.append((label_index[label], np.array(rows, dtype=np.intp)))

    total_steps = config.epochs * len(docs)
    step = 0
    for _ in range(config.epochs):
        for doc_id in rng.permutation(len(docs)):
            lr = config.learning_rate * (1.0 - step / total_steps)
            step += 1
            target, rows = docs[doc_id]
            if rows.size == 0:
                continue
            hidden = feats[rows].mean(axis=0)
            grad_scores = _softmax(outputs @ hidden)
            grad_scores[target] -= 1.0
            grad_hidden = outputs.T @ grad_scores
            outputs -= lr * np.outer(grad_scores, hidden)
            # subtract.at applies repeated rows once per occurrence, matching
            # the gradient of a mean taken over occurrences
            np.subtract.at(feats, rows, lr * grad_hidden / rows.size)
    return LinearTextClassifier(
        EmbeddingModel(keys, feats), outputs, list(data.labels), config.ngram_order
    )


def vote_ensemble(doc, a: LinearTextClassifier, b: LinearTextClassifier) -> str:
    """Two-model vote: agreement wins, else the more confident model.

    An exact confidence tie goes to model ``a``.
    """
    if set(a.labels) != set(b.labels):
        raise DataError(
            f"label sets differ: {sorted(a.labels)} vs {sorted(b.labels)}"
        )
    proba_a = predict_proba(doc, a)
    proba_b = predict_proba(doc, b)
    label_a = a.labels[int(np.argmax(proba_a))]
    label_b = b.labels[int(np.argmax(proba_b))]
    if label_a == label_b:
        return label_a
    return label_a if proba_a.max() >= proba_b.max() else label_b


def save_classifier(model: LinearTextClassifier, path) -> None:
    """Write a classifier model file that reads back identically."""
    with open(path, "w", encoding="utf-8") as handle:
        handle.write(
            f"{MAGIC} {FORMAT_VERSION} {model.dim} {model.n_labels} "
            f"{len(model.features)} {model.ngram_order}\n"
        )
        handle.write("\t".join(model.labels) + "\n")
        for label, row in zip(model.labels, model.outputs):
            handle.write(label + " " + " ".join(repr(float(v)) for v in row) + "\n")
        for key, row in zip(model.features.vocab, model.features.matrix):
            handle.write(key + " " + " ".join(repr(float(v)) for v in row) + "\n")


def _parse_vector_row(path, lineno, line, dim, kind):
    parts = line.split()
    if len(parts) != dim + 1:
        raise ParseError(
            path, lineno, f"expected a {kind} and {dim} values, found {len(parts)} fields"
        )
    values = []
    for text in parts[1:]:
        try:
            value = float(text)
        except ValueError:
            raise ParseError(path, lineno, f"not a number: {text!r}") from None
        if not math.isfinite(value):
            raise ParseError(path, lineno, "non-finite value")
        values.append(value)
    return parts[0], values


def load_classifier(path) -> LinearTextClassifier:
    """Read a classifier model file written by :func:`save_classifier`."""
    with open(path, encoding="utf-8") as handle:
        lines = handle.read().splitlines()
    if not lines or not lines[0].strip():
        raise ParseError(path, 1, "missing header line")
    header = lines[0].split()
    if len(header) != 6 or header[0] != MAGIC:
        raise ParseError(path, 1, f"header must be '{MAGIC} {FORMAT_VERSION} <d> <K> <F> <order>'")
    if header[1] != FORMAT_VERSION:
        raise ParseError(path, 1, f"unsupported format version {header[1]!r}")
    try:
        dim, n_labels, n_features, order = (int(v) for v in header[2:])
    except ValueError:
        raise ParseError(path, 1, "header counts must be integers") from None
    if dim < 1 or n_labels < 2 or n_features < 0 or order not in (1, 2):
        raise ParseError(path, 1, f"invalid header counts {header[2:]}")
    expected = 2 + n_labels + n_features
    if len(lines) != expected:
        raise ParseError(
            path, min(len(lines), expected) + 1,
            f"expected {expected} lines, found {len(lines)}",
        )
    labels = lines[1].split("\t")
    if len(labels) != n_labels:
        raise ParseError(path, 2, f"expected {n_labels} labels, found {len(labels)}")
    outputs = []
    for i in range(n_labels):
        lineno = 3 + i
        name, values = _parse_vector_row(path, lineno, lines[lineno - 1], dim, "label")
        if name != labels[i]:
            raise ParseError(
                path, lineno, f"output row {name!r} does not match label {labels[i]!r}"
            )
        outputs.append(values)
    vocab = []
    rows = []
    for i in range(n_features):
        lineno = 3 + n_labels + i
        key, values = _parse_vector_row(path, lineno, lines[lineno - 1], dim, "key")
        vocab.append(key)
        rows.append(values)
    try:
        features = EmbeddingModel(
            vocab, np.array(rows) if rows else np.zeros((0, dim))
        )
        return LinearTextClassifier(features, np.array(outputs), labels, order)
    except DataError as exc:
        raise ParseError(path, 1, str(exc)) from None
