"""Combine two aligned models into one.

Embeddings merge by a three-case rule over the vocabulary union: tokens only
in the old model keep their mapped vector, shared tokens get a weighted
average of mapped-old and new, tokens only in the new model keep the new
vector.  Low-rank linear classifiers merge the same way on their feature
tables, with output rows averaged per label.
"""

from __future__ import annotations

import logging
import warnings

import numpy as np

from .align import LEAST_SQUARES, ORTHOGONALITY_TOL, OrthogonalMap, PairedVectors
from .classifier import LinearTextClassifier
from .errors import DataError
from .model_io import EmbeddingModel

logger = logging.getLogger(__name__)


def _check_alpha(alpha: float) -> float:
    alpha = float(alpha)
    if not 0.0 <= alpha <= 1.0:
        raise DataError(f"alpha must lie in [0, 1], got {alpha}")
    return alpha


def _blend(mapped_old: np.ndarray, new: np.ndarray, alpha: float) -> np.ndarray:
    # Endpoints bypass the arithmetic so alpha=0/1 reproduce inputs bitwise.
    if alpha == 0.0:
        return mapped_old.copy()
    if alpha == 1.0:
        return new.copy()
    return (1.0 - alpha) * mapped_old + alpha * new


def merge_embeddings(
    old: EmbeddingModel,
    new: EmbeddingModel,
    qmap: OrthogonalMap,
    alpha: float = 0.5,
) -> EmbeddingModel:
    """Merge ``old`` (mapped by ``qmap``) into ``new``'s space.

    The output vocabulary is the union, new-model tokens first in their own
    order, then old-only tokens in old-model order.  Shared tokens blend as
    ``(1-alpha)*mapped_old + alpha*new``.  A non-orthogonal (least-squares)
    map is allowed with a warning: downstream classifier scores may change.
    """
    alpha = _check_alpha(alpha)
    if qmap.dim != old.dim or qmap.dim != new.dim:
        raise DataError(
            f"dimension mismatch: map {qmap.dim}, old {old.dim}, new {new.dim}"
        )
    if qmap.method == LEAST_SQUARES:
        warnings.warn(
            "merging with a least-squares map; it is not orthogonal, so "
            "classifier scores are not preserved",
            stacklevel=2,
        )
    mapped = old.matrix @ qmap.matrix

    shared_new: list[int] = []
    shared_old: list[int] = []
    for position, token in enumerate(new.vocab):
        if token in old:
            shared_new.append(position)
            shared_old.append(old.index_of(token))
    old_only = [i for i, token in enumerate(old.vocab) if token not in new]

    out = np.empty((len(new) + len(old_only), new.dim))
    out[: len(new)] = new.matrix
    if shared_new:
        out[np.array(shared_new)] = _blend(
            mapped[np.array(shared_old)], new.matrix[np.array(shared_new)], alpha
        )
    if old_only:
        out[len(new):] = mapped[np.array(old_only)]
    vocab = list(new.vocab) + [old.vocab[i] for i in old_only]
    return EmbeddingModel(vocab, out)


def merge_classifiers(
    old: LinearTextClassifier,
    new: LinearTextClassifier,
    qmap: OrthogonalMap,
    alpha: float = 0.5,
) -> LinearTextClassifier:
    """Merge two low-rank linear classifiers through an orthogonal map.

    Feature tables (word and n-gram keys alike) merge exactly like
    embeddings; output rows are matched by label string and blended with the
    same weights.  The map must be numerically orthogonal: score preservation
    fails otherwise, so a non-orthogonal map is a hard error.
    """
    alpha = _check_alpha(alpha)
    if old.dim != new.dim or qmap.dim != new.dim:
        raise DataError(
            f"dimension mismatch: map {qmap.dim}, old {old.dim}, new {new.dim}"
        )
    if set(old.labels) != set(new.labels):
        raise DataError(
            f"label sets differ: {sorted(old.labels)} vs {sorted(new.labels)}"
        )
    err = qmap.orthogonality_error()
    if err > ORTHOGONALITY_TOL:
        raise DataError(
            f"classifier merge needs an orthogonal map: max|Q^T Q - I| = {err:.3e}"
        )
    features = merge_embeddings(old.features, new.features, qmap, alpha)
    mapped_outputs = old.outputs @ qmap.matrix
    old_rows = np.array([old.labels.index(label) for label in new.labels])
    outputs = _blend(mapped_outputs[old_rows], new.outputs, alpha)
    return LinearTextClassifier(
        features,
        outputs,
        list(new.labels),
        max(old.ngram_order, new.ngram_order),
    )


def select_training_pairs(
    old: EmbeddingModel,
    new: EmbeddingModel,
    strategy: str = "all-common",
    n: int = 1000,
) -> PairedVectors:
    """Pick row-aligned training pairs from the shared vocabulary.

    ``all-common`` takes every shared token in new-model order.  ``top-norm``
    takes the min(n, shared) tokens whose NEW-model vectors have the largest
    norm, ties broken lexicographically.  For classifier feature tables, pass
    word keys only (see ``LinearTextClassifier.word_features``).
    """
    common = [token for token in new.vocab if token in old]
    if not common:
        raise DataError("the two models share no vocabulary")
    if strategy == "top-norm":
        if n < 1:
            raise DataError(f"top-norm budget must be at least 1, got {n}")
        norms = {
            token: float(np.linalg.norm(new.row(token))) for token in common
        }
        common = sorted(common, key=lambda t: (-norms[t], t))[: min(n, len(common))]
    elif strategy != "all-common":
        raise DataError(f"unknown pair strategy {strategy!r}")
    source = old.matrix[[old.index_of(t) for t in common]]
    target = new.matrix[[new.index_of(t) for t in common]]
    return PairedVectors(source, target, common)
