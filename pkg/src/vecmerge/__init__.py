"""Align word-vector models trained on different corpora and merge them.

The toolkit fits a linear map between two embedding spaces of the same
language (least squares, orthogonal Procrustes, or RCSLS refined by projected
subgradient descent), merges the models by weighted averaging over the
vocabulary union, and does the same for low-rank linear text classifiers.
Evaluation covers word analogies with out-of-vocabulary splitting,
classification accuracy, and a shard-merge comparison driver.
"""

from .align import (
    LEAST_SQUARES,
    PROCRUSTES,
    RCSLS,
    OrthogonalMap,
    PairedVectors,
    RcslsConfig,
    csls_score,
    knn_neighborhood,
    least_squares_align,
    load_map,
    mean_knn_similarity,
    normalize_rows,
    procrustes_align,
    project_orthogonal,
    rcsls_align,
    rcsls_gradient,
    rcsls_loss,
    save_map,
)
from .classifier import (
    LinearTextClassifier,
    TrainConfig,
    featurize,
    load_classifier,
    negative_log_likelihood,
    predict_label,
    predict_proba,
    save_classifier,
    train,
    vote_ensemble,
)
from .errors import DataError, NumericError, ParseError, VecmergeError
from .evaluate import (
    AnalogyReport,
    AnalogySplit,
    ExperimentConfig,
    eval_accuracy,
    eval_analogy,
    render_report,
    run_merge_experiment,
    sample_banned,
    split_analogy,
    vote_accuracy,
)
from .merge import merge_classifiers, merge_embeddings, select_training_pairs
from .model_io import (
    AnalogyDataset,
    EmbeddingModel,
    LabeledDataset,
    load_analogies,
    load_embeddings,
    load_labeled,
    save_analogies,
    save_embeddings,
    save_labeled,
)

__version__ = "0.1.0"

__all__ = [
    "AnalogyDataset",
    "AnalogyReport",
    "AnalogySplit",
    "DataError",
    "EmbeddingModel",
    "ExperimentConfig",
    "LEAST_SQUARES",
    "LabeledDataset",
    "LinearTextClassifier",
    "NumericError",
    "OrthogonalMap",
    "PROCRUSTES",
    "PairedVectors",
    "ParseError",
    "RCSLS",
    "RcslsConfig",
    "TrainConfig",
    "VecmergeError",
    "csls_score",
    "eval_accuracy",
    "eval_analogy",
    "featurize",
    "knn_neighborhood",
    "least_squares_align",
    "load_analogies",
    "load_classifier",
    "load_embeddings",
    "load_labeled",
    "load_map",
    "mean_knn_similarity",
    "merge_classifiers",
    "merge_embeddings",
    "negative_log_likelihood",
    "normalize_rows",
    "predict_label",
    "predict_proba",
    "procrustes_align",
    "project_orthogonal",
    "rcsls_align",
    "rcsls_gradient",
    "rcsls_loss",
    "render_report",
    "run_merge_experiment",
    "sample_banned",
    "save_analogies",
    "save_classifier",
    "save_embeddings",
    "save_labeled",
    "save_map",
    "select_training_pairs",
    "split_analogy",
    "train",
    "vote_accuracy",
    "vote_ensemble",
]
