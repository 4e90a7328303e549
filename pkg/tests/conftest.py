"""Shared fixtures and small builders for the test suite."""

import sys

import numpy as np
import pytest

from vecmerge.classifier import LinearTextClassifier
from vecmerge.model_io import EmbeddingModel, LabeledDataset


def pytest_terminal_summary(terminalreporter):
    """Echo one line per acceptance criterion at the end of the run."""
    module = sys.modules.get("test_acceptance")
    if module is None or not module.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(module.NAMES):
        name = module.NAMES[number]
        if number in module.RESULTS:
            verdict = "PASS" if module.RESULTS[number] else "FAIL"
        else:
            verdict = "NOT RUN"
        terminalreporter.write_line(f"C{number} {name}: {verdict}")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def make_model(tokens, matrix):
    return EmbeddingModel(list(tokens), np.asarray(matrix, dtype=np.float64))


def random_model(rng, tokens, dim, scale=1.0):
    return EmbeddingModel(
        list(tokens), scale * rng.standard_normal((len(tokens), dim))
    )


def random_classifier(rng, keys, labels, dim, ngram_order=1):
    features = EmbeddingModel(list(keys), rng.standard_normal((len(keys), dim)))
    outputs = rng.standard_normal((len(labels), dim))
    return LinearTextClassifier(features, outputs, list(labels), ngram_order)


def tiny_labeled(documents):
    return LabeledDataset.from_documents(documents)


def separable_dataset(rng, n_per_class=30):
    """Two classes with disjoint keyword vocabularies plus shared filler."""
    filler = ["the", "a", "of", "and", "to", "it"]
    pos_words = ["sunny", "bright", "warm", "golden"]
    neg_words = ["gloomy", "dark", "cold", "bitter"]
    documents = []
    for _ in range(n_per_class):
        for label, pool in (("pos", pos_words), ("neg", neg_words)):
            n_fill = int(rng.integers(2, 5))
            n_key = int(rng.integers(1, 3))
            tokens = [filler[i] for i in rng.integers(0, len(filler), n_fill)]
            tokens += [pool[i] for i in rng.integers(0, len(pool), n_key)]
            order = rng.permutation(len(tokens))
            documents.append((label, [tokens[i] for i in order]))
    return LabeledDataset.from_documents(documents)
