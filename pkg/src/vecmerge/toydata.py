"""Synthetic review corpus for the shard-merge experiments.

Two sentiment classes over a small vocabulary.  Each shard sees the shared
core sentiment words plus its own "dialect" of shard-specific sentiment
words, so neither shard alone covers the test set's discriminative
vocabulary; the test set mixes both dialects.  A small fraction of training
labels is flipped as noise.  Everything is generated from one seed, and the
default settings reproduce the data files bundled with the package.

Run ``python -m vecmerge.toydata --out-dir DIR`` to materialize the bundled
files for command-line use.
"""

from __future__ import annotations

import argparse
import sys
from importlib import resources
from pathlib import Path

import numpy as np

from .model_io import LabeledDataset, load_labeled, save_labeled

FILLER = (
    "the a and i we they it was were is to of for with at on this that "
    "there really very just so quite food place time staff table order "
    "menu night evening visit"
).split()

CORE = {
    "pos": "great good excellent tasty friendly perfect".split(),
    "neg": "bad awful terrible bland rude slow".split(),
}

DIALECT = {
    "pos": (
        "superb delightful charming wonderful lovely".split(),
        "amazing fantastic outstanding stellar incredible".split(),
    ),
    "neg": (
        "dreadful dismal shabby grim soggy".split(),
        "horrible disgusting atrocious filthy stale".split(),
    ),
}

LABELS = ("pos", "neg")

BUNDLED = {
    "shard0": "toy_shard0.txt",
    "shard1": "toy_shard1.txt",
    "test": "toy_test.txt",
}


def _pick(rng, pool, count):
    return [pool[i] for i in rng.integers(0, len(pool), size=count)]


def _make_document(rng, label, dialect, dialect_only_fraction):
    n_filler = int(rng.integers(4, 9))
    n_sentiment = int(rng.integers(2, 4))
    if rng.random() < dialect_only_fraction:
        pool = DIALECT[label][dialect]
    else:
        pool = CORE[label] + DIALECT[label][dialect]
    tokens = _pick(rng, FILLER, n_filler) + _pick(rng, pool, n_sentiment)
    order = rng.permutation(len(tokens))
    return [tokens[i] for i in order]


def _make_split(rng, size, dialects, noise, dialect_only_fraction):
    documents = []
    for _ in range(size):
        label = LABELS[int(rng.integers(0, 2))]
        dialect = dialects[int(rng.integers(0, len(dialects)))]
        tokens = _make_document(rng, label, dialect, dialect_only_fraction)
        if rng.random() < noise:
            label = LABELS[1 - LABELS.index(label)]
        documents.append((label, tokens))
    return LabeledDataset.from_documents(documents)


def make_shards(
    n_train: int = 300,
    n_test: int = 600,
    noise: float = 0.04,
    dialect_only_fraction: float = 0.35,
    seed: int = 7,
):
    """Generate (shard0, shard1, test) datasets from one seed.

    Shard documents draw sentiment words from the shared core plus their own
    dialect; test documents pick either dialect at random.
    """
    rng = np.random.default_rng(seed)
    shard0 = _make_split(rng, n_train, (0,), noise, dialect_only_fraction)
    shard1 = _make_split(rng, n_train, (1,), noise, dialect_only_fraction)
    test = _make_split(rng, n_test, (0, 1), 0.0, dialect_only_fraction)
    return shard0, shard1, test


def load_bundled():
    """Read the bundled (shard0, shard1, test) data files."""
    base = resources.files("vecmerge") / "data"
    return tuple(
        load_labeled(str(base / filename))
        for filename in (BUNDLED["shard0"], BUNDLED["shard1"], BUNDLED["test"])
    )


def write_files(out_dir, shards=None) -> list[str]:
    """Write the three data files into ``out_dir``; returns their paths."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    if shards is None:
        shards = make_shards()
    paths = []
    for dataset, filename in zip(shards, BUNDLED.values()):
        path = out_dir / filename
        save_labeled(dataset, path)
        paths.append(str(path))
    return paths


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="python -m vecmerge.toydata",
        description="Write the bundled toy review corpus to a directory.",
    )
    parser.add_argument("--out-dir", required=True, help="target directory")
    args = parser.parse_args(argv)
    for path in write_files(args.out_dir):
        print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
