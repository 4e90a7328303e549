"""Text formats for embedding models, labeled corpora, and analogy question sets.

Embedding files follow the common word-vector text layout: a header line
``<n> <d>`` followed by ``n`` rows of ``<token> <v1> ... <vd>``.  Labeled
corpora use one document per line with a ``__label__<name>`` prefix.  Analogy
sets group 4-token questions under ``: <category>`` headers.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DataError, ParseError

logger = logging.getLogger(__name__)

LABEL_PREFIX = "__label__"


@dataclass(eq=False)
class EmbeddingModel:
    """A vocabulary and one d-dimensional row vector per token.

    Tokens are unique and keep their given order; the matrix row at index i
    belongs to ``vocab[i]``.
    """

    vocab: list[str]
    matrix: np.ndarray
    _index: dict[str, int] = field(init=False, repr=False)

    def __post_init__(self):
        self.vocab = list(self.vocab)
        self.matrix = np.asarray(self.matrix, dtype=np.float64)
        if self.matrix.ndim != 2:
            raise DataError("embedding matrix must be 2-dimensional")
        if self.matrix.shape[1] < 1:
            raise DataError("embedding dimension must be at least 1")
        if len(self.vocab) != self.matrix.shape[0]:
            raise DataError(
                f"vocabulary has {len(self.vocab)} tokens but matrix has "
                f"{self.matrix.shape[0]} rows"
            )
        self._index = {}
        for i, token in enumerate(self.vocab):
            if token in self._index:
                raise DataError(f"duplicate token {token!r}")
            self._index[token] = i
        if self.matrix.size and not np.isfinite(self.matrix).all():
            raise DataError("embedding matrix contains non-finite values")

    @property
    def dim(self) -> int:
        return self.matrix.shape[1]

    def __len__(self) -> int:
        return len(self.vocab)

    def __contains__(self, token) -> bool:
        return token in self._index

    def index_of(self, token: str) -> int:
        if token not in self._index:
            raise KeyError(token)
        return self._index[token]

    def row(self, token: str) -> np.ndarray:
        return self.matrix[self.index_of(token)]


@dataclass(eq=False)
class LabeledDataset:
    """Documents as token lists, each carrying one label.

    ``labels`` lists the distinct labels in first-appearance order.
    """

    documents: list[tuple[str, list[str]]]
    labels: list[str]

    def __post_init__(self):
        if len(set(self.labels)) != len(self.labels):
            raise DataError("label list contains duplicates")
        known = set(self.labels)
        for label, tokens in self.documents:
            if label not in known:
                raise DataError(f"document label {label!r} missing from label list")
            if not tokens:
                raise DataError("documents must contain at least one token")

    @classmethod
    def from_documents(cls, documents) -> "LabeledDataset":
        """Build a dataset, collecting labels in first-appearance order."""
        documents = [(label, list(tokens)) for label, tokens in documents]
        labels = []
        seen = set()
        for label, _ in documents:
            if label not in seen:
                seen.add(label)
                labels.append(label)
        return cls(documents, labels)

    def __len__(self) -> int:
        return len(self.documents)


@dataclass(eq=False)
class AnalogyDataset:
    """Analogy questions ``a : b :: c : d`` grouped into named categories."""

    categories: list[tuple[str, list[tuple[str, str, str, str]]]]

    def __post_init__(self):
        seen = set()
        for name, questions in self.categories:
            if name in seen:
                raise DataError(f"duplicate category {name!r}")
            seen.add(name)
            for question in questions:
                if len(question) != 4:
                    raise DataError("analogy questions must have exactly 4 tokens")

    @property
    def n_questions(self) -> int:
        return sum(len(questions) for _, questions in self.categories)

    def iter_questions(self):
        for name, questions in self.categories:
            for question in questions:
                yield name, question


def _read_lines(path):
    with open(path, encoding="utf-8") as handle:
        return handle.read().splitlines()


def load_embeddings(path, lowercase: bool = False) -> EmbeddingModel:
    """Read an embedding file.

    With ``lowercase=True`` tokens are lowercased on the way in; when two rows
    collide afterwards the first is kept and the number of dropped rows is
    reported through the module logger.
    """
    lines = _read_lines(path)
    if not lines or not lines[0].strip():
        raise ParseError(path, 1, "missing header line")
    header = lines[0].split()
    if len(header) != 2:
        raise ParseError(path, 1, "header must be '<n> <d>'")
    try:
        count, dim = int(header[0]), int(header[1])
    except ValueError:
        raise ParseError(path, 1, "header must hold two integers") from None
    if count < 0 or dim < 1:
        raise ParseError(path, 1, f"invalid header counts {count} {dim}")

    vocab: list[str] = []
    index: dict[str, int] = {}
    rows: list[list[float]] = []
    dropped = 0
    body = lines[1:]
    if len(body) != count:
        raise ParseError(
            path, len(lines) + 1 if len(body) < count else count + 2,
            f"expected {count} rows, found {len(body)}",
        )
    for offset, line in enumerate(body):
        lineno = offset + 2
        parts = line.split()
        if len(parts) != dim + 1:
            raise ParseError(
                path, lineno, f"expected a token and {dim} values, found {len(parts)} fields"
            )
        token = parts[0]
        if lowercase:
            token = token.lower()
        values = []
        for text in parts[1:]:
            try:
                value = float(text)
            except ValueError:
                raise ParseError(path, lineno, f"not a number: {text!r}") from None
            if not math.isfinite(value):
                raise ParseError(path, lineno, "non-finite value")
            values.append(value)
        if token in index:
            if lowercase:
                dropped += 1
                continue
            raise ParseError(path, lineno, f"duplicate token {token!r}")
        index[token] = len(vocab)
        vocab.append(token)
        rows.append(values)
    if dropped:
        logger.warning("%s: dropped %d duplicate rows after lowercasing", path, dropped)
    matrix = np.array(rows, dtype=np.float64) if rows else np.zeros((0, dim))
    return EmbeddingModel(vocab, matrix)


def save_embeddings(model: EmbeddingModel, path) -> None:
    """Write an embedding file that reads back to an identical model.

    Values are printed with ``repr``, the shortest decimal form that
    round-trips exactly for 64-bit floats.
    """
    with open(path, "w", encoding="utf-8") as handle:
        handle.write(f"{len(model)} {model.dim}\n")
        for token, row in zip(model.vocab, model.matrix):
            handle.write(token + " " + " ".join(repr(float(v)) for v in row) + "\n")


def load_labeled(path) -> LabeledDataset:
    """Read a labeled corpus: one ``__label__<name> token token ...`` per line."""
    documents = []
    for offset, line in enumerate(_read_lines(path)):
        lineno = offset + 1
        parts = line.split()
        if not parts or not parts[0].startswith(LABEL_PREFIX):
            raise ParseError(path, lineno, f"line must start with {LABEL_PREFIX}<name>")
        label = parts[0][len(LABEL_PREFIX):]
        if not label:
            raise ParseError(path, lineno, "empty label name")
        tokens = parts[1:]
        if not tokens:
            raise ParseError(path, lineno, "document has no tokens")
        documents.append((label, tokens))
    return LabeledDataset.from_documents(documents)


def save_labeled(dataset: LabeledDataset, path) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        for label, tokens in dataset.documents:
            handle.write(LABEL_PREFIX + label + " " + " ".join(tokens) + "\n")


def load_analogies(path, lowercase: bool = True) -> AnalogyDataset:
    """Read analogy questions grouped under ``: <category>`` header lines."""
    categories: list[tuple[str, list[tuple[str, str, str, str]]]] = []
    seen = set()
    current: list[tuple[str, str, str, str]] | None = None
    for offset, line in enumerate(_read_lines(path)):
        lineno = offset + 1
        stripped = line.strip()
        if not stripped:
            continue
        if stripped.startswith(":"):
            name = stripped[1:].strip()
            if not name:
                raise ParseError(path, lineno, "category header has no name")
            if name in seen:
                raise ParseError(path, lineno, f"duplicate category {name!r}")
            seen.add(name)
            current = []
            categories.append((name, current))
            continue
        parts = stripped.split()
        if len(parts) != 4:
            raise ParseError(path, lineno, f"expected 4 tokens, found {len(parts)}")
        if current is None:
            raise ParseError(path, lineno, "question appears before any category header")
        if lowercase:
            parts = [p.lower() for p in parts]
        current.append(tuple(parts))
    return AnalogyDataset(categories)


def save_analogies(dataset: AnalogyDataset, path) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        for name, questions in dataset.categories:
            handle.write(f": {name}\n")
            for question in questions:
                handle.write(" ".join(question) + "\n")
