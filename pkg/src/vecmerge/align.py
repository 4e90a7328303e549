"""Linear maps between paired vector sets.

Three estimators produce a d x d map ``Q`` sending rows of a source model into
the space of a target model: unconstrained least squares, the orthogonal
Procrustes solution, and relaxed CSLS (RCSLS) refined by projected subgradient
descent over the orthogonal group.
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import DataError, NumericError, ParseError

logger = logging.getLogger(__name__)

LEAST_SQUARES = "least-squares"
PROCRUSTES = "procrustes"
RCSLS = "rcsls"
METHODS = (LEAST_SQUARES, PROCRUSTES, RCSLS)

# Orthogonal maps must satisfy max|Q^T Q - I| at or below this bound.
ORTHOGONALITY_TOL = 1e-6


def normalize_rows(matrix: np.ndarray) -> np.ndarray:
    """Scale every row to unit length; zero rows stay zero."""
    matrix = np.asarray(matrix, dtype=np.float64)
    norms = np.linalg.norm(matrix, axis=1, keepdims=True)
    return matrix / np.where(norms == 0.0, 1.0, norms)


@dataclass(eq=False)
class PairedVectors:
    """Row-aligned source and target vectors for a shared token list."""

    source: np.ndarray
    target: np.ndarray
    tokens: list[str]

    def __post_init__(self):
        self.source = np.asarray(self.source, dtype=np.float64)
        self.target = np.asarray(self.target, dtype=np.float64)
        self.tokens = list(self.tokens)
        if self.source.ndim != 2 or self.target.ndim != 2:
            raise DataError("paired vectors must be 2-dimensional arrays")
        if self.source.shape != self.target.shape:
            raise DataError(
                f"source shape {self.source.shape} != target shape {self.target.shape}"
            )
        if self.source.shape[0] != len(self.tokens):
            raise DataError("token list length must match the number of rows")
        if self.source.shape[0] < 1:
            raise DataError("need at least one pair")
        if not (np.isfinite(self.source).all() and np.isfinite(self.target).all()):
            raise DataError("paired vectors contain non-finite values")
        if self.m < self.dim:
            warnings.warn(
                f"only {self.m} pairs for dimension {self.dim}; the map is underdetermined",
                stacklevel=2,
            )

    @property
    def m(self) -> int:
        return self.source.shape[0]

    @property
    def dim(self) -> int:
        return self.source.shape[1]

    def normalized(self) -> "PairedVectors":
        """Both sides with unit-length rows."""
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            return PairedVectors(
                normalize_rows(self.source), normalize_rows(self.target), self.tokens
            )


@dataclass(eq=False)
class OrthogonalMap:
    """A fitted d x d map plus the method tag that produced it.

    Maps tagged ``procrustes`` or ``rcsls`` are checked for numerical
    orthogonality on construction; ``least-squares`` maps are exempt.
    """

    matrix: np.ndarray
    method: str
    final_loss: float | None = None
    non_unique: bool = False

    def __post_init__(self):
        self.matrix = np.asarray(self.matrix, dtype=np.float64)
        if self.method not in METHODS:
            raise DataError(f"unknown method tag {self.method!r}")
        if self.matrix.ndim != 2 or self.matrix.shape[0] != self.matrix.shape[1]:
            raise DataError("map matrix must be square")
        if not np.isfinite(self.matrix).all():
            raise DataError("map matrix contains non-finite values")
        if self.method != LEAST_SQUARES:
            err = self.orthogonality_error()
            if err > ORTHOGONALITY_TOL:
                raise DataError(
                    f"{self.method} map fails orthogonality: max|Q^T Q - I| = {err:.3e}"
                )

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def orthogonality_error(self) -> float:
        gram = self.matrix.T @ self.matrix
        return float(np.abs(gram - np.eye(self.dim)).max())


def least_squares_align(pairs: PairedVectors, normalize: bool = False) -> OrthogonalMap:
    """Solve min_Q ||XQ - Y||_F^2 through the normal equations.

    Raises :class:`NumericError` when the source rows are rank deficient,
    since the normal equations are then singular; Procrustes handles that
    case.
    """
    if normalize:
        pairs = pairs.normalized()
    src, tgt = pairs.source, pairs.target
    if np.linalg.matrix_rank(src) < pairs.dim:
        raise NumericError(
            "source vectors are rank deficient; the least-squares map is not "
            "unique (the Procrustes method handles this case)"
        )
    gram = src.T @ src
    matrix = np.linalg.solve(gram, src.T @ tgt)
    return OrthogonalMap(matrix, LEAST_SQUARES)


def procrustes_align(pairs: PairedVectors, normalize: bool = False) -> OrthogonalMap:
    """Solve min_Q ||XQ - Y||_F^2 over orthogonal Q.

    With X^T Y = U S W^T the minimizer is Q = U W^T.  The solution is flagged
    ``non_unique`` when S has zero or repeated singular values, where distinct
    orthogonal minimizers exist.
    """
    if normalize:
        pairs = pairs.normalized()
    cross = pairs.source.T @ pairs.target
    u, s, wt = np.linalg.svd(cross)
    tol = 1e-9 * max(1.0, float(s[0]) if s.size else 1.0)
    non_unique = bool(s.size and (s[-1] <= tol or (s.size > 1 and np.any(np.diff(s) > -tol))))
    return OrthogonalMap(u @ wt, PROCRUSTES, non_unique=non_unique)


def project_orthogonal(matrix: np.ndarray) -> np.ndarray:
    """Closest orthogonal matrix in Frobenius norm: U W^T from the SVD."""
    matrix = np.asarray(matrix, dtype=np.float64)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise DataError("only square matrices can be projected")
    if not np.isfinite(matrix).all():
        raise DataError("matrix contains non-finite values")
    u, _, wt = np.linalg.svd(matrix)
    return u @ wt


def _topk_indices(scores: np.ndarray, k: int) -> np.ndarray:
    # Stable sort on negated scores: ties resolve to the lower pool index.
    order = np.argsort(-scores, axis=1, kind="stable")
    return order[:, :k]


def knn_neighborhood(queries: np.ndarray, pool: np.ndarray, k: int) -> np.ndarray:
    """Indices of the k pool rows with the largest inner product per query.

    Ties break toward the lower index.  Requires ``1 <= k <= len(pool)``.
    """
    queries = np.asarray(queries, dtype=np.float64)
    pool = np.asarray(pool, dtype=np.float64)
    if k < 1:
        raise DataError(f"k must be at least 1, got {k}")
    if k > pool.shape[0]:
        raise DataError(f"k={k} exceeds pool size {pool.shape[0]}")
    return _topk_indices(queries @ pool.T, k)


def mean_knn_similarity(queries: np.ndarray, pool: np.ndarray, k: int) -> np.ndarray:
    """Mean inner product between each query and its k nearest pool rows."""
    queries = np.asarray(queries, dtype=np.float64)
    pool = np.asarray(pool, dtype=np.float64)
    if k < 1:
        raise DataError(f"k must be at least 1, got {k}")
    if k > pool.shape[0]:
        raise DataError(f"k={k} exceeds pool size {pool.shape[0]}")
    scores = queries @ pool.T
    idx = _topk_indices(scores, k)
    return np.take_along_axis(scores, idx, axis=1).mean(axis=1)


def csls_score(x: np.ndarray, y: np.ndarray, mean_x: float, mean_y: float) -> float:
    """CSLS similarity: twice the inner product minus both hubness penalties.

    ``mean_x`` is the mean similarity of ``x`` to its k nearest targets and
    ``mean_y`` the mean similarity of ``y`` to its k nearest sources.
    """
    return 2.0 * float(np.dot(x, y)) - float(mean_x) - float(mean_y)


def rcsls_loss(matrix: np.ndarray, pairs: PairedVectors, k: int) -> float:
    """RCSLS objective for a candidate map, averaged over pairs.

    Each pair i contributes ``-2 (Q^T x_i) . y_i`` plus the mean similarity of
    the mapped source to its k nearest targets and of the target to its k
    nearest mapped sources.  Neighborhoods are taken over the full pools and
    never exclude the paired row itself.
    """
    matrix = np.asarray(matrix, dtype=np.float64)
    if k < 1:
        raise DataError(f"k must be at least 1, got {k}")
    if k > pairs.m:
        raise DataError(f"k={k} exceeds the number of pairs {pairs.m}")
    mapped = pairs.source @ matrix
    sims = mapped @ pairs.target.T
    idx_t = _topk_indices(sims, k)
    idx_s = _topk_indices(sims.T, k)
    paired = -2.0 * np.sum(mapped * pairs.target, axis=1)
    near_t = np.take_along_axis(sims, idx_t, axis=1).sum(axis=1) / k
    near_s = np.take_along_axis(sims.T, idx_s, axis=1).sum(axis=1) / k
    return float(np.mean(paired + near_t + near_s))


def rcsls_gradient(
    matrix: np.ndarray, pairs: PairedVectors, k: int, batch: np.ndarray | None = None
) -> np.ndarray:
    """Subgradient of the RCSLS objective with respect to the map.

    Neighborhoods are held fixed at the current map, which makes the loss
    piecewise linear in Q; each inner product ``x . Q y``-style term
    contributes an outer product ``x y^T``.  With ``batch`` the average runs
    over those pair indices only, with neighborhoods still drawn from the
    full pools.
    """
    matrix = np.asarray(matrix, dtype=np.float64)
    if k < 1:
        raise DataError(f"k must be at least 1, got {k}")
    if k > pairs.m:
        raise DataError(f"k={k} exceeds the number of pairs {pairs.m}")
    src, tgt = pairs.source, pairs.target
    if batch is None:
        batch = np.arange(pairs.m)
    else:
        batch = np.asarray(batch, dtype=np.intp)
        if batch.size < 1:
            raise DataError("batch must contain at least one pair index")
    mapped = src @ matrix
    src_b, tgt_b = src[batch], tgt[batch]
    idx_t = _topk_indices(mapped[batch] @ tgt.T, k)
    idx_s = _topk_indices(tgt_b @ mapped.T, k)
    near_t_sum = tgt[idx_t].sum(axis=1)
    near_s_sum = src[idx_s].sum(axis=1)
    grad = (
        -2.0 * src_b.T @ tgt_b
        + (src_b.T @ near_t_sum) / k
        + (near_s_sum.T @ tgt_b) / k
    )
    return grad / batch.size


@dataclass
class RcslsConfig:
    """Settings for :func:`rcsls_align`.

    ``batch_size`` is either ``"full"`` or a positive pair count per step;
    ``init`` selects the starting map, ``"procrustes"`` or ``"identity"``.
    """

    k: int = 10
    epochs: int = 10
    learning_rate: float = 1.0
    batch_size: int | str = "full"
    init: str = "procrustes"
    seed: int = 0

    def __post_init__(self):
        if self.k < 1:
            raise DataError(f"k must be at least 1, got {self.k}")
        if self.epochs < 0:
            raise DataError(f"epochs must be non-negative, got {self.epochs}")
        if not self.learning_rate > 0:
            raise DataError(f"learning rate must be positive, got {self.learning_rate}")
        if self.batch_size != "full" and (
            not isinstance(self.batch_size, int) or self.batch_size < 1
        ):
            raise DataError(f"batch size must be 'full' or a positive integer")
        if self.init not in ("procrustes", "identity"):
            raise DataError(f"unknown init {self.init!r}")


def rcsls_align(pairs: PairedVectors, config: RcslsConfig | None = None) -> OrthogonalMap:
    """Minimize the RCSLS objective over orthogonal maps.

    Projected subgradient descent from the configured init: each step moves
    against the subgradient and projects back onto the orthogonal group.  The
    learning rate halves after any epoch that fails to improve the full
    objective, and the best iterate seen is returned, so the final loss never
    exceeds the starting loss.  Inputs are row-normalized first.
    """
    if config is None:
        config = RcslsConfig()
    pairs = pairs.normalized()
    if config.k > pairs.m:
        raise DataError(f"k={config.k} exceeds the number of pairs {pairs.m}")
    if config.init == "procrustes":
        current = procrustes_align(pairs).matrix
    else:
        current = np.eye(pairs.dim)
    best = current
    best_loss = rcsls_loss(current, pairs, config.k)
    logger.info("rcsls init: loss %.6f", best_loss)
    rng = np.random.default_rng(config.seed)
    size = pairs.m if config.batch_size == "full" else min(config.batch_size, pairs.m)
    lr = config.learning_rate
    for epoch in range(config.epochs):
        perm = rng.permutation(pairs.m)
        for start in range(0, pairs.m, size):
            batch = perm[start:start + size]
            grad = rcsls_gradient(current, pairs, config.k, batch)
            current = project_orthogonal(current - lr * grad)
        loss = rcsls_loss(current, pairs, config.k)
        if loss < best_loss:
            best, best_loss = current, loss
        else:
            lr /= 2.0
        logger.info("rcsls epoch %d: loss %.6f (lr %g)", epoch + 1, loss, lr)
    return OrthogonalMap(best, RCSLS, final_loss=best_loss)


def save_map(qmap: OrthogonalMap, path) -> None:
    """Write a map file: header ``<d> <method>`` then d rows of d values."""
    with open(path, "w", encoding="utf-8") as handle:
        handle.write(f"{qmap.dim} {qmap.method}\n")
        for row in qmap.matrix:
            handle.write(" ".join(repr(float(v)) for v in row) + "\n")


def load_map(path) -> OrthogonalMap:
    """Read a map file written by :func:`save_map`."""
    with open(path, encoding="utf-8") as handle:
        lines = handle.read().splitlines()
    if not lines or not lines[0].strip():
        raise ParseError(path, 1, "missing header line")
    header = lines[0].split()
    if len(header) != 2:
        raise ParseError(path, 1, "header must be '<d> <method>'")
    try:
        dim = int(header[0])
    except ValueError:
        raise ParseError(path, 1, f"bad dimension {header[0]!r}") from None
    if dim < 1:
        raise ParseError(path, 1, f"dimension must be positive, got {dim}")
    method = header[1]
    if method not in METHODS:
        raise ParseError(path, 1, f"unknown method tag {method!r}")
    body = lines[1:]
    if len(body) != dim:
        raise ParseError(path, len(lines) + 1 if len(body) < dim else dim + 2,
                         f"expected {dim} rows, found {len(body)}")
    rows = []
    for offset, line in enumerate(body):
        lineno = offset + 2
        parts = line.split()
        if len(parts) != dim:
            raise ParseError(path, lineno, f"expected {dim} values, found {len(parts)}")
        try:
            row = [float(p) for p in parts]
        except ValueError:
            raise ParseError(path, lineno, "row contains a non-numeric value") from None
        if not all(math.isfinite(v) for v in row):
            raise ParseError(path, lineno, "non-finite value")
        rows.append(row)
    try:
        return OrthogonalMap(np.array(rows), method)
    except DataError as exc:
        raise ParseError(path, 1, str(exc)) from None
