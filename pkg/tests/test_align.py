"""Tests for alignment estimators, neighborhoods, and the RCSLS optimizer."""

import numpy as np
import pytest

import oracles
from vecmerge.align import (
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
from vecmerge.errors import DataError, NumericError, ParseError


def make_pairs(source, target):
    source = np.asarray(source, dtype=np.float64)
    tokens = [f"w{i}" for i in range(source.shape[0])]
    return PairedVectors(source, np.asarray(target, dtype=np.float64), tokens)


def unit_rows(rng, m, d):
    return normalize_rows(rng.standard_normal((m, d)))


class TestPairedVectors:
    def test_shape_mismatch(self):
        with pytest.raises(DataError):
            PairedVectors(np.ones((3, 2)), np.ones((3, 3)), ["a", "b", "c"])

    def test_token_count_mismatch(self):
        with pytest.raises(DataError):
            PairedVectors(np.ones((3, 2)), np.ones((3, 2)), ["a", "b"])

    def test_underdetermined_warns(self):
        with pytest.warns(UserWarning, match="underdetermined"):
            PairedVectors(np.ones((2, 5)), np.ones((2, 5)), ["a", "b"])

    def test_normalized(self, rng):
        pairs = make_pairs(rng.standard_normal((6, 3)), rng.standard_normal((6, 3)))
        normed = pairs.normalized()
        assert np.allclose(np.linalg.norm(normed.source, axis=1), 1.0)
        assert np.allclose(np.linalg.norm(normed.target, axis=1), 1.0)
        assert normed.tokens == pairs.tokens


class TestOrthogonalMap:
    def test_orthogonality_enforced_for_tagged_methods(self):
        with pytest.raises(DataError, match="orthogonality"):
            OrthogonalMap(np.array([[1.0, 0.0], [0.0, 2.0]]), PROCRUSTES)

    def test_least_squares_exempt(self):
        qmap = OrthogonalMap(np.array([[1.0, 0.0], [0.0, 2.0]]), LEAST_SQUARES)
        assert qmap.dim == 2

    def test_unknown_method(self):
        with pytest.raises(DataError, match="unknown method"):
            OrthogonalMap(np.eye(2), "newton")


class TestLeastSquares:
    def test_identity(self, rng):
        source = rng.standard_normal((8, 3))
        qmap = least_squares_align(make_pairs(source, source))
        assert np.abs(qmap.matrix - np.eye(3)).max() <= 1e-8
        assert qmap.method == LEAST_SQUARES

    def test_pure_scaling(self, rng):
        source = rng.standard_normal((8, 3))
        qmap = least_squares_align(make_pairs(source, 2.0 * source))
        assert np.abs(qmap.matrix - 2.0 * np.eye(3)).max() <= 1e-8

    def test_normal_equation_oracle(self, rng):
        source = rng.standard_normal((6, 2))
        mixing = np.array([[1.0, 2.0], [3.0, 4.0]])
        target = source @ mixing
        qmap = least_squares_align(make_pairs(source, target))
        assert np.abs(qmap.matrix - mixing).max() <= 1e-8
        expected = oracles.lsq_by_explicit_2x2_inverse(source, target)
        assert np.abs(qmap.matrix - expected).max() <= 1e-8

    def test_rank_deficient_raises_numeric_error(self, rng):
        column = rng.standard_normal((6, 1))
        source = np.hstack([column, 2.0 * column])
        with pytest.raises(NumericError, match="Procrustes"):
            least_squares_align(make_pairs(source, source))

    def test_residual_not_worse_than_probes(self, rng):
        source = rng.standard_normal((12, 3))
        target = rng.standard_normal((12, 3))
        qmap = least_squares_align(make_pairs(source, target))
        best = np.linalg.norm(source @ qmap.matrix - target)
        for _ in range(25):
            probe = qmap.matrix + 0.01 * rng.standard_normal((3, 3))
            assert best <= np.linalg.norm(source @ probe - target) + 1e-12


class TestProcrustes:
    def test_identity(self, rng):
        source = rng.standard_normal((9, 4))
        qmap = procrustes_align(make_pairs(source, source))
        assert np.abs(qmap.matrix - np.eye(4)).max() <= 1e-8
        assert not qmap.non_unique

    def test_rotation_recovery(self, rng):
        rotation = np.array([[0.0, -1.0], [1.0, 0.0]])
        source = rng.standard_normal((8, 2))
        qmap = procrustes_align(make_pairs(source, source @ rotation))
        assert np.abs(qmap.matrix - rotation).max() <= 1e-8

    def test_orthogonality(self, rng):
        for _ in range(10):
            pairs = make_pairs(
                rng.standard_normal((10, 5)), rng.standard_normal((10, 5))
            )
            assert procrustes_align(pairs).orthogonality_error() <= 1e-6

    def test_noisy_grid_oracle(self, rng):
        theta = 0.7
        rotation = np.array(
            [[np.cos(theta), np.sin(theta)], [-np.sin(theta), np.cos(theta)]]
        )
        source = rng.standard_normal((10, 2))
        target = source @ rotation + 0.01 * rng.standard_normal((10, 2))
        qmap = procrustes_align(make_pairs(source, target))
        fitted = np.linalg.norm(source @ qmap.matrix - target)
        oracle = oracles.grid_best_residual_2d(source, target, step=1e-4)
        assert abs(fitted - oracle) <= 1e-6
        assert fitted <= oracle + 1e-6

    def test_non_unique_flag_on_rank_deficiency(self, rng):
        # rank-2 source in d=3 makes a zero singular value in source^T target
        base = rng.standard_normal((8, 2))
        source = np.hstack([base, np.zeros((8, 1))])
        qmap = procrustes_align(make_pairs(source, source))
        assert qmap.non_unique

    def test_unique_flag_clear_on_generic_data(self, rng):
        pairs = make_pairs(rng.standard_normal((10, 3)), rng.standard_normal((10, 3)))
        assert not procrustes_align(pairs).non_unique

    def test_normalize_flag(self, rng):
        source = rng.standard_normal((10, 3))
        target = rng.standard_normal((10, 3))
        direct = procrustes_align(make_pairs(source, target), normalize=True)
        manual = procrustes_align(
            make_pairs(normalize_rows(source), normalize_rows(target))
        )
        assert np.array_equal(direct.matrix, manual.matrix)


class TestProjectOrthogonal:
    def test_idempotent(self, rng):
        q = oracles.random_orthogonal(rng, 4)
        assert np.abs(project_orthogonal(q) - q).max() <= 1e-8

    def test_scaled_identity(self):
        assert np.abs(project_orthogonal(3.0 * np.eye(3)) - np.eye(3)).max() <= 1e-12

    def test_result_is_orthogonal(self, rng):
        for _ in range(10):
            q = project_orthogonal(rng.standard_normal((5, 5)))
            assert np.abs(q.T @ q - np.eye(5)).max() <= 1e-9

    def test_sampling_refinement_oracle(self, rng):
        matrix = rng.standard_normal((3, 3))
        fitted = project_orthogonal(matrix)
        reference = oracles.nearest_orthogonal_by_search(matrix, rng)
        assert np.abs(fitted - reference).max() <= 1e-6

    def test_non_square_rejected(self):
        with pytest.raises(DataError):
            project_orthogonal(np.ones((2, 3)))

    def test_non_finite_rejected(self):
        with pytest.raises(DataError):
            project_orthogonal(np.array([[np.inf, 0.0], [0.0, 1.0]]))


class TestKnn:
    def test_self_is_nearest(self, rng):
        pool = unit_rows(rng, 6, 4)
        result = knn_neighborhood(pool[3:4], pool, 1)
        assert result.tolist() == [[3]]

    def test_tie_break_lower_index(self):
        pool = np.eye(4)
        result = knn_neighborhood(pool[0:1], pool, 2)
        # all other rows tie at similarity zero: lowest index wins
        assert result.tolist() == [[0, 1]]

    def test_brute_force_oracle(self, rng):
        pool = unit_rows(rng, 20, 4)
        queries = unit_rows(rng, 5, 4)
        fitted = knn_neighborhood(queries, pool, 3)
        assert np.array_equal(fitted, oracles.brute_topk(queries, pool, 3))

    def test_k_too_large(self, rng):
        pool = unit_rows(rng, 4, 2)
        with pytest.raises(DataError, match="exceeds pool size"):
            knn_neighborhood(pool, pool, 5)

    def test_mean_knn_matches_brute(self, rng):
        pool = unit_rows(rng, 15, 3)
        queries = unit_rows(rng, 4, 3)
        fitted = mean_knn_similarity(queries, pool, 4)
        assert np.abs(fitted - oracles.brute_mean_knn(queries, pool, 4)).max() <= 1e-12


class TestCsls:
    def test_degenerate_two_point(self):
        x = np.array([1.0, 0.0])
        assert csls_score(x, x, 1.0, 1.0) == 0.0

    def test_arithmetic(self):
        x = np.array([1.0, 0.0])
        y = np.array([0.5, np.sqrt(3) / 2])
        assert abs(csls_score(x, y, 0.5, 0.5) - 0.0) <= 1e-12

    def test_brute_recomputation_all_pairs(self, rng):
        k = 2
        side_a = unit_rows(rng, 10, 4)
        side_b = unit_rows(rng, 10, 4)
        mean_a = mean_knn_similarity(side_a, side_b, k)
        mean_b = mean_knn_similarity(side_b, side_a, k)
        for i in range(10):
            for j in range(10):
                fitted = csls_score(side_a[i], side_b[j], mean_a[i], mean_b[j])
                sims_i = sorted(
                    (float(np.dot(side_a[i], row)) for row in side_b), reverse=True
                )
                sims_j = sorted(
                    (float(np.dot(side_b[j], row)) for row in side_a), reverse=True
                )
                expected = (
                    2.0 * float(np.dot(side_a[i], side_b[j]))
                    - sum(sims_i[:k]) / k
                    - sum(sims_j[:k]) / k
                )
                assert abs(fitted - expected) <= 1e-12

    def test_symmetry(self, rng):
        x, y = unit_rows(rng, 2, 5)
        assert csls_score(x, y, 0.3, 0.4) == csls_score(y, x, 0.4, 0.3)


class TestRcslsLoss:
    def test_single_pair_is_zero(self):
        with pytest.warns(UserWarning, match="underdetermined"):
            pairs = make_pairs([[1.0, 0.0]], [[1.0, 0.0]])
        assert rcsls_loss(np.eye(2), pairs, 1) == 0.0

    def test_determinism_bitwise(self, rng):
        pairs = make_pairs(unit_rows(rng, 12, 4), unit_rows(rng, 12, 4))
        q = oracles.random_orthogonal(rng, 4)
        assert rcsls_loss(q, pairs, 3) == rcsls_loss(q, pairs, 3)

    def test_brute_force_oracle(self, rng):
        pairs = make_pairs(unit_rows(rng, 8, 3), unit_rows(rng, 8, 3))
        q = oracles.random_orthogonal(rng, 3)
        fitted = rcsls_loss(q, pairs, 2)
        expected = oracles.brute_rcsls_loss(q, pairs.source, pairs.target, 2)
        assert abs(fitted - expected) <= 1e-12

    def test_k_too_large(self, rng):
        pairs = make_pairs(unit_rows(rng, 4, 3), unit_rows(rng, 4, 3))
        with pytest.raises(DataError, match="exceeds"):
            rcsls_loss(np.eye(3), pairs, 5)


def stable_random_point(rng, m, d, k, margin=1e-3, attempts=200):
    """A (pairs, Q) whose similarity gaps clear the stability margin."""
    for _ in range(attempts):
        pairs = make_pairs(unit_rows(rng, m, d), unit_rows(rng, m, d))
        q = oracles.random_orthogonal(rng, d)
        if oracles.neighborhoods_stable(q, pairs.source, pairs.target, k, margin):
            return pairs, q
    raise AssertionError("no neighborhood-stable point found")


class TestRcslsGradient:
    def test_matches_finite_differences(self, rng):
        pairs, q = stable_random_point(rng, 15, 4, 3)
        analytic = rcsls_gradient(q, pairs, 3)
        numeric = oracles.fd_gradient(lambda m: rcsls_loss(m, pairs, 3), q, h=1e-5)
        denom = np.maximum(np.abs(analytic), np.abs(numeric))
        denom[denom < 1e-8] = 1.0
        assert (np.abs(analytic - numeric) / denom).max() <= 1e-4

    def test_full_batch_equals_explicit_batch(self, rng):
        pairs = make_pairs(unit_rows(rng, 10, 3), unit_rows(rng, 10, 3))
        q = oracles.random_orthogonal(rng, 3)
        full = rcsls_gradient(q, pairs, 2)
        explicit = rcsls_gradient(q, pairs, 2, batch=np.arange(10))
        assert np.array_equal(full, explicit)

    def test_empty_batch_rejected(self, rng):
        pairs = make_pairs(unit_rows(rng, 5, 3), unit_rows(rng, 5, 3))
        with pytest.raises(DataError):
            rcsls_gradient(np.eye(3), pairs, 2, batch=np.array([], dtype=int))


class TestRcslsAlign:
    def test_epochs_zero_returns_init(self, rng):
        pairs = make_pairs(unit_rows(rng, 10, 3), unit_rows(rng, 10, 3))
        config = RcslsConfig(k=2, epochs=0, init="procrustes")
        fitted = rcsls_align(pairs, config)
        reference = procrustes_align(pairs.normalized())
        assert np.array_equal(fitted.matrix, reference.matrix)
        assert fitted.method == RCSLS
        identity = rcsls_align(pairs, RcslsConfig(k=2, epochs=0, init="identity"))
        assert np.array_equal(identity.matrix, np.eye(3))

    def test_no_degradation_on_exact_rotation(self, rng):
        rotation = oracles.random_orthogonal(rng, 3)
        source = unit_rows(rng, 12, 3)
        pairs = make_pairs(source, source @ rotation)
        config = RcslsConfig(k=2, epochs=5)
        fitted = rcsls_align(pairs, config)
        init_loss = rcsls_loss(
            procrustes_align(pairs.normalized()).matrix, pairs.normalized(), 2
        )
        assert fitted.final_loss <= init_loss + 1e-9

    def test_identity_init_improves(self, rng):
        pairs = make_pairs(unit_rows(rng, 30, 4), unit_rows(rng, 30, 4))
        config = RcslsConfig(k=3, epochs=10, learning_rate=1.0, init="identity")
        fitted = rcsls_align(pairs, config)
        init_loss = rcsls_loss(np.eye(4), pairs.normalized(), 3)
        assert fitted.final_loss < init_loss

    def test_orthogonality_of_result(self, rng):
        pairs = make_pairs(unit_rows(rng, 20, 5), unit_rows(rng, 20, 5))
        fitted = rcsls_align(pairs, RcslsConfig(k=4, epochs=3))
        assert fitted.orthogonality_error() <= 1e-6

    def test_determinism_bitwise(self, rng):
        source = unit_rows(rng, 15, 4)
        target = unit_rows(rng, 15, 4)
        config = RcslsConfig(k=3, epochs=4, batch_size=5, seed=11)
        first = rcsls_align(make_pairs(source, target), config)
        second = rcsls_align(make_pairs(source, target), config)
        assert np.array_equal(first.matrix, second.matrix)
        assert first.final_loss == second.final_loss

    def test_final_loss_recorded(self, rng):
        pairs = make_pairs(unit_rows(rng, 10, 3), unit_rows(rng, 10, 3))
        fitted = rcsls_align(pairs, RcslsConfig(k=2, epochs=2))
        assert fitted.final_loss == rcsls_loss(fitted.matrix, pairs.normalized(), 2)

    def test_config_validation(self):
        with pytest.raises(DataError):
            RcslsConfig(k=0)
        with pytest.raises(DataError):
            RcslsConfig(epochs=-1)
        with pytest.raises(DataError):
            RcslsConfig(learning_rate=0.0)
        with pytest.raises(DataError):
            RcslsConfig(batch_size=0)
        with pytest.raises(DataError):
            RcslsConfig(init="random")


class TestMapFile:
    def test_round_trip_exact(self, tmp_path, rng):
        qmap = OrthogonalMap(oracles.random_orthogonal(rng, 4), PROCRUSTES)
        path = tmp_path / "q.map"
        save_map(qmap, path)
        back = load_map(path)
        assert np.array_equal(back.matrix, qmap.matrix)
        assert back.method == PROCRUSTES

    def test_header_contents(self, tmp_path):
        qmap = OrthogonalMap(np.eye(3), RCSLS)
        path = tmp_path / "q.map"
        save_map(qmap, path)
        assert path.read_text().splitlines()[0] == "3 rcsls"

    def test_unknown_method_tag(self, tmp_path):
        path = tmp_path / "q.map"
        path.write_text("2 newton\n1 0\n0 1\n")
        with pytest.raises(ParseError, match="unknown method"):
            load_map(path)

    def test_row_count_mismatch(self, tmp_path):
        path = tmp_path / "q.map"
        path.write_text("3 procrustes\n1 0 0\n0 1 0\n")
        with pytest.raises(ParseError, match="expected 3 rows"):
            load_map(path)

    def test_non_orthogonal_tagged_file_rejected(self, tmp_path):
        path = tmp_path / "q.map"
        path.write_text("2 procrustes\n1 0\n0 2\n")
        with pytest.raises(ParseError, match="orthogonality"):
            load_map(path)

    def test_least_squares_file_allowed(self, tmp_path):
        path = tmp_path / "q.map"
        path.write_text("2 least-squares\n1 0\n0 2\n")
        qmap = load_map(path)
        assert qmap.matrix[1, 1] == 2.0
