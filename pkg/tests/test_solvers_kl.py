import numpy as np
import pytest

from minvolnmf.divergences import logdet_volume, matrix_beta_div
from minvolnmf.solvers import (
    SolverConfig,
    compute_y,
    init_factors,
    line_search_accept,
    normalize_factors,
    solve_minvol_kl,
    update_h_kl,
    update_w_minvol_kl,
    _update_w_kl,
)
from minvolnmf.evaluation import count_zero_sources, match_factors, synth_scattered_instance

from conftest import sparse_dictionary_instance


class TestInitFactors:
    def test_deterministic_for_seed(self):
        a = init_factors(10, 8, 3, seed=42)
        b = init_factors(10, 8, 3, seed=42)
        np.testing.assert_array_equal(a.W, b.W)
        np.testing.assert_array_equal(a.H, b.H)

    def test_dictionary_on_simplex(self):
        pair = init_factors(17, 9, 4, seed=1)
        np.testing.assert_allclose(pair.W.sum(axis=0), 1.0, atol=1e-12)
        assert np.all(pair.W > 0) and np.all(pair.H > 0)

    def test_seeds_decorrelate(self):
        a = init_factors(30, 30, 4, seed=0)
        b = init_factors(30, 30, 4, seed=1)
        frac_same = np.mean(a.W == b.W)
        assert frac_same < 0.01

    def test_rejects_empty(self):
        with pytest.raises(ValueError):
            init_factors(0, 4, 2, seed=0)


class TestComputeY:
    def test_identity_dictionary(self):
        gram = compute_y(np.eye(2), 1.0)
        np.testing.assert_allclose(gram.y, 0.5 * np.eye(2), atol=1e-14)
        np.testing.assert_allclose(gram.y_plus, 0.5 * np.eye(2), atol=1e-14)
        np.testing.assert_allclose(gram.y_minus, 0.0, atol=1e-14)

    def test_is_an_inverse(self):
        rng = np.random.default_rng(0)
        W = rng.random((9, 4))
        W /= W.sum(axis=0, keepdims=True)
        gram = compute_y(W, 1.0)
        np.testing.assert_allclose(
            gram.y @ (W.T @ W + np.eye(4)), np.eye(4), atol=1e-10
        )

    def test_sign_split_exact(self):
        rng = np.random.default_rng(1)
        W = rng.random((7, 3))
        gram = compute_y(W, 0.5)
        np.testing.assert_array_equal(gram.y, gram.y_plus - gram.y_minus)
        assert np.all(gram.y_plus >= 0) and np.all(gram.y_minus >= 0)
        assert np.all((gram.y_plus == 0) | (gram.y_minus == 0))

    def test_condition_number_bound(self):
        # cond(W^T W + delta I) <= 1 + K/delta on the column simplex
        rng = np.random.default_rng(2)
        for _ in range(100):
            rank = int(rng.integers(1, 11))
            W = rng.random((int(rng.integers(rank, 40) + rank), rank)) + 1e-9
            W /= W.sum(axis=0, keepdims=True)
            cond = np.linalg.cond(W.T @ W + np.eye(rank))
            assert cond <= 1.0 + rank + 1e-9


class TestUpdateHKl:
    def test_fixed_point_at_exact_fit(self):
        rng = np.random.default_rng(3)
        W = rng.random((8, 3)) + 0.1
        W /= W.sum(axis=0, keepdims=True)
        H = rng.random((3, 6)) + 0.1
        H_new = update_h_kl(W @ H, W, H)
        np.testing.assert_allclose(H_new, H, atol=1e-12)

    def test_scalar_case(self):
        H_new = update_h_kl(np.array([[2.0]]), np.array([[1.0]]), np.array([[1.0]]))
        assert H_new[0, 0] == pytest.approx(2.0, abs=1e-14)

    def test_monotone_in_kl(self):
        rng = np.random.default_rng(4)
        for _ in range(20):
            V = rng.random((10, 8)) + 0.05
            W = rng.random((10, 3)) + 0.05
            H = rng.random((3, 8)) + 0.05
            H_new = update_h_kl(V, W, H)
            assert matrix_beta_div(V, W, H_new, 1) <= matrix_beta_div(V, W, H, 1) + 1e-10


class TestUpdateWMinvolKl:
    def test_scalar_golden_value(self):
        V = np.array([[1.0]])
        W = np.array([[1.0]])
        H = np.array([[1.0]])
        gram = compute_y(W, 1.0)
        W_plus = update_w_minvol_kl(V, W, H, 0.5, gram)
        assert W_plus[0, 0] == pytest.approx(np.sqrt(3.0) - 1.0, abs=1e-12)

    def test_strictly_positive_output(self):
        rng = np.random.default_rng(5)
        for _ in range(10):
            V = rng.random((9, 7)) + 0.01
            W = rng.random((9, 3)) + 0.01
            W /= W.sum(axis=0, keepdims=True)
            H = rng.random((3, 7)) + 0.01
            W_plus = update_w_minvol_kl(V, W, H, 0.5 + rng.random(), compute_y(W, 1.0))
            assert np.all(W_plus > 0)

    def test_vanishing_penalty_matches_plain_update(self):
        rng = np.random.default_rng(6)
        for _ in range(10):
            V = rng.random((12, 9)) + 0.05
            W = rng.random((12, 3)) + 0.05
            W /= W.sum(axis=0, keepdims=True)
            H = rng.random((3, 9)) + 0.05
            W_minvol = update_w_minvol_kl(V, W, H, 1e-8, compute_y(W, 1.0))
            W_plain = _update_w_kl(V, W, H)
            np.testing.assert_allclose(W_minvol, W_plain, rtol=1e-5)

    def test_decreases_unnormalized_objective(self):
        rng = np.random.default_rng(7)
        for _ in range(10):
            V = rng.random((10, 8)) + 0.05
            W = rng.random((10, 3)) + 0.05
            W /= W.sum(axis=0, keepdims=True)
            H = rng.random((3, 8)) + 0.05
            lam, delta = 0.5 + rng.random(), 1.0
            W_plus = update_w_minvol_kl(V, W, H, lam, compute_y(W, delta))
            before = matrix_beta_div(V, W, H, 1) + lam * logdet_volume(W, delta)
            after = matrix_beta_div(V, W_plus, H, 1) + lam * logdet_volume(W_plus, delta)
            assert after <= before + 1e-9


class TestNormalizeFactors:
    def test_identity_on_normalized(self):
        pair = init_factors(6, 5, 2, seed=0)
        W, H = normalize_factors(pair.W, pair.H)
        np.testing.assert_allclose(W, pair.W, atol=1e-12)

    def test_product_invariance(self):
        rng = np.random.default_rng(8)
        W = rng.random((7, 3)) + 0.1
        H = rng.random((3, 5)) + 0.1
        W2, H2 = normalize_factors(5.0 * W, H)
        np.testing.assert_allclose(W2 @ H2, 5.0 * W @ H, atol=1e-12)
        np.testing.assert_allclose(W2.sum(axis=0), 1.0, atol=1e-12)

    def test_random_pair_recomposition(self):
        rng = np.random.default_rng(9)
        W = rng.random((8, 4)) + 0.1
        H = rng.random((4, 6)) + 0.1
        W2, H2 = normalize_factors(W, H)
        assert np.max(np.abs(W2 @ H2 - W @ H)) < 1e-12
        np.testing.assert_allclose(W2.sum(axis=0), 1.0, atol=1e-12)


class TestLineSearch:
    @staticmethod
    def _objective(V, lam, delta):
        def f_eval(W, H):
            return matrix_beta_div(V, W, H, 1) + lam * logdet_volume(W, delta)
        return f_eval

    def test_accepts_improving_full_step(self):
        rng = np.random.default_rng(10)
        V = rng.random((8, 6)) + 0.05
        pair = init_factors(8, 6, 2, seed=0)
        W, H = pair.W, pair.H
        f_eval = self._objective(V, 1e-6, 1.0)
        W_plus = _update_w_kl(V, W, H)
        W2, H2, gamma, backtracks, exhausted = line_search_accept(f_eval, W, H, W_plus, 1.0)
        assert backtracks == 0 and not exhausted
        assert gamma == 1.0

    def test_no_op_step_accepted(self):
        pair = init_factors(6, 5, 2, seed=1)
        V = pair.W @ pair.H
        f_eval = self._objective(V, 0.5, 1.0)
        W2, H2, gamma, backtracks, exhausted = line_search_accept(
            f_eval, pair.W, pair.H, pair.W.copy(), 1.0
        )
        assert backtracks == 0 and not exhausted
        np.testing.assert_allclose(W2, pair.W, atol=1e-12)

    def test_ascent_direction_falls_back(self):
        # start from an exact fit; pushing the dictionary toward a larger
        # volume raises the objective for every step size
        W = np.array([[0.9, 0.1], [0.1, 0.9]])
        H = np.array([[1.0, 2.0], [2.0, 1.0]])
        V = W @ H
        f_eval = self._objective(V, 1.0, 1.0)
        W_plus = np.eye(2)
        W2, H2, gamma, backtracks, exhausted = line_search_accept(f_eval, W, H, W_plus, 1.0)
        assert exhausted
        assert backtracks == 100
        assert gamma == pytest.approx(0.8**100, rel=1e-9)
        np.testing.assert_array_equal(W2, W)
        np.testing.assert_array_equal(H2, H)

    def test_rejects_bad_gamma(self):
        pair = init_factors(4, 4, 2, seed=2)
        with pytest.raises(ValueError):
            line_search_accept(lambda W, H: 0.0, pair.W, pair.H, pair.W, 0.0)


class TestSolveMinvolKl:
    def test_monotone_objective(self):
        rng = np.random.default_rng(11)
        V = rng.random((50, 40)) + 0.05
        config = SolverConfig(beta=1, rank=3, lam=0.5, max_iters=200, seed=0)
        _, trace = solve_minvol_kl(V, config)
        assert np.all(np.diff(trace.total) <= 1e-9)

    def test_simplex_preserved(self):
        rng = np.random.default_rng(12)
        V = rng.random((30, 25)) + 0.05
        config = SolverConfig(beta=1, rank=4, lam=1.0, max_iters=50, seed=3)
        pair, _ = solve_minvol_kl(V, config)
        np.testing.assert_allclose(pair.W.sum(axis=0), 1.0, atol=1e-10)
        assert np.all(pair.W >= 1e-16) and np.all(pair.H >= 1e-16)

    def test_recovers_scattered_instance(self):
        instance = synth_scattered_instance(40, 60, 4, seed=0)
        config = SolverConfig(beta=1, rank=4, max_iters=500, seed=0)
        pair, trace = solve_minvol_kl(instance.V, config)
        _, err = match_factors(pair.W, instance.W_true)
        assert err < 1e-2
        assert np.all(np.diff(trace.total) <= 1e-9)

    def test_overestimated_rank_zeroes_rows(self):
        V, _, _ = sparse_dictionary_instance(40, 60, 3, seed=0)
        config = SolverConfig(beta=1, rank=7, max_iters=1000, seed=0)
        pair, _ = solve_minvol_kl(V, config)
        assert len(count_zero_sources(pair.H)) >= 3

    def test_rejects_wrong_beta(self):
        with pytest.raises(ValueError):
            solve_minvol_kl(np.ones((4, 4)), SolverConfig(beta=0, rank=2))

    def test_rejects_negative_entries(self):
        with pytest.raises(ValueError):
            solve_minvol_kl(-np.ones((4, 4)), SolverConfig(beta=1, rank=2))
