import numpy as np
import pytest

from minvolnmf.divergences import logdet_volume, matrix_beta_div
from minvolnmf.majorization import (
    fit_auxiliary,
    full_auxiliary,
    logdet_majorizer,
    quad_volume_majorizer,
)
from minvolnmf.solvers import GramInverse, compute_y


def _random_point(rng, n_rows=8, n_cols=7, rank=3):
    V = rng.random((n_rows, n_cols)) + 0.05
    W_tilde = rng.random((n_rows, rank)) + 0.05
    W_tilde /= W_tilde.sum(axis=0, keepdims=True)
    W = rng.random((n_rows, rank)) + 0.05
    H = rng.random((rank, n_cols)) + 0.05
    return V, W, W_tilde, H


class TestFitAuxiliary:
    @pytest.mark.parametrize("beta", [0, 1])
    def test_upper_bounds_fit(self, beta):
        rng = np.random.default_rng(10 + beta)
        for _ in range(50):
            V, W, W_tilde, H = _random_point(rng)
            assert fit_auxiliary(V, W, W_tilde, H, beta) >= (
                matrix_beta_div(V, W, H, beta) - 1e-9
            )

    @pytest.mark.parametrize("beta", [0, 1])
    def test_tight_at_anchor(self, beta):
        rng = np.random.default_rng(20 + beta)
        for _ in range(20):
            V, _, W_tilde, H = _random_point(rng)
            gap = fit_auxiliary(V, W_tilde, W_tilde, H, beta) - matrix_beta_div(
                V, W_tilde, H, beta
            )
            assert abs(gap) < 1e-10


class TestLogdetMajorizer:
    def test_upper_bound_and_anchor(self):
        rng = np.random.default_rng(30)
        for _ in range(50):
            W = rng.random((6, 3))
            Z = rng.random((6, 3)) + 0.01
            delta = 0.5 + rng.random()
            assert logdet_majorizer(W, Z, delta) >= logdet_volume(W, delta) - 1e-9
            anchor_gap = logdet_majorizer(Z, Z, delta) - logdet_volume(Z, delta)
            assert abs(anchor_gap) < 1e-10


class TestQuadVolumeMajorizer:
    def test_bounds_row_quadratic(self):
        rng = np.random.default_rng(40)
        for _ in range(50):
            rank = int(rng.integers(2, 6))
            W_base = rng.random((9, rank)) + 0.01
            W_base /= W_base.sum(axis=0, keepdims=True)
            gram = compute_y(W_base, 0.5 + rng.random())
            W = rng.random((5, rank)) + 0.01
            W_tilde = rng.random((5, rank)) + 0.01
            exact = float(np.trace(gram.y @ (W.T @ W)))
            assert quad_volume_majorizer(W, W_tilde, gram) >= exact - 1e-9
            anchor = quad_volume_majorizer(W_tilde, W_tilde, gram)
            exact_anchor = float(np.trace(gram.y @ (W_tilde.T @ W_tilde)))
            assert abs(anchor - exact_anchor) < 1e-10

    def test_curvature_exact_for_diagonal_gram_inverse(self):
        rng = np.random.default_rng(41)
        diag = rng.random(4) + 0.1
        gram = GramInverse(y=np.diag(diag), y_plus=np.diag(diag), y_minus=np.zeros((4, 4)))
        w = rng.random(4) + 0.1
        phi = 2.0 * (gram.y_plus @ w + gram.y_minus @ w) / w
        np.testing.assert_allclose(phi, 2.0 * diag, atol=1e-12)


class TestFullAuxiliary:
    @pytest.mark.parametrize("beta", [0, 1])
    def test_majorizes_objective(self, beta):
        rng = np.random.default_rng(50 + beta)
        for _ in range(50):
            V, W, W_tilde, H = _random_point(rng)
            lam = 0.5 + rng.random()
            delta = 0.5 + rng.random()
            bound = full_auxiliary(V, W, W_tilde, H, beta, lam, delta)
            exact = matrix_beta_div(V, W, H, beta) + lam * logdet_volume(W, delta)
            assert bound >= exact - 1e-9

    @pytest.mark.parametrize("beta", [0, 1])
    def test_anchor_equality(self, beta):
        rng = np.random.default_rng(60 + beta)
        for _ in range(20):
            V, _, W_tilde, H = _random_point(rng)
            lam = 0.5 + rng.random()
            delta = 0.5 + rng.random()
            bound = full_auxiliary(V, W_tilde, W_tilde, H, beta, lam, delta)
            exact = matrix_beta_div(V, W_tilde, H, beta) + lam * logdet_volume(W_tilde, delta)
            assert abs(bound - exact) < 1e-10


class TestDiagonalDominance:
    def test_scaled_curvature_gap_is_diagonally_dominant(self):
        rng = np.random.default_rng(70)
        for _ in range(100):
            rank = int(rng.integers(2, 7))
            W = rng.random((10, rank)) + 0.01
            W /= W.sum(axis=0, keepdims=True)
            gram = compute_y(W, 0.3 + rng.random())
            w = rng.random(rank) + 0.01
            phi = 2.0 * (gram.y_plus @ w + gram.y_minus @ w) / w
            M = np.outer(w, w) * (np.diag(phi) - 2.0 * gram.y)
            diag = np.abs(np.diag(M))
            off = np.abs(M).sum(axis=1) - diag
            assert np.all(diag >= off - 1e-12)
