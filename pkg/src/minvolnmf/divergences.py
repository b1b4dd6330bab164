"""Beta-divergences and the volume-penalized factorization objective.

The family d_beta(x|y) interpolates between the Itakura-Saito divergence
(beta=0), generalized Kullback-Leibler (beta=1) and half the squared
Euclidean distance (beta=2).  Solvers combine the matrix divergence with a
log-determinant volume penalty on the dictionary Gram matrix.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# Floor applied to divergence arguments so evaluations stay finite even on
# silent spectrogram bins (never NaN, never -inf).
DIV_FLOOR = 1e-12


def beta_div(x, y, beta):
    """Elementwise beta-divergence d_beta(x | y).

    Parameters
    ----------
    x : scalar or array_like, nonnegative for beta <= 1
    y : scalar or array_like, strictly positive
    beta : float
        Any real value; 0, 1 and 2 use the dedicated closed forms.

    Returns
    -------
    float or ndarray
        Same shape as the broadcast of ``x`` and ``y``.
    """
    x_arr = np.asarray(x, dtype=float)
    y_arr = np.asarray(y, dtype=float)
    if np.any(y_arr <= 0.0):
        raise ValueError("beta_div requires y > 0")
    if beta <= 1 and np.any(x_arr < 0.0):
        raise ValueError("beta_div requires x >= 0 for beta <= 1")

    if beta == 1:
        # convention: 0 log 0 = 0
        safe_x = np.where(x_arr > 0.0, x_arr, 1.0)
        out = np.where(x_arr > 0.0, x_arr * np.log(safe_x / y_arr), 0.0) - x_arr + y_arr
    elif beta == 0:
        ratio = np.maximum(x_arr, DIV_FLOOR) / y_arr
        out = ratio - np.log(ratio) - 1.0
    elif beta == 2:
        out = 0.5 * (x_arr - y_arr) ** 2
    else:
        out = (
            x_arr**beta + (beta - 1.0) * y_arr**beta - beta * x_arr * y_arr ** (beta - 1.0)
        ) / (beta * (beta - 1.0))
    if np.isscalar(x) and np.isscalar(y):
        return float(out)
    return out


def matrix_beta_div(V, W, H, beta):
    """Sum of beta_div(V_fn | [WH]_fn) over all entries.

    The product WH is floored at ``DIV_FLOOR`` before evaluation so that
    near-zero reconstructions never produce infinities.
    """
    V = np.asarray(V, dtype=float)
    W = np.asarray(W, dtype=float)
    H = np.asarray(H, dtype=float)
    if W.shape[1] != H.shape[0] or V.shape != (W.shape[0], H.shape[1]):
        raise ValueError(
            f"shape mismatch: V is {V.shape}, W is {W.shape}, H is {H.shape}"
        )
    WH = np.maximum(W @ H, DIV_FLOOR)
    return float(np.sum(beta_div(V, WH, beta)))


def logdet_volume(W, delta):
    """log det(W^T W + delta I), the dictionary volume surrogate.

    Computed through a Cholesky factorization; the shifted Gram matrix is
    positive definite for any finite W whenever delta > 0.
    """
    if delta <= 0.0:
        raise ValueError("delta must be positive")
    W = np.asarray(W, dtype=float)
    gram = W.T @ W + delta * np.eye(W.shape[1])
    try:
        chol = np.linalg.cholesky(gram)
    except np.linalg.LinAlgError as exc:  # unreachable for delta > 0, finite W
        raise ValueError(f"shifted Gram matrix is not positive definite: {exc}") from exc
    return 2.0 * float(np.sum(np.log(np.diag(chol))))


@dataclass(frozen=True)
class ObjectiveValue:
    """Fit/penalty split of the regularized objective (total = fit + volume)."""

    total: float
    fit: float
    volume: float


def objective(V, W, H, beta, lam, delta):
    """Full objective: D_beta(V|WH) + lam * log det(W^T W + delta I)."""
    if lam < 0.0:
        raise ValueError("lam must be nonnegative")
    fit = matrix_beta_div(V, W, H, beta)
    volume = lam * logdet_volume(W, delta) if lam > 0.0 else 0.0
    return ObjectiveValue(total=fit + volume, fit=fit, volume=volume)


def decomposition_parts(x, y, beta):
    """Convex / concave / constant split of d_beta in its second argument.

    The three parts sum to ``beta_div(x, y, beta)`` exactly.  For beta = 0
    the constant is -log(x) - 1: the x/y term is convex in y, log(y) is
    concave, and the remainder of x/y - log(x/y) - 1 carries no y.
    For beta in [1, 2] the divergence itself is convex in y, so the split
    is degenerate.
    """
    x_arr = np.asarray(x, dtype=float)
    y_arr = np.asarray(y, dtype=float)
    if np.any(y_arr <= 0.0):
        raise ValueError("decomposition_parts requires y > 0")
    if beta == 0:
        convex = x_arr / y_arr
        concave = np.log(y_arr)
        constant = -np.log(np.maximum(x_arr, DIV_FLOOR)) - 1.0
    elif 1 <= beta <= 2:
        convex = np.asarray(beta_div(x_arr, y_arr, beta))
        concave = np.zeros_like(y_arr)
        constant = np.zeros_like(x_arr)
    else:
        raise ValueError("split is only defined for beta = 0 or beta in [1, 2]")
    if np.isscalar(x) and np.isscalar(y):
        return float(convex), float(concave), float(constant)
    return convex, concave, constant
