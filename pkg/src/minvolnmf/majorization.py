"""Separable upper bounds behind the multiplicative updates.

Every dictionary update in the min-vol solvers minimizes a convex, separable
function that (a) never lies below the true objective and (b) touches it at
the current iterate.  The bounds are assembled here so they can be evaluated
and stress-tested independently of the closed-form updates derived from them.
"""

from __future__ import annotations

import numpy as np

from .divergences import DIV_FLOOR, logdet_volume
from .solvers import GramInverse, compute_y


def fit_auxiliary(V, W, W_tilde, H, beta):
    """Row-separable bound on sum_fn d_beta(V | WH), tight at W = W_tilde.

    The convex part of the divergence is transported through Jensen's
    inequality with weights w_tilde_k h_kn / vt_n; the concave part is
    replaced by its tangent at vt = W_tilde H.  Supports beta in {0, 1}.
    """
    V = np.asarray(V, dtype=float)
    W = np.asarray(W, dtype=float)
    W_tilde = np.asarray(W_tilde, dtype=float)
    H = np.asarray(H, dtype=float)
    Vt = np.maximum(W_tilde @ H, DIV_FLOOR)

    if beta == 1:
        # y_fkn = vt_fn * w_fk / wt_fk, weight c_fkn = wt_fk * h_kn / vt_fn
        y = Vt[:, None, :] * (W / W_tilde)[:, :, None]
        y = np.maximum(y, DIV_FLOOR)
        coef = W_tilde[:, :, None] * H[None, :, :] / Vt[:, None, :]
        x = V[:, None, :]
        safe_x = np.where(x > 0.0, x, 1.0)
        inner = np.where(x > 0.0, x * np.log(safe_x / y), 0.0) - x + y
        return float(np.sum(coef * inner))

    if beta == 0:
        Vf = np.maximum(V, DIV_FLOOR)
        convex = np.sum(
            (W_tilde**2 / np.maximum(W, DIV_FLOOR))[:, :, None]
            * H[None, :, :] * Vf[:, None, :] / (Vt**2)[:, None, :]
        )
        tangent = np.sum(((W - W_tilde) @ H) / Vt)
        concave = np.sum(np.log(Vt))
        constant = np.sum(-np.log(Vf) - 1.0)
        return float(convex + tangent + concave + constant)

    raise ValueError("fit_auxiliary supports beta in {0, 1}")


def logdet_majorizer(W, Z, delta):
    """Tangent bound on logdet(W^T W + delta I) anchored at Z.

    logdet is concave on positive-definite matrices, so its first-order
    expansion around Z^T Z + delta I is an upper bound, with equality at
    W = Z.  Expanded: tr(Y W^T W) + delta tr(Y) + logdet(Y^-1) - K with
    Y = (Z^T Z + delta I)^-1.
    """
    W = np.asarray(W, dtype=float)
    Z = np.asarray(Z, dtype=float)
    rank = W.shape[1]
    y = compute_y(Z, delta).y
    return (
        float(np.trace(y @ (W.T @ W)))
        + delta * float(np.trace(y))
        + logdet_volume(Z, delta)
        - rank
    )


def quad_volume_majorizer(W, W_tilde, gram: GramInverse):
    """Separable quadratic bound on sum_f w_f Y w_f^T, tight at W_tilde.

    The Hessian 2Y of each row term is replaced by the diagonal matrix
    2 diag((Y^+ + Y^-) w_tilde / w_tilde), which dominates it; when Y itself
    is diagonal the two coincide and the bound is exact everywhere.
    """
    W = np.asarray(W, dtype=float)
    W_tilde = np.asarray(W_tilde, dtype=float)
    base = float(np.trace(gram.y @ (W_tilde.T @ W_tilde)))
    dW = W - W_tilde
    grad = 2.0 * float(np.sum(dW * (W_tilde @ gram.y)))
    phi = 2.0 * (W_tilde @ (gram.y_plus + gram.y_minus)) / W_tilde
    quad = 0.5 * float(np.sum(phi * dW * dW))
    return base + grad + quad


def full_auxiliary(V, W, W_tilde, H, beta, lam, delta):
    """Complete separable bound on fit + lam * logdet(W^T W + delta I).

    Combines the fit bound with the quadratic volume bound; the additive
    constant delta tr(Y) + logdet(Y^-1) - K restores equality at the anchor.
    """
    gram = compute_y(W_tilde, delta)
    rank = np.asarray(W).shape[1]
    const = delta * float(np.trace(gram.y)) + logdet_volume(W_tilde, delta) - rank
    return fit_auxiliary(V, W, W_tilde, H, beta) + lam * (
        quad_volume_majorizer(W, W_tilde, gram) + const
    )
