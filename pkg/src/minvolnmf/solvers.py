"""Multiplicative-update solvers for volume-regularized and plain beta-NMF.

Three variants operate on a nonnegative matrix V (typically an amplitude
spectrogram):

* ``minvol``   -- beta in {0, 1}; alternates a multiplicative activation
  update with a dictionary update that minimizes a separable upper bound of
  fit + lam * logdet(W^T W + delta I), then re-projects the dictionary
  columns onto the unit simplex through a backtracking line search so the
  objective never increases.
* ``baseline`` -- plain alternating multiplicative updates, beta in {0, 1, 2}.
* ``sparse``   -- KL fit plus an l1 penalty on the activations, with the
  same simplex normalization and line search as ``minvol``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .divergences import DIV_FLOOR, ObjectiveValue, logdet_volume, matrix_beta_div, objective

# Positivity floor on factor entries; keeps every division in the updates finite.
FACTOR_FLOOR = 1e-16
# A row of H counts as switched off when its peak falls below this fraction
# of the global peak.
ZERO_ROW_RTOL = 1e-6
MAX_BACKTRACKS = 100

VARIANTS = ("minvol", "baseline", "sparse")


@dataclass
class FactorPair:
    """Dictionary W (n_rows x rank) and activations H (rank x n_cols)."""

    W: np.ndarray
    H: np.ndarray

    @property
    def rank(self):
        return self.W.shape[1]


@dataclass(frozen=True)
class SolverConfig:
    """Knobs shared by all solver variants.

    ``lam=None`` requests the automatic scale: lam is chosen so the volume
    penalty is 10% of the fit term at the initial random factors.
    """

    beta: int = 1
    rank: int = 2
    lam: float | None = None
    delta: float = 1.0
    max_iters: int = 200
    seed: int = 0
    variant: str = "minvol"
    sparse_weight: float = 0.0
    objective_log: bool = True

    def __post_init__(self):
        if self.rank < 1:
            raise ValueError("rank must be >= 1")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if self.delta <= 0.0:
            raise ValueError("delta must be positive")
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown variant {self.variant!r}; expected one of {VARIANTS}")
        if self.sparse_weight < 0.0:
            raise ValueError("sparse_weight must be nonnegative")
        if self.lam is not None and self.lam < 0.0:
            raise ValueError("lam must be nonnegative")


@dataclass(frozen=True)
class GramInverse:
    """Inverse of the shifted dictionary Gram matrix, split by sign.

    ``y == y_plus - y_minus`` exactly, with both parts nonnegative and of
    disjoint support.
    """

    y: np.ndarray
    y_plus: np.ndarray
    y_minus: np.ndarray


@dataclass
class IterationTrace:
    """Per-iteration solver diagnostics.

    ``volume`` holds the active regularizer: lam * logdet for minvol,
    mu * sum(H) for sparse, zero for baseline, so total = fit + volume
    throughout.
    """

    total: list = field(default_factory=list)
    fit: list = field(default_factory=list)
    volume: list = field(default_factory=list)
    gamma: list = field(default_factory=list)
    backtracks: list = field(default_factory=list)
    exhausted: list = field(default_factory=list)
    zero_rows: list = field(default_factory=list)

    def record(self, value: ObjectiveValue | None, gamma, backtracks, exhausted, H):
        if value is not None:
            self.total.append(value.total)
            self.fit.append(value.fit)
            self.volume.append(value.volume)
        self.gamma.append(gamma)
        self.backtracks.append(backtracks)
        self.exhausted.append(exhausted)
        peak = H.max()
        self.zero_rows.append(H.max(axis=1) < ZERO_ROW_RTOL * peak)

    @property
    def n_iterations(self):
        return len(self.gamma)

    def csv_rows(self):
        """Rows (iter, total, fit, volume, gamma, backtracks) for export."""
        for i in range(len(self.total)):
            yield (i, self.total[i], self.fit[i], self.volume[i],
                   self.gamma[i], self.backtracks[i])


def _checked_matrix(V):
    V = np.asarray(V, dtype=float)
    if V.ndim != 2:
        raise ValueError("V must be a 2-D matrix")
    if not np.all(np.isfinite(V)):
        raise ValueError("V must be finite")
    if np.any(V < 0.0):
        raise ValueError("V must be nonnegative")
    return V


def init_factors(n_rows, n_cols, rank, seed):
    """Seeded random factors: uniform on (0, 1], W column-normalized."""
    if min(n_rows, n_cols, rank) < 1:
        raise ValueError("n_rows, n_cols and rank must all be >= 1")
    rng = np.random.default_rng(seed)
    W = 1.0 - rng.random((n_rows, rank))
    H = 1.0 - rng.random((rank, n_cols))
    W = W / W.sum(axis=0, keepdims=True)
    return FactorPair(W=W, H=H)


def compute_y(W, delta):
    """Invert W^T W + delta I through its Cholesky factor and split by sign."""
    if delta <= 0.0:
        raise ValueError("delta must be positive")
    W = np.asarray(W, dtype=float)
    rank = W.shape[1]
    gram = W.T @ W + delta * np.eye(rank)
    y = cho_solve(cho_factor(gram), np.eye(rank))
    y = 0.5 * (y + y.T)  # remove asymmetric rounding so the split is exact
    return GramInverse(y=y, y_plus=np.maximum(y, 0.0), y_minus=np.maximum(-y, 0.0))


def auto_lambda(V, W, H, beta, delta):
    """Penalty weight making the volume term ~10% of the initial fit term."""
    fit0 = matrix_beta_div(V, W, H, beta)
    vol0 = abs(logdet_volume(W, delta))
    return 0.1 * fit0 / max(vol0, DIV_FLOOR)


# In auto mode the penalty weight decays geometrically from auto_lambda to
# auto_lambda / _ANNEAL_RATIO across the iteration budget.  A fixed weight
# either biases the dictionary (large) or fails to identify it (small); the
# decaying weight finds the low-volume basin early and then releases the
# bias.  With delta >= 1 the volume term is nonnegative, so a shrinking
# weight keeps the recorded objective non-increasing.
_ANNEAL_RATIO = 100.0


def _lambda_schedule(lam, auto_value, n_iters):
    """Per-iteration penalty weights: constant when user-supplied, annealed
    in auto mode."""
    if lam is not None:
        return np.full(n_iters, float(lam))
    if n_iters == 1:
        return np.array([auto_value])
    decay = (1.0 / _ANNEAL_RATIO) ** (1.0 / (n_iters - 1))
    return auto_value * decay ** np.arange(n_iters)


def update_h_kl(V, W, H):
    """Multiplicative KL update of the activations (dictionary fixed)."""
    WH = np.maximum(W @ H, DIV_FLOOR)
    numer = W.T @ (V / WH)
    denom = W.sum(axis=0)[:, None]
    return np.maximum(H * numer / denom, FACTOR_FLOOR)


def update_h_is(V, W, H):
    """Multiplicative Itakura-Saito update of the activations."""
    WH = np.maximum(W @ H, DIV_FLOOR)
    numer = W.T @ (V / WH**2)
    denom = W.T @ (1.0 / WH)
    return np.maximum(H * numer / denom, FACTOR_FLOOR)


def _update_w_kl(V, W, H):
    """Plain multiplicative KL update of the dictionary (no penalty)."""
    WH = np.maximum(W @ H, DIV_FLOOR)
    numer = (V / WH) @ H.T
    denom = H.sum(axis=1)[None, :]
    return np.maximum(W * numer / np.maximum(denom, FACTOR_FLOOR), FACTOR_FLOOR)


def update_w_minvol_kl(V, W_tilde, H, lam, gram):
    """Closed-form minimizer of the separable KL + volume upper bound.

    Each entry solves the quadratic stationarity condition
    2*lam*phi * w^2 + b * w - w_tilde * r = 0 with
    b = sum_n h_kn - 4*lam*[W Y^-], phi = [W (Y^+ + Y^-)] / w_tilde and
    r the KL ratio statistic; only the positive root is kept.
    """
    if lam <= 0.0:
        raise ValueError("lam must be positive for the min-vol update")
    WH = np.maximum(W_tilde @ H, DIV_FLOOR)
    ratio_ht = (V / WH) @ H.T
    b = H.sum(axis=1)[None, :] - 4.0 * lam * (W_tilde @ gram.y_minus)
    scale = W_tilde @ (gram.y_plus + gram.y_minus)
    bump = 8.0 * lam * scale * ratio_ht
    disc = np.sqrt(b * b + bump)
    # sqrt(b^2 + bump) - b cancels catastrophically for b > 0; use the
    # conjugate form there so the lam -> 0 limit stays accurate.
    numer = np.empty_like(b)
    pos = b > 0.0
    numer[pos] = bump[pos] / (disc[pos] + b[pos])
    numer[~pos] = disc[~pos] - b[~pos]
    return np.maximum(W_tilde * numer / (4.0 * lam * scale), FACTOR_FLOOR)


def normalize_factors(W, H):
    """Rescale so W columns sum to one; H absorbs the scales (WH unchanged)."""
    sums = W.sum(axis=0)
    if np.any(sums <= 0.0):
        raise ValueError("cannot normalize: W has a nonpositive column sum")
    return np.maximum(W / sums, FACTOR_FLOOR), np.maximum(H * sums[:, None], FACTOR_FLOOR)


def line_search_accept(f_eval, W, H, W_plus, gamma):
    """Backtrack the dictionary step until the objective stops increasing.

    The normalized full update is probed first; while it increases the
    objective, the persistent step size gamma shrinks by 0.8 and the
    candidate (1 - gamma) W + gamma W_plus is normalized together with H and
    re-evaluated, at most ``MAX_BACKTRACKS`` times.  On acceptance gamma is
    enlarged by 1.2 (capped at 1) for the next iteration, so the step size
    does not vanish across iterations.

    Returns
    -------
    (W_out, H_out, gamma_out, backtracks, exhausted)
        ``exhausted`` is True when every candidate was rejected, in which
        case the previous factors are kept unchanged.
    """
    if not 0.0 < gamma <= 1.0:
        raise ValueError("gamma must lie in (0, 1]")
    f_ref = f_eval(W, H)
    backtracks = 0
    W_cand, H_cand = normalize_factors(W_plus, H)
    while f_eval(W_cand, H_cand) > f_ref:
        if backtracks == MAX_BACKTRACKS:
            return W, H, gamma, backtracks, True
        gamma *= 0.8
        backtracks += 1
        W_cand = (1.0 - gamma) * W + gamma * W_plus
        W_cand, H_cand = normalize_factors(W_cand, H)
    return W_cand, H_cand, min(1.0, 1.2 * gamma), backtracks, False


def _resolve_lambdas(V, pair, config):
    auto = None
    if config.lam is None:
        auto = auto_lambda(V, pair.W, pair.H, config.beta, config.delta)
    elif config.lam <= 0.0:
        raise ValueError("the min-vol variants require lam > 0")
    return _lambda_schedule(config.lam, auto, config.max_iters)


def solve_minvol_kl(V, config):
    """Volume-regularized KL-NMF (beta = 1).

    Per iteration: multiplicative H update, Gram inverse refresh, separable
    dictionary update, simplex normalization guarded by the line search.
    The recorded objective never increases.
    """
    V = _checked_matrix(V)
    if config.beta != 1:
        raise ValueError("solve_minvol_kl expects beta = 1")
    pair = init_factors(V.shape[0], V.shape[1], config.rank, config.seed)
    lambdas, delta = _resolve_lambdas(V, pair, config), config.delta
    W, H = pair.W, pair.H

    trace = IterationTrace()
    for lam in lambdas:
        def f_eval(Wc, Hc, lam=lam):
            return matrix_beta_div(V, Wc, Hc, 1) + lam * logdet_volume(Wc, delta)

        H = update_h_kl(V, W, H)
        gram = compute_y(W, delta)
        W_plus = update_w_minvol_kl(V, W, H, lam, gram)
        # restart from the full update every iteration; a carried-over step
        # size decays geometrically and freezes the dictionary
        W, H, gamma, backtracks, exhausted = line_search_accept(f_eval, W, H, W_plus, 1.0)
        value = objective(V, W, H, 1, lam, delta) if config.objective_log else None
        trace.record(value, gamma, backtracks, exhausted, H)
    return FactorPair(W=W, H=H), trace


def is_cubic_coefficients(V, W_tilde, H, lam, gram, row, col):
    """Coefficients (a, b, d) of the coordinate polynomial a w^3 + b w^2 + d.

    Stationarity of the separable Itakura-Saito + volume bound in the single
    dictionary entry (row, col), holding every other entry at W_tilde.
    """
    w = W_tilde[row]
    v = V[row]
    vt = np.maximum(w @ H, DIV_FLOOR)
    a = 2.0 * lam * float((gram.y_plus @ w + gram.y_minus @ w)[col]) / float(w[col])
    b = float(H[col] @ (1.0 / vt)) - 4.0 * lam * float((gram.y_minus @ w)[col])
    d = -float(w[col]) ** 2 * float(H[col] @ (v / vt**2))
    return a, b, d


def cubic_roots(a, b, d):
    """Real roots of a w^3 + b w^2 + d (no linear term), sorted ascending.

    Closed form on the depressed cubic, then Newton-polished on the original
    polynomial so residuals stay below 1e-10 * max(|a|, |b|, |d|).
    Degenerate leading coefficients fall back to the quadratic/constant case.
    """
    if a == 0.0:
        if b == 0.0:
            return [0.0] if d == 0.0 else []
        rad = -d / b
        if rad < 0.0:
            return []
        root = np.sqrt(rad)
        roots = [0.0] if root == 0.0 else [-root, root]
    else:
        p = b / a
        # substitute w = t - p/3: t^3 + alpha t + q = 0
        alpha = -p * p / 3.0
        q = 2.0 * p**3 / 27.0 + d / a
        disc = 0.25 * q * q + alpha**3 / 27.0
        if disc > 0.0:
            s = np.sqrt(disc)
            # pick the non-cancelling cube root first, recover the mate from
            # u*v = -alpha/3
            u = np.cbrt(-0.5 * q + s) if q <= 0.0 else np.cbrt(-0.5 * q - s)
            v = 0.0 if u == 0.0 else -alpha / (3.0 * u)
            ts = [u + v]
        elif alpha == 0.0:  # disc <= 0 forces q = 0: triple root
            ts = [0.0]
        else:
            m = 2.0 * np.sqrt(-alpha / 3.0)
            acos_arg = np.clip(3.0 * q / (alpha * m), -1.0, 1.0)
            theta = np.arccos(acos_arg) / 3.0
            ts = [m * np.cos(theta - 2.0 * np.pi * k / 3.0) for k in range(3)]
        roots = [t - p / 3.0 for t in ts]

    out = []
    for w in roots:
        for _ in range(3):
            resid = (a * w + b) * w * w + d
            slope = (3.0 * a * w + 2.0 * b) * w
            if slope != 0.0:
                w -= resid / slope
        out.append(float(w))
    return sorted(out)


def _coordinate_aux(a, b, d, w):
    """Coordinate restriction of the Itakura-Saito + volume bound (w >= 0)."""
    if w <= 0.0:
        return 0.0 if d == 0.0 else np.inf
    return 0.5 * a * w * w + b * w - d / w


def update_w_minvol_is(V, W_tilde, H, lam, gram):
    """Coordinate-wise dictionary update for the Itakura-Saito variant.

    For every entry: solve the cubic stationarity condition, then pick the
    best candidate among the nonnegative roots and zero, floored at
    ``FACTOR_FLOOR``.
    """
    if lam <= 0.0:
        raise ValueError("lam must be positive for the min-vol update")
    Vt = np.maximum(W_tilde @ H, DIV_FLOOR)
    inv_vt_ht = (1.0 / Vt) @ H.T
    ratio_ht = (V / Vt**2) @ H.T
    A = 2.0 * lam * (W_tilde @ (gram.y_plus + gram.y_minus)) / W_tilde
    B = inv_vt_ht - 4.0 * lam * (W_tilde @ gram.y_minus)
    D = -(W_tilde**2) * ratio_ht

    W_plus = np.empty_like(W_tilde)
    n_rows, rank = W_tilde.shape
    for f in range(n_rows):
        for k in range(rank):
            a, b, d = A[f, k], B[f, k], D[f, k]
            candidates = [r for r in cubic_roots(a, b, d) if r >= 0.0]
            candidates.append(0.0)
            best = min(candidates, key=lambda w: _coordinate_aux(a, b, d, w))
            W_plus[f, k] = max(FACTOR_FLOOR, best)
    return W_plus


def solve_minvol_is(V, config):
    """Volume-regularized Itakura-Saito NMF (beta = 0).

    Same skeleton as the KL variant with the activation update swapped for
    the Itakura-Saito ratio and the dictionary update for the cubic
    coordinate solver.  V is floored at ``DIV_FLOOR``.
    """
    V = np.maximum(_checked_matrix(V), DIV_FLOOR)
    if config.beta != 0:
        raise ValueError("solve_minvol_is expects beta = 0")
    pair = init_factors(V.shape[0], V.shape[1], config.rank, config.seed)
    lambdas, delta = _resolve_lambdas(V, pair, config), config.delta
    W, H = pair.W, pair.H

    trace = IterationTrace()
    for lam in lambdas:
        def f_eval(Wc, Hc, lam=lam):
            return matrix_beta_div(V, Wc, Hc, 0) + lam * logdet_volume(Wc, delta)

        H = update_h_is(V, W, H)
        gram = compute_y(W, delta)
        W_plus = update_w_minvol_is(V, W, H, lam, gram)
        W, H, gamma, backtracks, exhausted = line_search_accept(f_eval, W, H, W_plus, 1.0)
        value = objective(V, W, H, 0, lam, delta) if config.objective_log else None
        trace.record(value, gamma, backtracks, exhausted, H)
    return FactorPair(W=W, H=H), trace


def solve_baseline(V, config):
    """Plain alternating multiplicative updates, beta in {0, 1, 2}.

    No normalization during the iterations; the returned factors are
    normalized once so dictionaries are comparable across variants.
    """
    V = _checked_matrix(V)
    beta = config.beta
    if beta not in (0, 1, 2):
        raise ValueError("baseline supports beta in {0, 1, 2}")
    if beta == 0:
        V = np.maximum(V, DIV_FLOOR)
    pair = init_factors(V.shape[0], V.shape[1], config.rank, config.seed)
    W, H = pair.W, pair.H

    trace = IterationTrace()
    for _ in range(config.max_iters):
        if beta == 1:
            H = update_h_kl(V, W, H)
            W = _update_w_kl(V, W, H)
        elif beta == 0:
            H = update_h_is(V, W, H)
            WH = np.maximum(W @ H, DIV_FLOOR)
            W = np.maximum(W * ((V / WH**2) @ H.T) / ((1.0 / WH) @ H.T), FACTOR_FLOOR)
        else:
            WH = np.maximum(W @ H, DIV_FLOOR)
            H = np.maximum(H * (W.T @ V) / np.maximum(W.T @ WH, FACTOR_FLOOR), FACTOR_FLOOR)
            WH = np.maximum(W @ H, DIV_FLOOR)
            W = np.maximum(W * (V @ H.T) / np.maximum(WH @ H.T, FACTOR_FLOOR), FACTOR_FLOOR)
        value = objective(V, W, H, beta, 0.0, config.delta) if config.objective_log else None
        trace.record(value, 1.0, 0, False, H)
    W, H = normalize_factors(W, H)
    return FactorPair(W=W, H=H), trace


def solve_sparse_kl(V, config):
    """KL-NMF with an l1 activation penalty and simplex-normalized dictionary.

    The activation update absorbs the penalty weight in its denominator; the
    dictionary step reuses the plain KL update followed by the same
    normalization line search as minvol, applied to fit + mu * sum(H).
    """
    V = _checked_matrix(V)
    if config.beta != 1:
        raise ValueError("solve_sparse_kl expects beta = 1")
    mu = config.sparse_weight
    pair = init_factors(V.shape[0], V.shape[1], config.rank, config.seed)
    W, H = pair.W, pair.H

    def f_eval(Wc, Hc):
        return matrix_beta_div(V, Wc, Hc, 1) + mu * float(Hc.sum())

    trace = IterationTrace()
    for _ in range(config.max_iters):
        WH = np.maximum(W @ H, DIV_FLOOR)
        H = np.maximum(H * (W.T @ (V / WH)) / (W.sum(axis=0)[:, None] + mu), FACTOR_FLOOR)
        W_plus = _update_w_kl(V, W, H)
        W, H, gamma, backtracks, exhausted = line_search_accept(f_eval, W, H, W_plus, 1.0)
        if config.objective_log:
            fit = matrix_beta_div(V, W, H, 1)
            penalty = mu * float(H.sum())
            value = ObjectiveValue(total=fit + penalty, fit=fit, volume=penalty)
        else:
            value = None
        trace.record(value, gamma, backtracks, exhausted, H)
    return FactorPair(W=W, H=H), trace


def solve(V, config):
    """Dispatch to the solver selected by ``config.variant`` and ``config.beta``."""
    if config.variant == "minvol":
        if config.beta == 1:
            return solve_minvol_kl(V, config)
        if config.beta == 0:
            return solve_minvol_is(V, config)
        raise ValueError("minvol supports beta in {0, 1}")
    if config.variant == "baseline":
        return solve_baseline(V, config)
    if config.variant == "sparse":
        return solve_sparse_kl(V, config)
    raise ValueError(f"unknown variant {config.variant!r}")
