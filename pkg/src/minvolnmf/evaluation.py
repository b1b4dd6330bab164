"""Separation quality metrics, factor matching, and synthetic test instances."""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .signal_io import TimeSignal

DB_CAP = 200.0
_EXHAUSTIVE_LIMIT = 8
_TINY = 1e-300


@dataclass(frozen=True)
class BssMetrics:
    """Per-source SDR/SIR/SAR in dB under the best estimate-reference pairing.

    ``permutation[i]`` is the reference index matched to estimate i.  Values
    are capped at +/-200 dB so degenerate decompositions stay finite.
    """

    sdr: np.ndarray
    sir: np.ndarray
    sar: np.ndarray
    permutation: tuple


def _capped_db(num, den):
    if den <= _TINY:
        return DB_CAP if num > _TINY else 0.0
    if num <= _TINY:
        return -DB_CAP
    return float(np.clip(10.0 * np.log10(num / den), -DB_CAP, DB_CAP))


def _best_assignment(score, maximize):
    """Permutation of columns optimizing the total score; exhaustive for
    small sizes, greedy beyond ``_EXHAUSTIVE_LIMIT``."""
    k = score.shape[0]
    sign = 1.0 if maximize else -1.0
    if k <= _EXHAUSTIVE_LIMIT:
        best, best_total = None, -np.inf
        for perm in itertools.permutations(range(k)):
            total = sign * sum(score[i, perm[i]] for i in range(k))
            if total > best_total:
                best, best_total = perm, total
        return tuple(best)
    perm = [-1] * k
    free = set(range(k))
    for i in range(k):
        j = max(free, key=lambda c: sign * score[i, c])
        perm[i] = j
        free.remove(j)
    return tuple(perm)


def bss_eval(estimates, references) -> BssMetrics:
    """Decompose each estimate against the span of the reference sources.

    For estimate e matched to reference r: the target part is the projection
    of e onto r; interference is the rest of e's projection onto the span of
    all references; artifacts are what is left.  SDR/SIR/SAR are the usual
    energy ratios of those parts, and the pairing maximizes total SDR.
    """
    estimates = list(estimates)
    references = list(references)
    if len(estimates) != len(references):
        raise ValueError("estimates and references must have the same count")
    if not references:
        raise ValueError("bss_eval needs at least one source")
    n = len(references[0])
    for sig in estimates + references:
        if len(sig) != n:
            raise ValueError("all signals must have the same length")

    R = np.stack([r.samples for r in references])
    E = np.stack([e.samples for e in estimates])
    ref_energy = np.sum(R * R, axis=1)
    dead = np.nonzero(ref_energy <= _TINY)[0]
    if dead.size:
        raise ValueError(f"degenerate (zero) reference source(s) at index {dead.tolist()}")
    gram = R @ R.T
    try:
        chol = cho_factor(gram)
    except np.linalg.LinAlgError as exc:
        raise ValueError(f"references must be linearly independent: {exc}") from exc

    k = len(references)
    sdr = np.empty((k, k))
    sir = np.empty((k, k))
    sar = np.empty((k, k))
    for i in range(k):
        e = E[i]
        span_proj = R.T @ cho_solve(chol, R @ e)
        e_artif = e - span_proj
        artif_energy = float(e_artif @ e_artif)
        span_energy = float(span_proj @ span_proj)
        for j in range(k):
            s_target = (float(e @ R[j]) / ref_energy[j]) * R[j]
            e_interf = span_proj - s_target
            target_energy = float(s_target @ s_target)
            interf_energy = float(e_interf @ e_interf)
            sdr[i, j] = _capped_db(target_energy, interf_energy + artif_energy)
            sir[i, j] = _capped_db(target_energy, interf_energy)
            # s_target + e_interf is exactly the span projection
            sar[i, j] = _capped_db(span_energy, artif_energy)
    perm = _best_assignment(sdr, maximize=True)
    pick = np.arange(k), np.array(perm)
    return BssMetrics(sdr=sdr[pick], sir=sir[pick], sar=sar[pick], permutation=perm)


def match_factors(W_est, W_true):
    """Best column pairing of two simplex-normalized dictionaries.

    Returns (permutation, relative_error): ``permutation[k]`` is the
    estimated column matched to true column k, and the error is the summed
    l1 column distance divided by the rank (each true column has unit l1
    norm on the simplex).
    """
    W_est = np.asarray(W_est, dtype=float)
    W_true = np.asarray(W_true, dtype=float)
    if W_est.shape != W_true.shape:
        raise ValueError("dictionaries must have identical shapes")
    rank = W_true.shape[1]
    # cost[j, k] = l1 distance between estimated column j and true column k
    cost = np.abs(W_est[:, :, None] - W_true[:, None, :]).sum(axis=0)
    perm = _best_assignment(cost.T, maximize=False)  # row k -> estimated column
    total = sum(cost[perm[k], k] for k in range(rank))
    return tuple(perm), float(total) / rank


@dataclass(frozen=True)
class SyntheticInstance:
    """Exactly factorable data with the activations scattered enough to be
    identifiable: H embeds a scaled identity block, so for every source some
    column contains that source alone."""

    V: np.ndarray
    W_true: np.ndarray
    H_true: np.ndarray


def synth_scattered_instance(n_rows, n_cols, rank, seed, noise_level=0.0):
    """Random identifiable instance V = W_true H_true (plus optional noise).

    W_true is uniform with simplex-normalized columns (regenerated until
    clearly full rank); H_true is a column permutation of [c*I, G] with G
    uniform and 60% of its entries zeroed, c the mean column sum of G.
    ``noise_level`` adds nonnegative uniform noise at that relative
    Frobenius level.
    """
    if n_cols < 5 * rank:
        raise ValueError("n_cols must be at least 5 * rank")
    if n_rows < rank:
        raise ValueError("n_rows must be at least rank")
    rng = np.random.default_rng(seed)
    for _ in range(10):
        W = 1.0 - rng.random((n_rows, rank))
        W = W / W.sum(axis=0, keepdims=True)
        G = rng.random((rank, n_cols - rank))
        G[rng.random(G.shape) < 0.6] = 0.0
        c = float(G.sum(axis=0).mean())
        if c <= 0.0 or np.linalg.svd(W, compute_uv=False)[-1] <= 1e-8:
            continue
        H = np.concatenate([c * np.eye(rank), G], axis=1)
        H = H[:, rng.permutation(n_cols)]
        V = W @ H
        if noise_level > 0.0:
            noise = rng.random(V.shape)
            V = V + noise_level * (np.linalg.norm(V) / np.linalg.norm(noise)) * noise
        if np.linalg.svd(V, compute_uv=False)[rank - 1] > 1e-8:
            return SyntheticInstance(V=V, W_true=W, H_true=H)
    raise RuntimeError("failed to draw a full-rank instance in 10 attempts")


def count_zero_sources(H, rel_threshold=1e-6):
    """Indices of activation rows whose peak is below rel_threshold * max(H)."""
    H = np.asarray(H, dtype=float)
    if np.any(H < 0.0):
        raise ValueError("H must be nonnegative")
    return np.nonzero(H.max(axis=1) < rel_threshold * H.max())[0].tolist()
