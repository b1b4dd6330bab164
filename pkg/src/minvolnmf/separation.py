"""End-to-end pipeline: spectrogram, factorization, masking, reconstruction."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .evaluation import count_zero_sources
from .signal_io import TimeSignal, mix
from .solvers import FactorPair, IterationTrace, SolverConfig, solve
from .tf_transform import Spectrogram, WindowSpec, amplitude, istft, stft

# Mask denominators below this are split uniformly across sources.
_SILENT_BIN = 1e-12


@dataclass
class SeparationResult:
    """Separated sources plus everything needed to audit the run."""

    sources: list
    masks: np.ndarray
    factors: FactorPair
    trace: IterationTrace
    zeroed_sources: list

    def grouped_sources(self, groups):
        """Sum selected sources, e.g. to merge rank-one factors of one
        instrument: ``grouped_sources([[0, 2], [1]])``."""
        return [mix([self.sources[i] for i in group]) for group in groups]


def compute_masks(W, H) -> np.ndarray:
    """Per-source ratio masks, shape (rank, n_bins, n_frames).

    mask_k = (W[:, k] H[k, :]) / (W H) elementwise; masks are in [0, 1] and
    sum to one.  Bins where WH is numerically silent get a uniform 1/rank
    split, which keeps the masks energy-conserving and symmetric.
    """
    W = np.asarray(W, dtype=float)
    H = np.asarray(H, dtype=float)
    if np.any(W < 0.0) or np.any(H < 0.0):
        raise ValueError("W and H must be nonnegative")
    parts = W.T[:, :, None] * H[:, None, :]
    total = parts.sum(axis=0)
    rank = W.shape[1]
    return np.where(total < _SILENT_BIN, 1.0 / rank, parts / np.maximum(total, _SILENT_BIN))


def reconstruct_sources(mixture_spectro: Spectrogram, masks) -> list:
    """Apply each mask to the mixture spectrogram (keeping the mixture phase)
    and invert back to the time domain."""
    masks = np.asarray(masks, dtype=float)
    if masks.ndim != 3 or masks.shape[1:] != mixture_spectro.values.shape:
        raise ValueError(
            f"masks of shape {masks.shape} do not match spectrogram "
            f"{mixture_spectro.values.shape}"
        )
    sources = []
    for mask in masks:
        masked = Spectrogram(
            values=mask * mixture_spectro.values,
            spec=mixture_spectro.spec,
            original_length=mixture_spectro.original_length,
            sample_rate=mixture_spectro.sample_rate,
        )
        sources.append(istft(masked))
    return sources


def separate(mixture: TimeSignal, window: WindowSpec, config: SolverConfig) -> SeparationResult:
    """Factorize the mixture's amplitude spectrogram and rebuild each source."""
    if len(mixture) < window.window_size:
        raise ValueError("mixture must be at least one analysis window long")
    spectro = stft(mixture, window)
    V = amplitude(spectro)
    factors, trace = solve(V, config)
    if any(trace.exhausted):
        warnings.warn(
            "line search hit the backtrack cap on some iterations; "
            "the previous dictionary was kept there",
            RuntimeWarning,
        )
    masks = compute_masks(factors.W, factors.H)
    sources = reconstruct_sources(spectro, masks)
    return SeparationResult(
        sources=sources,
        masks=masks,
        factors=factors,
        trace=trace,
        zeroed_sources=count_zero_sources(factors.H),
    )
