"""Short-time Fourier transform, its normalized inverse, and amplitudes."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .signal_io import TimeSignal

WINDOW_KINDS = ("hamming", "hann", "rectangular")

# Overlap-added squared-window sums below this are treated as uncovered.
_OLA_FLOOR = 1e-12


@dataclass(frozen=True)
class WindowSpec:
    """Analysis window: size (power of two), hop, and window shape."""

    window_size: int = 1024
    hop: int = 512
    window_kind: str = "hamming"

    def __post_init__(self):
        size = self.window_size
        if size < 1 or (size & (size - 1)) != 0:
            raise ValueError("window_size must be a positive power of two")
        if not 0 < self.hop <= size:
            raise ValueError("hop must lie in (0, window_size]")
        if self.window_kind not in WINDOW_KINDS:
            raise ValueError(f"window_kind must be one of {WINDOW_KINDS}")

    @property
    def overlap(self):
        return self.window_size - self.hop

    def samples(self):
        """Window taper, periodic (DFT-even) so bin-centered tones stay clean."""
        n = np.arange(self.window_size)
        if self.window_kind == "hamming":
            return 0.54 - 0.46 * np.cos(2.0 * np.pi * n / self.window_size)
        if self.window_kind == "hann":
            return 0.5 - 0.5 * np.cos(2.0 * np.pi * n / self.window_size)
        return np.ones(self.window_size)


@dataclass
class Spectrogram:
    """Complex bins x frames matrix plus the geometry that produced it."""

    values: np.ndarray
    spec: WindowSpec
    original_length: int
    sample_rate: float

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=complex)
        expected_bins = self.spec.window_size // 2 + 1
        if self.values.ndim != 2 or self.values.shape[0] != expected_bins:
            raise ValueError(f"values must have {expected_bins} frequency bins")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("spectrogram entries must be finite")

    @property
    def n_bins(self):
        return self.values.shape[0]

    @property
    def n_frames(self):
        return self.values.shape[1]


def _frame_count(n_samples, size, hop):
    if n_samples <= size:
        return 1
    return int(np.ceil((n_samples - size) / hop)) + 1


def stft(signal: TimeSignal, spec: WindowSpec) -> Spectrogram:
    """Windowed, hopped DFT; frame n covers samples [n*hop, n*hop + size).

    The tail is zero-padded so the final partial frame is kept.  Only bins
    0..size/2 are stored (real input, conjugate symmetry).
    """
    x = signal.samples
    size, hop = spec.window_size, spec.hop
    n_frames = _frame_count(x.size, size, hop)
    padded = np.zeros((n_frames - 1) * hop + size)
    padded[: x.size] = x
    idx = np.arange(size)[:, None] + hop * np.arange(n_frames)[None, :]
    frames = padded[idx] * spec.samples()[:, None]
    return Spectrogram(
        values=np.fft.rfft(frames, axis=0),
        spec=spec,
        original_length=x.size,
        sample_rate=signal.sample_rate,
    )


def istft(spectro: Spectrogram) -> TimeSignal:
    """Least-squares inverse: windowed overlap-add over the squared-window sum.

    Exact round trip (up to rounding) wherever the overlap-added squared
    window is nonzero, for any window and hop; the result is truncated to
    the original signal length.
    """
    size, hop = spectro.spec.window_size, spectro.spec.hop
    window = spectro.spec.samples()
    frames = np.fft.irfft(spectro.values, n=size, axis=0)
    n_frames = spectro.n_frames
    total = (n_frames - 1) * hop + size
    numer = np.zeros(total)
    denom = np.zeros(total)
    for j in range(n_frames):
        sl = slice(j * hop, j * hop + size)
        numer[sl] += window * frames[:, j]
        denom[sl] += window * window
    samples = numer / np.maximum(denom, _OLA_FLOOR)
    return TimeSignal(samples=samples[: spectro.original_length], sample_rate=spectro.sample_rate)


def amplitude(spectro: Spectrogram) -> np.ndarray:
    """Element-wise modulus of the spectrogram (the matrix handed to solvers)."""
    return np.abs(spectro.values)
