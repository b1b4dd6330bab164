"""Shared synthetic fixtures: tone mixtures and factorable test matrices."""

import numpy as np
import pytest

from minvolnmf.signal_io import TimeSignal, mix
from minvolnmf.tf_transform import WindowSpec


def ramp_gate(t, lo, hi, ramp=0.01):
    """1 on [lo, hi), cosine ramps of `ramp` seconds on both edges."""
    g = np.zeros_like(t)
    g[(t >= lo) & (t < hi)] = 1.0
    rise = (t >= lo - ramp) & (t < lo)
    g[rise] = 0.5 - 0.5 * np.cos(np.pi * (t[rise] - (lo - ramp)) / ramp)
    fall = (t >= hi) & (t < hi + ramp)
    g[fall] = 0.5 + 0.5 * np.cos(np.pi * (t[fall] - hi) / ramp)
    return g


def _envelopes(t):
    # co-active most of the time, each source gets a short solo window
    base = 0.55 + 0.45 * np.sin(2 * np.pi * 1.3 * t + 0.4) ** 2
    env_a = base * (1.0 - ramp_gate(t, 1.70, 1.90))
    env_b = base * (0.8 + 0.2 * np.sin(2 * np.pi * 0.9 * t + 1.0))
    env_b = env_b * (1.0 - ramp_gate(t, 0.00, 0.20))
    return env_a, env_b


def bandpass_noise(rng, n, sample_rate, lo, hi, level):
    spec = np.fft.rfft(rng.standard_normal(n))
    freqs = np.fft.rfftfreq(n, 1.0 / sample_rate)
    spec[(freqs < lo) | (freqs > hi)] = 0.0
    x = np.fft.irfft(spec, n=n)
    return level * x / np.abs(x).max()


def two_tone_stems(sample_rate=16000, duration=2.0):
    """Clean disjoint-band stems: 440 Hz and 2500 Hz tones with scattered
    envelopes (each tone appears alone somewhere)."""
    t = np.arange(int(sample_rate * duration)) / sample_rate
    env_a, env_b = _envelopes(t)
    a = 0.5 * env_a * np.sin(2 * np.pi * 440.0 * t)
    b = 0.35 * env_b * np.sin(2 * np.pi * 2500.0 * t)
    return TimeSignal(a, sample_rate), TimeSignal(b, sample_rate)


def noisy_tone_stems(sample_rate=16000, duration=2.0, noise_level=0.04, noise_seed=123):
    """Same tones with an in-band noise floor per stem (bands stay disjoint);
    the noise keeps the spectrogram from being exactly low-rank, like real
    recordings."""
    rng = np.random.default_rng(noise_seed)
    n = int(sample_rate * duration)
    t = np.arange(n) / sample_rate
    env_a, env_b = _envelopes(t)
    a = env_a * (0.5 * np.sin(2 * np.pi * 440.0 * t)
                 + bandpass_noise(rng, n, sample_rate, 250, 1200, noise_level))
    b = env_b * (0.35 * np.sin(2 * np.pi * 2500.0 * t)
                 + bandpass_noise(rng, n, sample_rate, 2000, 3200, noise_level))
    return TimeSignal(a, sample_rate), TimeSignal(b, sample_rate)


def sparse_dictionary_instance(n_rows, n_cols, rank, seed, act_sparsity=0.8, bins=6):
    """Factorable matrix whose true dictionary columns are sparse harmonic
    combs and whose activations are sparse with a separable block; the
    shape rank-overestimated solvers see in practice."""
    rng = np.random.default_rng(seed)
    W = np.zeros((n_rows, rank))
    for k in range(rank):
        f0 = (k + 1) * n_rows // (rank + 2) + rng.integers(0, 3)
        comb = [f0 + j for j in range(bins) if f0 + j < n_rows]
        W[comb, k] = rng.random(len(comb)) + 0.5
    W /= W.sum(axis=0, keepdims=True)
    H = rng.random((rank, n_cols))
    H[rng.random(H.shape) < act_sparsity] = 0.0
    H[:, :rank] += 0.8 * np.eye(rank)
    return W @ H, W, H


@pytest.fixture(scope="session")
def analysis_window():
    return WindowSpec(window_size=1024, hop=512, window_kind="hamming")


@pytest.fixture(scope="session")
def clean_mixture_and_stems():
    sa, sb = two_tone_stems()
    return mix([sa, sb]), [sa, sb]


@pytest.fixture(scope="session")
def noisy_mixture_and_stems():
    sa, sb = noisy_tone_stems()
    return mix([sa, sb]), [sa, sb]
