"""WAV reading/writing, mixing and resampling for mono experiment audio."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.io import wavfile


@dataclass
class TimeSignal:
    """Mono audio: float samples (nominally in [-1, 1]) plus a sample rate."""

    samples: np.ndarray
    sample_rate: float

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=float).reshape(-1)
        if self.samples.size < 1:
            raise ValueError("a signal needs at least one sample")
        if not np.all(np.isfinite(self.samples)):
            raise ValueError("signal samples must be finite")
        if self.sample_rate <= 0:
            raise ValueError("sample_rate must be positive")

    def __len__(self):
        return self.samples.size

    @property
    def duration(self):
        return self.samples.size / self.sample_rate


_INT_SCALES = {
    np.dtype(np.uint8): (128.0, 128.0),   # stored offset-binary
    np.dtype(np.int16): (0.0, 32768.0),
    np.dtype(np.int32): (0.0, 2147483648.0),  # 24-bit payloads arrive shifted into int32
}


def read_wav(path) -> TimeSignal:
    """Read a PCM WAV file as a mono TimeSignal scaled to [-1, 1).

    Integer formats (8/16/24-bit) are rescaled by their full-scale code;
    float files pass through.  Stereo is averaged channel-wise.
    """
    try:
        rate, data = wavfile.read(path)
    except FileNotFoundError:
        raise
    except Exception as exc:
        raise ValueError(f"cannot read WAV file {path!r}: {exc}") from exc

    if data.ndim == 2 and data.shape[1] > 2:
        raise ValueError(f"{path!r} has {data.shape[1]} channels; expected mono or stereo")

    if data.dtype in _INT_SCALES:
        offset, scale = _INT_SCALES[data.dtype]
        samples = (data.astype(float) - offset) / scale
    elif data.dtype in (np.float32, np.float64):
        samples = data.astype(float)
    else:
        raise ValueError(f"{path!r}: unsupported WAV sample format {data.dtype}")

    if samples.ndim == 2:
        samples = samples.mean(axis=1)
    return TimeSignal(samples=samples, sample_rate=float(rate))


def write_wav(path, signal: TimeSignal):
    """Write 16-bit PCM mono; samples outside [-1, 1) are clipped, not errors."""
    codes = np.clip(np.round(signal.samples * 32768.0), -32768, 32767).astype(np.int16)
    wavfile.write(path, int(round(signal.sample_rate)), codes)


def mix(signals) -> TimeSignal:
    """Element-wise sum of equally long, equally sampled signals."""
    signals = list(signals)
    if not signals:
        raise ValueError("mix needs at least one signal")
    first = signals[0]
    for sig in signals[1:]:
        if len(sig) != len(first):
            raise ValueError("mix requires equal lengths")
        if sig.sample_rate != first.sample_rate:
            raise ValueError("mix requires equal sample rates")
    total = np.sum([sig.samples for sig in signals], axis=0)
    return TimeSignal(samples=total, sample_rate=first.sample_rate)


def resample(signal: TimeSignal, target_rate) -> TimeSignal:
    """Linear-interpolation resampling (no anti-alias filter).

    Output length is round(T * target / source); adequate at experiment
    scale, aliasing above target/2 is not suppressed.
    """
    if target_rate <= 0:
        raise ValueError("target_rate must be positive")
    if target_rate == signal.sample_rate:
        return TimeSignal(samples=signal.samples.copy(), sample_rate=signal.sample_rate)
    n_out = max(1, int(round(len(signal) * target_rate / signal.sample_rate)))
    t_out = np.arange(n_out) / target_rate
    t_in = np.arange(len(signal)) / signal.sample_rate
    return TimeSignal(samples=np.interp(t_out, t_in, signal.samples), sample_rate=float(target_rate))
