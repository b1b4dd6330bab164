"""Volume-regularized beta-divergence NMF for single-channel source separation."""

from .divergences import (
    ObjectiveValue,
    beta_div,
    decomposition_parts,
    logdet_volume,
    matrix_beta_div,
    objective,
)
from .evaluation import (
    BssMetrics,
    SyntheticInstance,
    bss_eval,
    count_zero_sources,
    match_factors,
    synth_scattered_instance,
)
from .separation import SeparationResult, compute_masks, reconstruct_sources, separate
from .signal_io import TimeSignal, mix, read_wav, resample, write_wav
from .solvers import (
    FactorPair,
    GramInverse,
    IterationTrace,
    SolverConfig,
    init_factors,
    solve,
    solve_baseline,
    solve_minvol_is,
    solve_minvol_kl,
    solve_sparse_kl,
)
from .tf_transform import Spectrogram, WindowSpec, amplitude, istft, stft

__version__ = "0.1.0"

__all__ = [
    "BssMetrics",
    "FactorPair",
    "GramInverse",
    "IterationTrace",
    "ObjectiveValue",
    "SeparationResult",
    "SolverConfig",
    "Spectrogram",
    "SyntheticInstance",
    "TimeSignal",
    "WindowSpec",
    "amplitude",
    "beta_div",
    "bss_eval",
    "compute_masks",
    "count_zero_sources",
    "decomposition_parts",
    "init_factors",
    "istft",
    "logdet_volume",
    "match_factors",
    "matrix_beta_div",
    "mix",
    "objective",
    "read_wav",
    "reconstruct_sources",
    "resample",
    "separate",
    "solve",
    "solve_baseline",
    "solve_minvol_is",
    "solve_minvol_kl",
    "solve_sparse_kl",
    "stft",
    "synth_scattered_instance",
    "write_wav",
]
