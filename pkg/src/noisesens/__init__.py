"""Noise sensitivity of top eigenvectors of Wigner and sparse Erdos-Renyi matrices."""

from ._backend import BACKEND
from .models import ModelKind, ModelSpec, RandomSource, SymMatrix, control_parameter, sample, zeta
from .resampling import PairSet, PermutationChain, resample, sample_pair_set, single_entry_replace
from .spectral import EigenConvergenceError, EigenSystem, eigendecompose, eigenvalues, semicircle_table
from .harness import ExperimentConfig, derive_seed, regime, run_trials

__all__ = [
    "BACKEND",
    "EigenConvergenceError",
    "EigenSystem",
    "ExperimentConfig",
    "ModelKind",
    "ModelSpec",
    "PairSet",
    "PermutationChain",
    "RandomSource",
    "SymMatrix",
    "control_parameter",
    "derive_seed",
    "eigendecompose",
    "eigenvalues",
    "regime",
    "resample",
    "run_trials",
    "sample",
    "sample_pair_set",
    "semicircle_table",
    "single_entry_replace",
    "zeta",
]
