"""Forward and inverse spectral problem for the Prony-series extended Burgers model."""

from .errors import EbmError, ValidationError
from .harness import ExperimentConfig, run_experiment
from .inversion import MeasuredCluster, ReconstructionResult, invert
from .noise import NoiseSpec, perturb_cluster
from .relaxation import EbmModel, PronySeries, StretchedExponential, reference_model
from .spectral import Cluster, compute_cluster

__all__ = [
    "Cluster",
    "EbmError",
    "EbmModel",
    "ExperimentConfig",
    "MeasuredCluster",
    "NoiseSpec",
    "PronySeries",
    "ReconstructionResult",
    "StretchedExponential",
    "ValidationError",
    "compute_cluster",
    "invert",
    "reference_model",
    "perturb_cluster",
    "run_experiment",
]
