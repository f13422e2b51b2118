"""ampdx: sparse Bayesian inference and benchmarking for binary symptom checkers.

The package estimates a sparse disease vector from binary (present/absent)
symptom reports through a knowledge matrix of elicited symptom-disease links.
The main engine is an expectation-propagation message-passing solver that
alternates a sparsity-aware prior denoiser, a 1-bit sign-channel denoiser and
a joint linear-MMSE block; least-squares, ADMM-lasso and exhaustive
support-scan baselines plus an NRMSE/top-K benchmark harness ship alongside.
"""

__version__ = "0.1.0"

from .model import (
    AbsenceMode,
    AmpdxError,
    Catalog,
    DataError,
    KnowledgeMatrix,
    NoiseModel,
    NumericalError,
    SymptomObservation,
    Vignette,
    encode_observation,
    load_catalog,
    load_demo,
    load_knowledge_matrix,
    load_vignettes,
    snr_to_noise_precision,
)
from .denoisers import ChannelModel, DenoiseResult, PriorModel
from .gvamp import EPMessage, GvampConfig, GvampOutput, run_gvamp
from .baselines import AdmmConfig, SparseScanConfig, solve_admm, solve_sparse_scan, solve_uls
from .evaluation import GeneratorConfig, generate_synthetic, nrmse, run_benchmark, topk_accuracy

__all__ = [
    "AbsenceMode",
    "AdmmConfig",
    "AmpdxError",
    "Catalog",
    "ChannelModel",
    "DataError",
    "DenoiseResult",
    "EPMessage",
    "GeneratorConfig",
    "GvampConfig",
    "GvampOutput",
    "KnowledgeMatrix",
    "NoiseModel",
    "NumericalError",
    "PriorModel",
    "SparseScanConfig",
    "SymptomObservation",
    "Vignette",
    "encode_observation",
    "generate_synthetic",
    "load_catalog",
    "load_demo",
    "load_knowledge_matrix",
    "load_vignettes",
    "nrmse",
    "run_benchmark",
    "run_gvamp",
    "snr_to_noise_precision",
    "solve_admm",
    "solve_sparse_scan",
    "solve_uls",
    "topk_accuracy",
    "__version__",
]
