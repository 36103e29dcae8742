"""Feature selection on attributed networks guided by block models.

The pipeline: fit candidate block models on the structural graph
(:mod:`blockselect.blockmodel`), pick the one with the lowest relative
reconstruction error, then optimize a per-feature importance vector so the
induced similarity graph preserves the allocation and image matrix
(:mod:`blockselect.objective`, :mod:`blockselect.solver`).  Selected
features are scored by repeated K-means clustering
(:mod:`blockselect.evaluation`).
"""

from .blockmodel import (
    CandidateSet,
    OnmtfConfig,
    binarize_allocation,
    fit_onmtf,
    generate_candidates,
    perturb_allocation,
    select_best_rre,
)
from .core import (
    AttributedNetwork,
    BlockModel,
    FeatureScores,
    block_mean_features,
    cosine_distance,
    image_matrix_closed_form,
    induced_adjacency,
    induced_adjacency_operator,
    mhat_of_r,
    rre,
)
from .data import DatasetManifest, PlantedSpec, generate_planted, load_dataset, load_manifest
from .errors import (
    DegenerateStepError,
    EmptyBlockError,
    InsufficientSupportError,
    NonFiniteError,
    SolverError,
)
from .evaluation import EvaluationReport, accuracy, evaluate_selection, nmi
from .objective import ObjectiveContext, build_context, grad_b, grad_m, loss_b, loss_m
from .solver import ObjectiveTrace, SolverConfig, optimize, top_d_features

__version__ = "0.1.0"

__all__ = [
    "AttributedNetwork",
    "BlockModel",
    "CandidateSet",
    "DatasetManifest",
    "EvaluationReport",
    "FeatureScores",
    "ObjectiveContext",
    "ObjectiveTrace",
    "OnmtfConfig",
    "PlantedSpec",
    "SolverConfig",
    "accuracy",
    "binarize_allocation",
    "block_mean_features",
    "build_context",
    "cosine_distance",
    "evaluate_selection",
    "fit_onmtf",
    "generate_candidates",
    "generate_planted",
    "grad_b",
    "grad_m",
    "image_matrix_closed_form",
    "induced_adjacency",
    "induced_adjacency_operator",
    "load_dataset",
    "load_manifest",
    "loss_b",
    "loss_m",
    "mhat_of_r",
    "nmi",
    "optimize",
    "perturb_allocation",
    "rre",
    "select_best_rre",
    "top_d_features",
    "DegenerateStepError",
    "EmptyBlockError",
    "InsufficientSupportError",
    "NonFiniteError",
    "SolverError",
    "__version__",
]
