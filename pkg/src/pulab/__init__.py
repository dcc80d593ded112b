"""Exact and Monte Carlo tools for PU-learning sample complexity."""

from .concept_core import (
    ConceptClass,
    DomainError,
    claw_number_certified,
    intersection_closure,
    symmetric_difference_class,
    vc_dimension,
)
from .dist_core import (
    LabeledDiscreteDistribution,
    MarginalDistribution,
    Sample,
    b_distance,
    derive_views,
    draw,
    error_metrics,
    is_eps_net,
    source_metrics,
    weight_ratio,
)
from .rng import DEFAULT_SEED, derive_seed

__version__ = "0.1.0"

__all__ = [
    "ConceptClass",
    "DomainError",
    "claw_number_certified",
    "intersection_closure",
    "symmetric_difference_class",
    "vc_dimension",
    "LabeledDiscreteDistribution",
    "MarginalDistribution",
    "Sample",
    "b_distance",
    "derive_views",
    "draw",
    "error_metrics",
    "is_eps_net",
    "source_metrics",
    "weight_ratio",
    "DEFAULT_SEED",
    "derive_seed",
]
