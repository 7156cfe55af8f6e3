"""
augment
Label-preserving patch transformations and dataset expansion
"""
from augment.expand import AugmentedSet, expand_dataset, resolve_plan
from augment.transforms import (
    DEFAULT_PLAN,
    CircularShift,
    Rotate90,
    Rotate180,
    TransformationFunction,
    Translate,
    ZCAWhiten,
    apply_tf,
    parse_tf,
)
from augment.zca import ZCAStatistics, fit_region_zca, fit_zca, whiten

__all__ = [
    "AugmentedSet",
    "CircularShift",
    "DEFAULT_PLAN",
    "Rotate90",
    "Rotate180",
    "TransformationFunction",
    "Translate",
    "ZCAStatistics",
    "ZCAWhiten",
    "apply_tf",
    "expand_dataset",
    "fit_region_zca",
    "fit_zca",
    "parse_tf",
    "resolve_plan",
    "whiten",
]
