"""
Experiment State Definition
State carried through the cross-validation graph
"""
from datetime import datetime
from typing import Any, Dict, List, Optional, TypedDict

from dataeval.config import ExperimentConfig
from dataeval.folds import FoldPlan
from dataeval.loader import AlignedFace, PatchDataset
from dataeval.metrics import ConfusionMatrix
from model.mfp import MFPModel


class ExperimentState(TypedDict):
    """Core state that flows through the experiment graph"""

    # Input
    config: ExperimentConfig
    manifest_path: str
    out_dir: str

    # Prepared once
    seeds: Dict[str, int]
    classes: List[str]
    faces: List[AlignedFace]
    dataset: Optional[PatchDataset]
    fold_plan: Optional[FoldPlan]

    # Current fold
    current_fold: int
    fold_train: Optional[PatchDataset]
    fold_test: Optional[PatchDataset]
    fold_model: Optional[MFPModel]
    fold_history: List[Dict[str, float]]
    fold_provenance: Dict[str, Any]

    # Results
    fold_results: List[Dict[str, Any]]
    confusions: List[ConfusionMatrix]
    provenance: List[Dict[str, Any]]
    summary: Dict[str, Any]

    # Observability
    execution_log: List[Dict[str, Any]]
    start_time: datetime
    end_time: Optional[datetime]
    status: str
