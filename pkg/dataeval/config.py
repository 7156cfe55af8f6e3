"""
Experiment configuration
The four augmentation modes mirror the experiment matrix: none, cgan, tf, both.
"""
from typing import Dict, List, Literal, Optional

import numpy as np
from pydantic import BaseModel, Field

from augment.transforms import DEFAULT_PLAN
from augment.zca import DEFAULT_EPSILON
from cgan.losses import CGANConfig
from dataeval.labeling import FramePolicy
from facegeom.align import AlignmentSpec
from facegeom.patches import PatchGeometry
from model.mfp import ModelConfig
from model.trainer import TrainingConfig

SEED_STREAMS = ("folds", "init", "dropout", "augmentation", "gan")


class ExperimentConfig(BaseModel):
    augmentation: Literal["none", "cgan", "tf", "both"] = "none"
    folds: int = Field(default=10, ge=2)
    seed: int = 0
    model: ModelConfig = Field(default_factory=ModelConfig)
    training: TrainingConfig = Field(default_factory=TrainingConfig)
    alignment: AlignmentSpec = Field(default_factory=AlignmentSpec)
    patches: PatchGeometry = Field(default_factory=PatchGeometry)
    cgan: CGANConfig = Field(default_factory=CGANConfig)
    tf_plan: List[str] = Field(default_factory=lambda: list(DEFAULT_PLAN))
    zca_epsilon: float = Field(default=DEFAULT_EPSILON, gt=0.0)
    labeling: Optional[FramePolicy] = None
    fine_tune_fraction: Optional[float] = Field(default=None, gt=0.0, lt=1.0)
    threads: int = Field(default=1, ge=1)

    @property
    def uses_tf(self) -> bool:
        return self.augmentation in ("tf", "both")

    @property
    def uses_cgan(self) -> bool:
        return self.augmentation in ("cgan", "both")


def derive_seeds(seed: int) -> Dict[str, int]:
    """Named sub-seeds, all drawn from the single experiment seed"""
    return {
        name: int(np.random.default_rng([seed, i]).integers(0, 2**31 - 1))
        for i, name in enumerate(SEED_STREAMS)
    }
