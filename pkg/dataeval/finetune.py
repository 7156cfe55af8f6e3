"""
Fine-tuning on a target dataset
Subjects are shuffled under the seed; the first round(fraction·n) tune, the rest test.
"""
from dataclasses import dataclass, field
from typing import Dict, List, Sequence, Tuple

import numpy as np

from config.logging import get_logger
from dataeval.loader import PatchDataset
from dataeval.metrics import ConfusionMatrix, evaluate, remap_to_model_classes
from errors import ConfigurationError, LeakageError
from model.mfp import MFPModel
from model.trainer import TrainingConfig, fit

logger = get_logger(__name__)


@dataclass
class FineTuneReport:
    pre_accuracy: float
    post_accuracy: float
    tune_subjects: List[str]
    test_subjects: List[str]
    confusion: ConfusionMatrix
    history: List[Dict[str, float]] = field(default_factory=list)

    @property
    def delta(self) -> float:
        return self.post_accuracy - self.pre_accuracy


def split_subjects(subjects: Sequence[str], fraction: float, seed: int) -> Tuple[List[str], List[str]]:
    if not 0.0 < fraction < 1.0:
        raise ConfigurationError(f"fine-tune fraction must lie in (0, 1), got {fraction}")
    unique = sorted(set(subjects))
    order = [unique[i] for i in np.random.default_rng(seed).permutation(len(unique))]
    n_tune = int(round(fraction * len(unique)))
    tune, test = sorted(order[:n_tune]), sorted(order[n_tune:])
    if not tune or not test:
        raise ConfigurationError(
            f"fraction {fraction} of {len(unique)} subjects leaves an empty "
            f"{'tuning' if not tune else 'test'} partition"
        )
    return tune, test


def fine_tune(
    model: MFPModel,
    model_classes: Sequence[str],
    target: PatchDataset,
    fraction: float = 0.8,
    epochs: int = 10,
    training: TrainingConfig = TrainingConfig(),
) -> Tuple[MFPModel, FineTuneReport]:
    """Continue training on the tuning subjects; report accuracy on the held-out ones before and after"""
    data = remap_to_model_classes(target, model_classes)
    tune_subjects, test_subjects = split_subjects(data.subjects, fraction, training.seed)
    if set(tune_subjects) & set(test_subjects):
        raise LeakageError("fine-tune partitions share subjects")
    tune_set, test_set = data.subset(tune_subjects), data.subset(test_subjects)

    _, pre = evaluate(model, test_set)
    history = fit(model, tune_set.patches, tune_set.labels, training.model_copy(update={"epochs": epochs}))
    confusion, post = evaluate(model, test_set)
    logger.info("fine_tune_completed", pre_accuracy=pre, post_accuracy=post,
                tune_subjects=len(tune_subjects), test_subjects=len(test_subjects), epochs=epochs)
    return model, FineTuneReport(
        pre_accuracy=pre,
        post_accuracy=post,
        tune_subjects=tune_subjects,
        test_subjects=test_subjects,
        confusion=confusion,
        history=history,
    )
