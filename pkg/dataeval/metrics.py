"""
Confusion matrices and accuracy
Rows are true classes, columns predicted classes.
"""
from dataclasses import dataclass
from pathlib import Path
from typing import List, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from config.logging import get_logger
from dataeval.loader import PatchDataset
from errors import ConfigurationError, ShapeError
from model.mfp import MFPModel
from model.trainer import predict_batch

logger = get_logger(__name__)


@dataclass
class ConfusionMatrix:
    counts: np.ndarray
    classes: List[str]

    def __post_init__(self):
        self.counts = np.asarray(self.counts, dtype=np.int64)
        k = len(self.classes)
        if self.counts.shape != (k, k):
            raise ShapeError(f"confusion counts {self.counts.shape} do not match {k} classes")
        if np.any(self.counts < 0):
            raise ValueError("confusion counts must be non-negative")

    @classmethod
    def from_predictions(cls, true: Sequence[int], predicted: Sequence[int], classes: Sequence[str]) -> "ConfusionMatrix":
        k = len(classes)
        counts = np.zeros((k, k), dtype=np.int64)
        np.add.at(counts, (np.asarray(true, dtype=np.int64), np.asarray(predicted, dtype=np.int64)), 1)
        return cls(counts, list(classes))

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    @property
    def accuracy(self) -> float:
        return float(np.trace(self.counts) / self.total) if self.total else 0.0

    def row_percentages(self) -> np.ndarray:
        rows = self.counts.sum(axis=1, keepdims=True)
        return np.divide(100.0 * self.counts, rows, out=np.zeros(self.counts.shape), where=rows > 0)

    def __add__(self, other: "ConfusionMatrix") -> "ConfusionMatrix":
        if list(other.classes) != list(self.classes):
            raise ShapeError("cannot add confusion matrices over different class sets")
        return ConfusionMatrix(self.counts + other.counts, list(self.classes))

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.counts, index=pd.Index(self.classes, name="true"), columns=self.classes)

    def save_csv(self, path: Union[str, Path]) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        self.to_frame().to_csv(path)
        return path

    @classmethod
    def load_csv(cls, path: Union[str, Path]) -> "ConfusionMatrix":
        frame = pd.read_csv(path, index_col=0)
        if list(frame.index.astype(str)) != list(frame.columns):
            raise ShapeError(f"{path}: row and column class names differ")
        return cls(frame.to_numpy(dtype=np.int64), list(frame.columns))


def evaluate(model: MFPModel, dataset: PatchDataset) -> Tuple[ConfusionMatrix, float]:
    if len(dataset) == 0:
        raise ValueError("cannot evaluate on an empty test set")
    if model.config.num_classes != len(dataset.classes):
        raise ConfigurationError(
            f"model has {model.config.num_classes} classes, test set has {len(dataset.classes)}"
        )
    predicted, _ = predict_batch(model, dataset.patches)
    cm = ConfusionMatrix.from_predictions(dataset.labels, predicted, dataset.classes)
    return cm, cm.accuracy


def remap_to_model_classes(dataset: PatchDataset, model_classes: Sequence[str]) -> PatchDataset:
    """Relabel by class name; dataset classes unknown to the model are rejected"""
    model_classes = list(model_classes)
    used = sorted({dataset.classes[i] for i in np.unique(dataset.labels)})
    unknown = [name for name in used if name not in model_classes]
    if unknown:
        raise ConfigurationError(
            f"classes {unknown} are not known to the model; allowed: {', '.join(model_classes)}"
        )
    lookup = np.array([model_classes.index(n) if n in model_classes else -1 for n in dataset.classes])
    return PatchDataset(
        patches=dataset.patches,
        labels=lookup[dataset.labels],
        classes=model_classes,
        subjects=list(dataset.subjects),
        tags=list(dataset.tags),
    )


def cross_evaluate(
    model: MFPModel, model_classes: Sequence[str], dataset: PatchDataset
) -> Tuple[ConfusionMatrix, float]:
    """Evaluate on another dataset; confusion is over the model's class set"""
    cm, accuracy = evaluate(model, remap_to_model_classes(dataset, model_classes))
    logger.info("cross_dataset_evaluated", samples=cm.total, accuracy=accuracy)
    return cm, accuracy
