"""
Mini-batch training, batch inference and model bundles
"""
import json
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from pydantic import BaseModel, Field

from config.logging import get_logger
from errors import CheckpointError, ShapeError
from model.mfp import MFPModel, ModelConfig, train_step
from numcore.checkpoint import load_checkpoint, save_checkpoint
from numcore.optim import RMSProp

logger = get_logger(__name__)

CHECKPOINT_NAME = "model.ckpt"
SIDECAR_NAME = "model.json"


class TrainingConfig(BaseModel):
    epochs: int = Field(default=30, ge=0)
    batch_size: int = Field(default=16, ge=1)
    learning_rate: float = Field(default=1e-3, ge=0.0)
    seed: int = 0


def predict_batch(model: MFPModel, patches: np.ndarray, batch_size: int = 64) -> Tuple[np.ndarray, np.ndarray]:
    """Predicted classes (lowest index on ties) and N×K probabilities"""
    data = np.asarray(patches, dtype=np.float64)
    if data.ndim != 4:
        raise ShapeError(f"predict_batch expects N×7×P×P patches, got {data.shape}")
    chunks = [
        model.forward(data[start:start + batch_size], training=False).numpy()
        for start in range(0, data.shape[0], batch_size)
    ]
    probs = np.concatenate(chunks, axis=0) if chunks else np.zeros((0, model.config.num_classes))
    return probs.argmax(axis=1), probs


def fit(
    model: MFPModel,
    patches: np.ndarray,
    labels: Sequence[int],
    config: TrainingConfig = TrainingConfig(),
    optimizer: Optional[RMSProp] = None,
) -> List[Dict[str, float]]:
    """Train for config.epochs with per-epoch shuffling; returns loss/accuracy history"""
    data = np.asarray(patches, dtype=np.float64)
    targets = np.asarray(labels, dtype=np.int64)
    if data.shape[0] != targets.shape[0]:
        raise ShapeError(f"{data.shape[0]} patch sets but {targets.shape[0]} labels")
    if data.shape[0] == 0:
        raise ValueError("cannot train on an empty sample set")

    optimizer = optimizer or RMSProp(model.parameters(), learning_rate=config.learning_rate)
    order_rng = np.random.default_rng([config.seed, 0])
    dropout_rng = np.random.default_rng([config.seed, 1])
    history: List[Dict[str, float]] = []

    for epoch in range(1, config.epochs + 1):
        order = order_rng.permutation(data.shape[0])
        losses, weights = [], []
        for start in range(0, order.size, config.batch_size):
            idx = order[start:start + config.batch_size]
            losses.append(train_step(model, data[idx], targets[idx], optimizer, rng=dropout_rng))
            weights.append(idx.size)
        predicted, _ = predict_batch(model, data)
        record = {
            "epoch": epoch,
            "loss": float(np.average(losses, weights=weights)),
            "accuracy": float(np.mean(predicted == targets)),
        }
        history.append(record)
        logger.info("train_epoch_completed", **record)

    return history


def save_model(out_dir: Union[str, Path], model: MFPModel, class_names: Sequence[str]) -> Path:
    out_dir = Path(out_dir)
    if len(class_names) != model.config.num_classes:
        raise ShapeError(f"{len(class_names)} class names for a {model.config.num_classes}-class model")
    save_checkpoint(out_dir / CHECKPOINT_NAME, model.parameters())
    sidecar = {"model": model.config.model_dump(), "classes": list(class_names)}
    (out_dir / SIDECAR_NAME).write_text(json.dumps(sidecar, indent=2), encoding="utf-8")
    logger.info("model_saved", path=str(out_dir), classes=len(class_names))
    return out_dir


def load_model(model_dir: Union[str, Path]) -> Tuple[MFPModel, List[str]]:
    model_dir = Path(model_dir)
    try:
        sidecar = json.loads((model_dir / SIDECAR_NAME).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as e:
        raise CheckpointError(f"model sidecar missing or unreadable in {model_dir}: {e}") from e
    model = MFPModel(ModelConfig(**sidecar["model"]))
    load_checkpoint(model_dir / CHECKPOINT_NAME, model.parameters())
    return model, list(sidecar["classes"])
