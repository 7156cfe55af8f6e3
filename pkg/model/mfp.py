"""
Multi-facial-patch network
Seven sub-networks (one per facial region) → concatenation → dense+ReLU → dropout → dense+softmax
"""
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from pydantic import BaseModel, Field

from errors import ConfigurationError, ShapeError
from facegeom.landmarks import PATCH_ORDER
from model.subnetwork import KERNEL, STAGE_CHANNELS, SubNetwork, glorot_uniform
from numcore import ops
from numcore.optim import RMSProp
from numcore.tensor import Parameter, Tape, Tensor

N_PATCHES = len(PATCH_ORDER)


class ModelConfig(BaseModel):
    patch_size: int = Field(default=36, ge=1)
    num_classes: int = Field(default=8, ge=1)
    dense_width: int = Field(default=256, ge=1)
    dropout: float = Field(default=0.5, ge=0.0, le=1.0)
    subnet_dropout: float = Field(default=0.0, ge=0.0, le=1.0)
    seed: int = 0


@dataclass
class ShapeRow:
    layer: str
    shape: Tuple[int, ...]
    parameters: int = 0


@dataclass
class ShapePlan:
    rows: List[ShapeRow] = field(default_factory=list)
    feature_length: int = 0
    concat_length: int = 0
    stage_parameters: Tuple[int, ...] = ()

    @property
    def total_parameters(self) -> int:
        # conv rows describe one sub-network; there are seven
        conv = sum(self.stage_parameters)
        return sum(r.parameters for r in self.rows) + (N_PATCHES - 1) * conv

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            {
                "layer": [r.layer for r in self.rows],
                "shape": ["×".join(str(d) for d in r.shape) for r in self.rows],
                "elements": [int(np.prod(r.shape)) for r in self.rows],
                "parameters": [r.parameters for r in self.rows],
            }
        )

    def to_text(self) -> str:
        table = self.to_frame().to_string(index=False)
        return (
            f"{table}\n"
            f"per-patch feature length: {self.feature_length}\n"
            f"dense-1 input length: {self.concat_length}\n"
            f"total parameters: {self.total_parameters}"
        )


def shape_plan(config: ModelConfig) -> ShapePlan:
    """Exact per-layer shapes; fails at the first stage whose spatial size would fall below its minimum"""
    p = config.patch_size
    plan = ShapePlan()
    plan.rows.append(ShapeRow("input", (1, p, p)))
    side, c_in = p, 1
    stage_params = []
    for stage, c_out in enumerate(STAGE_CHANNELS, start=1):
        if side < KERNEL:
            raise ConfigurationError(
                f"patch size {p}: stage C{stage} conv needs at least {KERNEL}×{KERNEL} input, got {side}×{side}"
            )
        side -= KERNEL - 1
        count = c_out * c_in * KERNEL * KERNEL + c_out
        stage_params.append(count)
        plan.rows.append(ShapeRow(f"C{stage} conv", (c_out, side, side), count))
        if side < 2:
            raise ConfigurationError(
                f"patch size {p}: stage C{stage} pool needs at least 2×2 input, got {side}×{side}"
            )
        side //= 2
        plan.rows.append(ShapeRow(f"C{stage} pool", (c_out, side, side)))
        c_in = c_out

    plan.feature_length = c_in * side * side
    plan.concat_length = N_PATCHES * plan.feature_length
    plan.stage_parameters = tuple(stage_params)
    plan.rows += [
        ShapeRow("flatten", (plan.feature_length,)),
        ShapeRow("concat", (plan.concat_length,)),
        ShapeRow("dense1+relu", (config.dense_width,), (plan.concat_length + 1) * config.dense_width),
        ShapeRow("dropout", (config.dense_width,)),
        ShapeRow("dense2+softmax", (config.num_classes,), (config.dense_width + 1) * config.num_classes),
    ]
    return plan


class MFPModel:
    """All learnable state of the classifier; parameter names are unique and stable"""

    def __init__(self, config: ModelConfig):
        self.config = config
        self.plan = shape_plan(config)
        rng = np.random.default_rng(config.seed)
        self.subnets = [SubNetwork(region, rng, dropout=config.subnet_dropout) for region in PATCH_ORDER]
        n_in, width, k = self.plan.concat_length, config.dense_width, config.num_classes
        self.dense1_w = Parameter(glorot_uniform(rng, (width, n_in), n_in, width), name="dense1.weight")
        self.dense1_b = Parameter(np.zeros(width), name="dense1.bias")
        self.dense2_w = Parameter(glorot_uniform(rng, (k, width), width, k), name="dense2.weight")
        self.dense2_b = Parameter(np.zeros(k), name="dense2.bias")
        # dropout masks for train_step calls that pass no generator; advances across calls
        self.dropout_rng = np.random.default_rng([config.seed, 1])

    def parameters(self) -> List[Parameter]:
        params: List[Parameter] = []
        for net in self.subnets:
            params.extend(net.parameters())
        params.extend([self.dense1_w, self.dense1_b, self.dense2_w, self.dense2_b])
        return params

    def _check_patches(self, patches: Union[Tensor, np.ndarray]) -> Tensor:
        x = patches if isinstance(patches, Tensor) else Tensor(patches)
        p = self.config.patch_size
        if x.shape[-3:] != (N_PATCHES, p, p) or x.ndim not in (3, 4):
            raise ShapeError(
                f"model expects {N_PATCHES}×{p}×{p} patches (optionally batched), got {x.shape}"
            )
        return x

    def logits(self, patches, training: bool = False, rng: Optional[np.random.Generator] = None) -> Tensor:
        x = self._check_patches(patches)
        batched = x.ndim == 4
        data = x.data if batched else x.data[None]
        features = []
        for i, net in enumerate(self.subnets):
            region = Tensor(data[:, i:i + 1])
            features.append(net.forward(region, training=training, rng=rng))
        h = ops.concat(features, axis=1)
        h = ops.relu(ops.dense(h, self.dense1_w, self.dense1_b))
        h = ops.dropout(h, self.config.dropout, rng, training)
        out = ops.dense(h, self.dense2_w, self.dense2_b)
        return out if batched else ops.reshape(out, (self.config.num_classes,))

    def forward(self, patches, training: bool = False, rng: Optional[np.random.Generator] = None) -> Tensor:
        """Class probabilities: K for one PatchSet, N×K for a batch"""
        return ops.softmax(self.logits(patches, training=training, rng=rng))


def _check_labels(labels: Sequence[int], num_classes: int) -> np.ndarray:
    targets = np.asarray(labels, dtype=np.int64).reshape(-1)
    if targets.size == 0:
        raise ValueError("train_step needs a non-empty batch")
    bad = targets[(targets < 0) | (targets >= num_classes)]
    if bad.size:
        raise ValueError(f"labels {sorted(set(bad.tolist()))} outside [0, {num_classes})")
    return targets


def train_step(
    model: MFPModel,
    patches: np.ndarray,
    labels: Sequence[int],
    optimizer: RMSProp,
    rng: Optional[np.random.Generator] = None,
) -> float:
    """One mean-cross-entropy RMSProp step on a batch (N×7×P×P); returns the pre-step loss"""
    targets = _check_labels(labels, model.config.num_classes)
    batch = np.asarray(patches, dtype=np.float64)
    if batch.ndim == 3:
        batch = batch[None]
    if batch.shape[0] != targets.size:
        raise ShapeError(f"batch of {batch.shape[0]} patch sets has {targets.size} labels")
    if rng is None:
        rng = model.dropout_rng

    optimizer.zero_grad()
    with Tape() as tape:
        probs = model.forward(batch, training=True, rng=rng)
        loss = ops.cross_entropy(probs, targets)
    tape.backward(loss)
    optimizer.step()
    return loss.item()


def predict(model: MFPModel, patches) -> Tuple[int, np.ndarray]:
    """Most probable class (lowest index on ties) and the probability vector"""
    probs = model.forward(patches, training=False).numpy()
    if probs.ndim != 1:
        raise ShapeError(f"predict takes one PatchSet; use predict_batch for {probs.shape[0]} samples")
    return int(np.argmax(probs)), probs
