"""
cGAN objectives
Generator: mean L_ad + α·L_MSE + β·L_PEP (non-saturating L_ad = −mean log D(x, G(x,z))).
Discriminator value: mean[log D(x,y) + log(1 − D(x, G(x,z)))], ascended by D.
"""
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np
from pydantic import BaseModel, Field

from cgan.networks import Discriminator, Generator, freeze
from errors import ShapeError
from model.subnetwork import SubNetwork
from numcore import ops
from numcore.tensor import Tensor


class CGANConfig(BaseModel):
    lam: float = Field(default=1.0, ge=0.0)
    alpha: float = Field(default=10.0, ge=0.0)
    beta: float = Field(default=1.0, ge=0.0)
    z_dim: int = Field(default=8, ge=1)
    image_size: int = Field(default=32, ge=8)
    num_labels: int = Field(default=7, ge=1)
    channels: Tuple[int, int, int] = (16, 32, 64)
    g_learning_rate: float = Field(default=1e-3, ge=0.0)
    d_learning_rate: float = Field(default=1e-3, ge=0.0)
    batch_size: int = Field(default=8, ge=1)
    steps: int = Field(default=500, ge=0)
    train_generator: bool = True
    seed: int = 0


@dataclass
class GANBatch:
    x: np.ndarray
    y: np.ndarray
    z: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=np.float64)
        self.y = np.asarray(self.y, dtype=np.float64)
        self.z = np.asarray(self.z, dtype=np.float64)
        self.labels = np.asarray(self.labels, dtype=np.int64).reshape(-1)
        sizes = {self.x.shape[0], self.y.shape[0], self.z.shape[0], self.labels.shape[0]}
        if len(sizes) != 1:
            raise ShapeError(
                f"GANBatch arrays disagree on N: x {self.x.shape}, y {self.y.shape}, "
                f"z {self.z.shape}, labels {self.labels.shape}"
            )
        if self.x.shape != self.y.shape:
            raise ShapeError(f"GANBatch x {self.x.shape} and y {self.y.shape} differ")

    @property
    def n(self) -> int:
        return self.labels.shape[0]


@dataclass
class GANLosses:
    adversarial: float
    mse: float
    perceptual: float
    total: float
    total_tensor: Optional[Tensor] = field(default=None, repr=False, compare=False)


class PerceptualDistance(ABC):
    """Distance between generated and target image batches (N×1×S×S), as a scalar Tensor"""

    @abstractmethod
    def __call__(self, generated: Tensor, target: Tensor) -> Tensor:
        pass


class SubNetworkFeatureDistance(PerceptualDistance):
    """MSE between feature maps of a frozen, randomly initialised sub-network (C2, or C1 below 16 px)"""

    def __init__(self, image_size: int, seed: int = 0):
        self.network = SubNetwork("perceptual", np.random.default_rng([seed, 2]))
        freeze(self.network.parameters())
        self.stages = 2 if image_size >= 16 else 1

    def __call__(self, generated: Tensor, target: Tensor) -> Tensor:
        target_features = self.network.features(target.detach(), stages=self.stages)
        return ops.mse(self.network.features(generated, stages=self.stages), target_features.detach())


def _check_batch(batch: GANBatch, generator: Generator) -> None:
    side = generator.image_size
    if batch.x.shape[-2:] != (side, side):
        raise ShapeError(f"batch images are {batch.x.shape[-2:]}, generator expects {side}×{side}")
    if batch.z.reshape(batch.n, -1).shape[1] != generator.z_dim:
        raise ShapeError(f"noise has {batch.z.reshape(batch.n, -1).shape[1]} dims, generator expects {generator.z_dim}")


def generator_loss(
    batch: GANBatch,
    generator: Generator,
    discriminator: Discriminator,
    config: CGANConfig,
    perceptual_fn: Optional[PerceptualDistance] = None,
) -> GANLosses:
    _check_batch(batch, generator)
    fake = generator.forward(batch.x, batch.z, batch.labels)
    target = Tensor(batch.y.reshape(fake.shape))
    source = Tensor(batch.x.reshape(fake.shape))

    adversarial = ops.affine(ops.mean(ops.log(discriminator.forward(fake, source, batch.labels))), -1.0)
    pixel = ops.mse(fake, target)
    if perceptual_fn is not None and config.beta > 0:
        perceptual = perceptual_fn(fake, target)
    else:
        perceptual = Tensor(0.0)

    total = ops.add(ops.add(adversarial, ops.affine(pixel, config.alpha)), ops.affine(perceptual, config.beta))
    return GANLosses(
        adversarial=adversarial.item(),
        mse=pixel.item(),
        perceptual=perceptual.item(),
        total=total.item(),
        total_tensor=total,
    )


def discriminator_loss(batch: GANBatch, generator: Generator, discriminator: Discriminator) -> Tensor:
    """Batch mean of log D(x,y) + log(1 − D(x,G(x,z))); G's output is detached"""
    fake = generator.forward(batch.x, batch.z, batch.labels).detach()
    shape = fake.shape
    source = Tensor(batch.x.reshape(shape))
    real = Tensor(batch.y.reshape(shape))
    log_real = ops.log(discriminator.forward(real, source, batch.labels))
    log_fake = ops.log(ops.affine(discriminator.forward(fake, source, batch.labels), -1.0, 1.0))
    return ops.mean(ops.add(log_real, log_fake))


def discriminator_accuracy(batch: GANBatch, generator: Generator, discriminator: Discriminator) -> float:
    """Share of real pairs scored > 0.5 and fake pairs scored < 0.5"""
    fake = generator.forward(batch.x, batch.z, batch.labels).detach()
    shape = fake.shape
    source = Tensor(batch.x.reshape(shape))
    real_p = discriminator.forward(Tensor(batch.y.reshape(shape)), source, batch.labels).numpy()
    fake_p = discriminator.forward(fake, source, batch.labels).numpy()
    return float((np.sum(real_p > 0.5) + np.sum(fake_p < 0.5)) / (2 * batch.n))
