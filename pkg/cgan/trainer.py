"""
Alternating cGAN training
Per batch: one discriminator ascent step on its value, then one generator
descent step on λ·(generator loss), both with RMSProp.
"""
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Tuple, Union

import numpy as np

from cgan.losses import (
    CGANConfig,
    GANBatch,
    PerceptualDistance,
    SubNetworkFeatureDistance,
    discriminator_loss,
    generator_loss,
)
from cgan.networks import Discriminator, Generator
from config.logging import get_logger
from errors import CheckpointError, ShapeError
from numcore import ops
from numcore.checkpoint import load_checkpoint, save_checkpoint
from numcore.optim import RMSProp
from numcore.tensor import Tape

logger = get_logger(__name__)


@dataclass
class CGANResult:
    generator: Generator
    discriminator: Discriminator
    config: CGANConfig
    history: List[Dict[str, float]] = field(default_factory=list)


def build_networks(config: CGANConfig) -> Tuple[Generator, Discriminator]:
    generator = Generator(config.image_size, config.num_labels, config.z_dim, config.channels, seed=config.seed)
    discriminator = Discriminator(config.image_size, config.num_labels, config.channels, seed=config.seed)
    return generator, discriminator


def train_cgan(
    neutral: np.ndarray,
    expression: np.ndarray,
    labels: np.ndarray,
    config: CGANConfig = CGANConfig(),
    perceptual_fn: Optional[PerceptualDistance] = None,
    networks: Optional[Tuple[Generator, Discriminator]] = None,
) -> CGANResult:
    """
    neutral, expression: n×S×S images in [0,1]; labels: n expression indices.
    Returns the trained networks and one history row per step.
    """
    x_all = np.asarray(neutral, dtype=np.float64)
    y_all = np.asarray(expression, dtype=np.float64)
    label_all = np.asarray(labels, dtype=np.int64).reshape(-1)
    if x_all.shape[0] == 0:
        raise ValueError("train_cgan needs a non-empty dataset")
    if x_all.ndim != 3 or x_all.shape[1] != x_all.shape[2]:
        raise ShapeError(f"cGAN images must be n×S×S, single channel, got {x_all.shape}")
    if x_all.shape != y_all.shape or label_all.shape[0] != x_all.shape[0]:
        raise ShapeError(
            f"neutral {x_all.shape}, expression {y_all.shape} and labels {label_all.shape} disagree"
        )
    if x_all.shape[1] != config.image_size:
        raise ShapeError(f"images are {x_all.shape[1]} px, config.image_size is {config.image_size}")

    generator, discriminator = networks or build_networks(config)
    if perceptual_fn is None and config.beta > 0:
        perceptual_fn = SubNetworkFeatureDistance(config.image_size, seed=config.seed)

    g_opt = RMSProp(generator.parameters(), learning_rate=config.g_learning_rate)
    d_opt = RMSProp(discriminator.parameters(), learning_rate=config.d_learning_rate)
    rng = np.random.default_rng([config.seed, 3])
    n = x_all.shape[0]
    order = rng.permutation(n)
    cursor = 0
    history: List[Dict[str, float]] = []

    for step in range(1, config.steps + 1):
        if cursor + config.batch_size > n and cursor > 0:
            order, cursor = rng.permutation(n), 0
        idx = order[cursor:cursor + config.batch_size]
        cursor += idx.size
        batch = GANBatch(
            x=x_all[idx], y=y_all[idx], z=rng.standard_normal((idx.size, config.z_dim)), labels=label_all[idx]
        )

        d_opt.zero_grad()
        with Tape() as tape:
            d_value = discriminator_loss(batch, generator, discriminator)
            d_objective = ops.affine(d_value, -1.0)
        tape.backward(d_objective)
        d_opt.step()

        if config.train_generator:
            g_opt.zero_grad()
            with Tape() as tape:
                losses = generator_loss(batch, generator, discriminator, config, perceptual_fn)
                g_objective = ops.affine(losses.total_tensor, config.lam)
            tape.backward(g_objective)
            g_opt.step()
        else:
            losses = generator_loss(batch, generator, discriminator, config, perceptual_fn)

        row = {
            "step": step,
            "d_value": d_value.item(),
            "g_total": losses.total,
            "g_adversarial": losses.adversarial,
            "g_mse": losses.mse,
            "g_perceptual": losses.perceptual,
        }
        history.append(row)
        logger.debug("gan_step", **row)

    if history:
        logger.info("gan_training_completed", steps=config.steps, final_mse=history[-1]["g_mse"])
    return CGANResult(generator=generator, discriminator=discriminator, config=config, history=history)


def save_cgan(out_dir: Union[str, Path], result: CGANResult) -> Path:
    out_dir = Path(out_dir)
    save_checkpoint(out_dir / "generator.ckpt", result.generator.parameters())
    save_checkpoint(out_dir / "discriminator.ckpt", result.discriminator.parameters())
    (out_dir / "cgan.json").write_text(json.dumps(result.config.model_dump(), indent=2), encoding="utf-8")
    return out_dir


def load_cgan(model_dir: Union[str, Path]) -> CGANResult:
    model_dir = Path(model_dir)
    try:
        config = CGANConfig(**json.loads((model_dir / "cgan.json").read_text(encoding="utf-8")))
    except (OSError, json.JSONDecodeError) as e:
        raise CheckpointError(f"cGAN config missing or unreadable in {model_dir}: {e}") from e
    generator, discriminator = build_networks(config)
    load_checkpoint(model_dir / "generator.ckpt", generator.parameters())
    load_checkpoint(model_dir / "discriminator.ckpt", discriminator.parameters())
    return CGANResult(generator=generator, discriminator=discriminator, config=config)
