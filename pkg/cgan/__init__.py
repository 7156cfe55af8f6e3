"""
cgan
Conditional GAN that renders expression faces from a neutral face
"""
from cgan.losses import (
    CGANConfig,
    GANBatch,
    GANLosses,
    PerceptualDistance,
    SubNetworkFeatureDistance,
    discriminator_accuracy,
    discriminator_loss,
    generator_loss,
)
from cgan.networks import Discriminator, Generator
from cgan.synthesis import synthesize_expressions, write_synthesized
from cgan.trainer import CGANResult, build_networks, load_cgan, save_cgan, train_cgan

__all__ = [
    "CGANConfig",
    "CGANResult",
    "Discriminator",
    "GANBatch",
    "GANLosses",
    "Generator",
    "PerceptualDistance",
    "SubNetworkFeatureDistance",
    "build_networks",
    "discriminator_accuracy",
    "discriminator_loss",
    "generator_loss",
    "load_cgan",
    "save_cgan",
    "synthesize_expressions",
    "train_cgan",
    "write_synthesized",
]
