"""
Generator and discriminator
G: 3 strided convs → bottleneck ⊕ label one-hot ⊕ z → 3 transposed convs → sigmoid
D: (image ⊕ source image ⊕ label maps) → 3 strided convs → dense → sigmoid
"""
from typing import List, Sequence, Tuple

import numpy as np

from errors import ConfigurationError, ShapeError
from model.subnetwork import glorot_uniform
from numcore import ops
from numcore.tensor import Parameter, Tensor

KERNEL, STRIDE, PADDING = 4, 2, 1


def encoder_sides(side: int, stages: int = 3) -> List[int]:
    """Spatial side before each encoder stage plus the bottleneck side"""
    sides = [side]
    for stage in range(stages):
        padded = sides[-1] + 2 * PADDING
        if padded < KERNEL:
            raise ConfigurationError(
                f"image side {side}: encoder stage {stage + 1} sees {sides[-1]} px, too small for a {KERNEL}×{KERNEL} kernel"
            )
        sides.append((padded - KERNEL) // STRIDE + 1)
    return sides


def label_maps(labels: Sequence[int], num_labels: int, side: int) -> Tensor:
    """One-hot labels broadcast to N×num_labels×side×side constant maps"""
    idx = np.asarray(labels, dtype=np.int64).reshape(-1)
    if np.any(idx < 0) or np.any(idx >= num_labels):
        raise ValueError(f"conditioning labels must lie in [0, {num_labels}), got {sorted(set(idx.tolist()))}")
    onehot = np.eye(num_labels)[idx]
    return Tensor(np.broadcast_to(onehot[:, :, None, None], (idx.size, num_labels, side, side)))


def _as_images(x, side: int, what: str) -> Tensor:
    t = x if isinstance(x, Tensor) else Tensor(x)
    if t.ndim == 3:
        t = ops.reshape(t, (t.shape[0], 1, t.shape[1], t.shape[2]))
    if t.ndim != 4 or t.shape[1:] != (1, side, side):
        raise ShapeError(f"{what} must be N×1×{side}×{side} (or N×{side}×{side}), got {t.shape}")
    return t


class _ConvStack:
    def __init__(self, prefix: str, rng: np.random.Generator, channels: Sequence[int]):
        self.kernels: List[Parameter] = []
        self.biases: List[Parameter] = []
        for i, (c_in, c_out) in enumerate(zip(channels[:-1], channels[1:]), start=1):
            fan = KERNEL * KERNEL
            w = glorot_uniform(rng, (c_out, c_in, KERNEL, KERNEL), c_in * fan, c_out * fan)
            self.kernels.append(Parameter(w, name=f"{prefix}{i}.weight"))
            self.biases.append(Parameter(np.zeros(c_out), name=f"{prefix}{i}.bias"))

    def parameters(self) -> List[Parameter]:
        return [p for pair in zip(self.kernels, self.biases) for p in pair]

    def __call__(self, h: Tensor) -> Tensor:
        for w, b in zip(self.kernels, self.biases):
            h = ops.relu(ops.conv2d(h, w, b, stride=STRIDE, padding=PADDING))
        return h


class Generator:
    def __init__(self, image_size: int, num_labels: int = 7, z_dim: int = 8,
                 channels: Tuple[int, int, int] = (16, 32, 64), seed: int = 0):
        self.image_size = image_size
        self.num_labels = num_labels
        self.z_dim = z_dim
        self.sides = encoder_sides(image_size)
        rng = np.random.default_rng([seed, 0])
        self.encoder = _ConvStack("G.enc", rng, (1,) + tuple(channels))

        # decoder mirrors the encoder; output padding restores odd sides
        dec_channels = (channels[2] + num_labels + z_dim, channels[1], channels[0], 1)
        self.output_padding = [
            self.sides[i] - STRIDE * self.sides[i + 1] - KERNEL + 2 * PADDING + STRIDE
            for i in reversed(range(3))
        ]
        self.dec_kernels: List[Parameter] = []
        self.dec_biases: List[Parameter] = []
        for i, (c_in, c_out) in enumerate(zip(dec_channels[:-1], dec_channels[1:]), start=1):
            fan = KERNEL * KERNEL
            w = glorot_uniform(rng, (c_in, c_out, KERNEL, KERNEL), c_in * fan, c_out * fan)
            self.dec_kernels.append(Parameter(w, name=f"G.dec{i}.weight"))
            self.dec_biases.append(Parameter(np.zeros(c_out), name=f"G.dec{i}.bias"))

    def parameters(self) -> List[Parameter]:
        dec = [p for pair in zip(self.dec_kernels, self.dec_biases) for p in pair]
        return self.encoder.parameters() + dec

    def forward(self, x, z, labels: Sequence[int]) -> Tensor:
        """x: N×1×S×S neutral faces, z: N×z_dim noise → N×1×S×S images in (0,1)"""
        x = _as_images(x, self.image_size, "generator input")
        n = x.shape[0]
        z = np.asarray(z.data if isinstance(z, Tensor) else z, dtype=np.float64).reshape(n, self.z_dim)
        h = self.encoder(x)
        b = self.sides[-1]
        noise = Tensor(np.broadcast_to(z[:, :, None, None], (n, self.z_dim, b, b)))
        h = ops.concat([h, label_maps(labels, self.num_labels, b), noise], axis=1)
        last = len(self.dec_kernels) - 1
        for i, (w, bias, pad) in enumerate(zip(self.dec_kernels, self.dec_biases, self.output_padding)):
            h = ops.conv_transpose2d(h, w, bias, stride=STRIDE, padding=PADDING, output_padding=pad)
            h = ops.sigmoid(h) if i == last else ops.relu(h)
        return h


class Discriminator:
    def __init__(self, image_size: int, num_labels: int = 7,
                 channels: Tuple[int, int, int] = (16, 32, 64), seed: int = 0):
        self.image_size = image_size
        self.num_labels = num_labels
        sides = encoder_sides(image_size)
        rng = np.random.default_rng([seed, 1])
        self.convs = _ConvStack("D.conv", rng, (2 + num_labels,) + tuple(channels))
        n_in = channels[-1] * sides[-1] * sides[-1]
        self.dense_w = Parameter(glorot_uniform(rng, (1, n_in), n_in, 1), name="D.dense.weight")
        self.dense_b = Parameter(np.zeros(1), name="D.dense.bias")

    def parameters(self) -> List[Parameter]:
        return self.convs.parameters() + [self.dense_w, self.dense_b]

    def forward(self, image, source, labels: Sequence[int]) -> Tensor:
        """Probability (N,) that `image` is a real expression of `labels` for face `source`"""
        image = _as_images(image, self.image_size, "discriminator image")
        source = _as_images(source, self.image_size, "discriminator source")
        if image.shape[0] != source.shape[0]:
            raise ShapeError(f"discriminator got {image.shape[0]} images for {source.shape[0]} sources")
        h = ops.concat([image, source, label_maps(labels, self.num_labels, self.image_size)], axis=1)
        h = self.convs(h)
        h = ops.reshape(h, (h.shape[0], -1))
        out = ops.sigmoid(ops.dense(h, self.dense_w, self.dense_b))
        return ops.reshape(out, (out.shape[0],))


def freeze(params: Sequence[Parameter], frozen: bool = True) -> None:
    for p in params:
        p.requires_grad = not frozen


def set_constant_output(discriminator: Discriminator, probability: float = 0.5) -> None:
    """Zero every weight so D outputs `probability` everywhere (analytic checks)"""
    for p in discriminator.parameters():
        p.assign(np.zeros(p.shape))
    logit = np.log(probability / (1.0 - probability))
    discriminator.dense_b.assign(np.array([logit]))
