"""
Per-patch sub-network
Three stages of 5×5 valid conv → ReLU → 2×2 max-pool with 6, 16 and 120 channels
"""
from typing import List, Optional

import numpy as np

from numcore import ops
from numcore.tensor import Parameter, Tensor

STAGE_CHANNELS = (6, 16, 120)
KERNEL = 5


def glorot_uniform(rng: np.random.Generator, shape, fan_in: int, fan_out: int) -> np.ndarray:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape)


class SubNetwork:
    def __init__(self, prefix: str, rng: np.random.Generator, in_channels: int = 1, dropout: float = 0.0):
        self.prefix = prefix
        self.dropout = dropout
        self.kernels: List[Parameter] = []
        self.biases: List[Parameter] = []
        c_in = in_channels
        for stage, c_out in enumerate(STAGE_CHANNELS, start=1):
            shape = (c_out, c_in, KERNEL, KERNEL)
            w = glorot_uniform(rng, shape, c_in * KERNEL * KERNEL, c_out * KERNEL * KERNEL)
            self.kernels.append(Parameter(w, name=f"{prefix}.c{stage}.weight"))
            self.biases.append(Parameter(np.zeros(c_out), name=f"{prefix}.c{stage}.bias"))
            c_in = c_out

    def parameters(self) -> List[Parameter]:
        params = []
        for w, b in zip(self.kernels, self.biases):
            params.extend([w, b])
        return params

    def stage_parameter_counts(self) -> List[int]:
        return [w.size + b.size for w, b in zip(self.kernels, self.biases)]

    def features(self, x: Tensor, stages: int = 3) -> Tensor:
        """Feature maps after the first `stages` conv/pool stages"""
        h = x
        for w, b in list(zip(self.kernels, self.biases))[:stages]:
            h = ops.maxpool2x2(ops.relu(ops.conv2d_valid(h, w, b)))
        return h

    def forward(self, x: Tensor, training: bool = False, rng: Optional[np.random.Generator] = None) -> Tensor:
        """N×1×P×P patches → N×(120·s·s) flattened features"""
        h = self.features(x, stages=3)
        flat = ops.reshape(h, (h.shape[0], -1)) if h.ndim == 4 else ops.reshape(h, (-1,))
        return ops.dropout(flat, self.dropout, rng, training)
