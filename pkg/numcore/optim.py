"""
RMSProp optimizer
s ← ρ·s + (1−ρ)·g² ;  θ ← θ − η·g / (√s + ε)
"""
from dataclasses import dataclass, field
from typing import Dict, Sequence

import numpy as np

from errors import ConfigurationError, ShapeError
from numcore.tensor import Parameter


@dataclass
class RMSPropState:
    """Per-parameter squared-gradient accumulators keyed by parameter name"""

    learning_rate: float = 1e-3
    decay: float = 0.9
    epsilon: float = 1e-8
    accumulators: Dict[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        if not 0.0 < self.decay < 1.0:
            raise ConfigurationError(f"RMSProp decay must lie in (0, 1), got {self.decay}")
        if self.epsilon <= 0.0:
            raise ConfigurationError(f"RMSProp epsilon must be > 0, got {self.epsilon}")
        if self.learning_rate < 0.0:
            raise ConfigurationError(f"RMSProp learning rate must be ≥ 0, got {self.learning_rate}")


def rmsprop_step(params: Sequence[Parameter], grads: Sequence[np.ndarray], state: RMSPropState) -> None:
    """Apply one update in place; accumulators start at zero on first use"""
    if len(params) != len(grads):
        raise ShapeError(f"rmsprop_step got {len(params)} params but {len(grads)} gradients")
    rho, eta, eps = state.decay, state.learning_rate, state.epsilon
    for param, grad in zip(params, grads):
        if grad.shape != param.shape:
            raise ShapeError(
                f"gradient for {param.name!r} has shape {grad.shape}, parameter is {param.shape}"
            )
        s = state.accumulators.get(param.name)
        if s is None:
            s = np.zeros_like(param.data)
        s = rho * s + (1.0 - rho) * grad * grad
        state.accumulators[param.name] = s
        if eta != 0.0:
            param.assign(param.data - eta * grad / (np.sqrt(s) + eps))


class RMSProp:
    """Optimizer bound to a fixed parameter list"""

    def __init__(self, params: Sequence[Parameter], learning_rate: float = 1e-3,
                 decay: float = 0.9, epsilon: float = 1e-8):
        names = [p.name for p in params]
        if len(set(names)) != len(names):
            raise ConfigurationError("RMSProp parameters need unique names")
        self.params = list(params)
        self.state = RMSPropState(learning_rate=learning_rate, decay=decay, epsilon=epsilon)

    def zero_grad(self) -> None:
        for p in self.params:
            p.zero_grad()

    def step(self) -> None:
        rmsprop_step(self.params, [p.grad for p in self.params], self.state)
