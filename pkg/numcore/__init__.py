"""
numcore
Tensors, tape-based reverse-mode differentiation, layer ops, RMSProp and checkpoints
"""
from numcore.tensor import Parameter, Tape, Tensor, current_tape, zero_grads
from numcore.optim import RMSProp, RMSPropState, rmsprop_step


def backward(tape: Tape, loss: Tensor) -> None:
    """Write d(loss)/d(param) into every Parameter the tape reaches"""
    tape.backward(loss)


__all__ = [
    "Parameter",
    "RMSProp",
    "RMSPropState",
    "Tape",
    "Tensor",
    "backward",
    "current_tape",
    "rmsprop_step",
    "zero_grads",
]
