"""
Tensor, Parameter and Tape
Reverse-mode differentiation over recorded operations
"""
from contextvars import ContextVar
from dataclasses import dataclass
from typing import Callable, Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from errors import ShapeError

_ACTIVE_TAPE: ContextVar[Optional["Tape"]] = ContextVar("mfpnet_active_tape", default=None)


class Tensor:
    """Immutable n-dimensional float64 array with shape metadata"""

    __slots__ = ("data", "requires_grad", "name")

    def __init__(self, data, requires_grad: bool = False, name: Optional[str] = None):
        array = np.array(data, dtype=np.float64)
        array.flags.writeable = False
        self.data = array
        self.requires_grad = requires_grad
        self.name = name

    @classmethod
    def _wrap(cls, array: np.ndarray) -> "Tensor":
        """Adopt a freshly computed array without copying"""
        out = cls.__new__(cls)
        array = np.require(array, dtype=np.float64, requirements="C")
        array.flags.writeable = False
        out.data = array
        out.requires_grad = False
        out.name = None
        return out

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return int(self.data.size)

    def numpy(self) -> np.ndarray:
        return self.data

    def item(self) -> float:
        if self.data.size != 1:
            raise ShapeError(f"item() needs a single-element tensor, got shape {self.shape}")
        return float(self.data.reshape(-1)[0])

    def detach(self) -> "Tensor":
        """Same values, cut from the tape"""
        return Tensor._wrap(self.data)

    def __repr__(self) -> str:
        label = f" name={self.name!r}" if self.name else ""
        return f"Tensor(shape={self.shape}{label})"


class Parameter(Tensor):
    """Learnable tensor with an accumulated gradient of identical shape"""

    __slots__ = ("grad",)

    def __init__(self, value, name: str):
        super().__init__(value, requires_grad=True, name=name)
        self.grad = np.zeros_like(self.data)

    def assign(self, value: np.ndarray) -> None:
        """Replace the value (optimizer / checkpoint restore); shape must not change"""
        array = np.array(value, dtype=np.float64)
        if array.shape != self.data.shape:
            raise ShapeError(
                f"Parameter {self.name!r} expects shape {self.data.shape}, got {array.shape}"
            )
        array.flags.writeable = False
        self.data = array

    def zero_grad(self) -> None:
        self.grad = np.zeros_like(self.data)

    def __repr__(self) -> str:
        return f"Parameter(name={self.name!r}, shape={self.shape})"


BackwardFn = Callable[[np.ndarray], Sequence[Optional[np.ndarray]]]


@dataclass
class TapeRecord:
    op: str
    inputs: Tuple[Tensor, ...]
    output: Tensor
    backward: BackwardFn


class Tape:
    """
    Records differentiable operations in execution order.

    Usage:
        with Tape() as tape:
            loss = ops.cross_entropy(model.forward(x, training=True), y)
        tape.backward(loss)
    """

    def __init__(self):
        self.records: List[TapeRecord] = []
        self.replayed: List[str] = []
        self._leaf_grads: Dict[int, np.ndarray] = {}
        self._tensors: Dict[int, Tensor] = {}
        self._token = None

    def __enter__(self) -> "Tape":
        self._token = _ACTIVE_TAPE.set(self)
        return self

    def __exit__(self, exc_type, exc, tb) -> None:
        _ACTIVE_TAPE.reset(self._token)
        self._token = None

    def record(self, record: TapeRecord) -> None:
        for tensor in record.inputs:
            self._tensors[id(tensor)] = tensor
        self._tensors[id(record.output)] = record.output
        self.records.append(record)

    def backward(self, loss: Tensor) -> None:
        """Replay the tape in reverse; accumulate gradients into every Parameter reached"""
        if loss.size != 1:
            raise ShapeError(f"backward needs a scalar loss, got shape {loss.shape}")

        produced = {id(r.output) for r in self.records}
        grads: Dict[int, np.ndarray] = {id(loss): np.ones_like(loss.data)}
        self.replayed = []

        for rec in reversed(self.records):
            self.replayed.append(rec.op)
            upstream = grads.pop(id(rec.output), None)
            if upstream is None:
                continue
            input_grads = rec.backward(upstream)
            for tensor, grad in zip(rec.inputs, input_grads):
                if grad is None or not tensor.requires_grad:
                    continue
                key = id(tensor)
                if grad.shape != tensor.shape:
                    raise ShapeError(
                        f"{rec.op} produced gradient of shape {grad.shape} for input {tensor.shape}"
                    )
                if key in grads:
                    grads[key] = grads[key] + grad
                else:
                    grads[key] = grad

        self._leaf_grads = {}
        for key, grad in grads.items():
            if key in produced:
                continue
            tensor = self._tensors.get(key, loss if key == id(loss) else None)
            if isinstance(tensor, Parameter):
                tensor.grad = tensor.grad + grad
            else:
                self._leaf_grads[key] = grad

    def grad_of(self, tensor: Tensor) -> np.ndarray:
        """Gradient reached at a non-parameter leaf (zeros if the loss does not depend on it)"""
        if isinstance(tensor, Parameter):
            return tensor.grad
        return self._leaf_grads.get(id(tensor), np.zeros_like(tensor.data))


def current_tape() -> Optional[Tape]:
    return _ACTIVE_TAPE.get()


def zero_grads(params: Iterable[Parameter]) -> None:
    for p in params:
        p.zero_grad()
