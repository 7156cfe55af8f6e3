"""
Differentiable operations
Spatial ops take C×H×W or N×C×H×W inputs; the batch axis is optional everywhere.
"""
from typing import Optional, Sequence, Tuple, Union

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from errors import NumericalError, ShapeError
from numcore.tensor import Tape, TapeRecord, Tensor, current_tape

PROB_FLOOR = 1e-12


def _emit(op: str, inputs: Sequence[Tensor], out_data: np.ndarray, backward) -> Tensor:
    if not np.all(np.isfinite(out_data)):
        raise NumericalError(f"{op} produced non-finite values")
    out = Tensor._wrap(out_data)
    tape: Optional[Tape] = current_tape()
    if tape is not None and any(t.requires_grad for t in inputs):
        out.requires_grad = True
        tape.record(TapeRecord(op, tuple(inputs), out, backward))
    return out


def _as_batch(x: Tensor, op: str) -> Tuple[np.ndarray, bool]:
    if x.ndim == 3:
        return x.data[None], True
    if x.ndim == 4:
        return x.data, False
    raise ShapeError(f"{op} expects C×H×W or N×C×H×W input, got shape {x.shape}")


def _ensure_tensor(x: Union[Tensor, np.ndarray, float]) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


# ---------- convolution ----------

def _conv_forward(x: np.ndarray, w: np.ndarray, stride: int, padding: int) -> Tuple[np.ndarray, np.ndarray]:
    k = w.shape[2]
    if padding:
        x = np.pad(x, ((0, 0), (0, 0), (padding, padding), (padding, padding)))
    windows = sliding_window_view(x, (k, k), axis=(2, 3))[:, :, ::stride, ::stride]
    # windows: N, C, Ho, Wo, k, k
    out = np.tensordot(windows, w, axes=([1, 4, 5], [1, 2, 3]))
    return out.transpose(0, 3, 1, 2), windows


def conv2d(x: Tensor, kernels: Tensor, bias: Tensor, stride: int = 1, padding: int = 0) -> Tensor:
    """Cross-correlation of every output kernel with all input channels, plus bias"""
    data, squeeze = _as_batch(x, "conv2d")
    w = kernels.data
    if w.ndim != 4 or w.shape[2] != w.shape[3]:
        raise ShapeError(f"conv2d kernels must be C_out×C_in×k×k, got {kernels.shape}")
    if data.shape[1] != w.shape[1]:
        raise ShapeError(
            f"conv2d channel mismatch: input {x.shape} has {data.shape[1]} channels, "
            f"kernels {kernels.shape} expect {w.shape[1]}"
        )
    if bias.shape != (w.shape[0],):
        raise ShapeError(f"conv2d bias must have shape ({w.shape[0]},), got {bias.shape}")
    k = w.shape[2]
    height, width = data.shape[2] + 2 * padding, data.shape[3] + 2 * padding
    if height < k or width < k:
        raise ShapeError(f"conv2d input {x.shape} smaller than kernel {k}×{k} (padding {padding})")

    out, windows = _conv_forward(data, w, stride, padding)
    out = out + bias.data[None, :, None, None]
    out_h, out_w = out.shape[2], out.shape[3]

    def backward(g: np.ndarray):
        g4 = g[None] if squeeze else g
        grad_w = np.tensordot(g4, windows, axes=([0, 2, 3], [0, 2, 3]))
        grad_b = g4.sum(axis=(0, 2, 3))
        grad_x = np.zeros((data.shape[0], data.shape[1], height, width))
        span_h = stride * (out_h - 1) + 1
        span_w = stride * (out_w - 1) + 1
        for i in range(k):
            for j in range(k):
                contrib = np.tensordot(g4, w[:, :, i, j], axes=([1], [0]))
                grad_x[:, :, i:i + span_h:stride, j:j + span_w:stride] += contrib.transpose(0, 3, 1, 2)
        if padding:
            grad_x = grad_x[:, :, padding:-padding, padding:-padding]
        if squeeze:
            grad_x = grad_x[0]
        return grad_x, grad_w, grad_b

    return _emit("conv2d", (x, kernels, bias), out[0] if squeeze else out, backward)


def conv2d_valid(x: Tensor, kernels: Tensor, bias: Tensor) -> Tensor:
    """5×5, stride 1, unpadded convolution: output spatial dims (H−4)×(W−4)"""
    if kernels.ndim != 4 or kernels.shape[2:] != (5, 5):
        raise ShapeError(f"conv2d_valid needs 5×5 kernels, got {kernels.shape}")
    if x.ndim not in (3, 4) or x.shape[-2] < 5 or x.shape[-1] < 5:
        raise ShapeError(f"conv2d_valid needs H ≥ 5 and W ≥ 5, got input {x.shape}")
    return conv2d(x, kernels, bias, stride=1, padding=0)


def conv_transpose2d(
    x: Tensor,
    kernels: Tensor,
    bias: Tensor,
    stride: int = 2,
    padding: int = 1,
    output_padding: int = 0,
) -> Tensor:
    """
    Adjoint of conv2d (kernels are C_in×C_out×k×k).
    Output side = (H−1)·stride − 2·padding + k + output_padding.
    """
    data, squeeze = _as_batch(x, "conv_transpose2d")
    w = kernels.data
    if w.ndim != 4 or data.shape[1] != w.shape[0]:
        raise ShapeError(
            f"conv_transpose2d channel mismatch: input {x.shape}, kernels {kernels.shape}"
        )
    if bias.shape != (w.shape[1],):
        raise ShapeError(f"conv_transpose2d bias must have shape ({w.shape[1]},), got {bias.shape}")
    if not 0 <= output_padding < stride:
        raise ShapeError(f"output_padding {output_padding} must lie in [0, stride={stride})")

    n, _, in_h, in_w = data.shape
    k = w.shape[2]
    c_out = w.shape[1]
    out_h = (in_h - 1) * stride - 2 * padding + k + output_padding
    out_w = (in_w - 1) * stride - 2 * padding + k + output_padding
    if out_h < 1 or out_w < 1:
        raise ShapeError(f"conv_transpose2d output would be empty for input {x.shape}")
    full_h = (in_h - 1) * stride + k + output_padding
    full_w = (in_w - 1) * stride + k + output_padding
    span_h = stride * (in_h - 1) + 1
    span_w = stride * (in_w - 1) + 1

    full = np.zeros((n, c_out, full_h, full_w))
    for i in range(k):
        for j in range(k):
            contrib = np.tensordot(data, w[:, :, i, j], axes=([1], [0]))
            full[:, :, i:i + span_h:stride, j:j + span_w:stride] += contrib.transpose(0, 3, 1, 2)
    out = full[:, :, padding:padding + out_h, padding:padding + out_w] + bias.data[None, :, None, None]

    def backward(g: np.ndarray):
        g4 = g[None] if squeeze else g
        g_full = np.zeros((n, c_out, full_h, full_w))
        g_full[:, :, padding:padding + out_h, padding:padding + out_w] = g4
        grad_x = np.zeros_like(data)
        grad_w = np.zeros_like(w)
        for i in range(k):
            for j in range(k):
                g_slice = g_full[:, :, i:i + span_h:stride, j:j + span_w:stride]
                grad_x += np.tensordot(g_slice, w[:, :, i, j], axes=([1], [1])).transpose(0, 3, 1, 2)
                grad_w[:, :, i, j] = np.tensordot(data, g_slice, axes=([0, 2, 3], [0, 2, 3]))
        grad_b = g4.sum(axis=(0, 2, 3))
        return (grad_x[0] if squeeze else grad_x), grad_w, grad_b

    return _emit("conv_transpose2d", (x, kernels, bias), out[0] if squeeze else out, backward)


# ---------- pooling / activations ----------

def maxpool2x2(x: Tensor) -> Tensor:
    """Non-overlapping 2×2 max; a trailing odd row/column is dropped"""
    data, squeeze = _as_batch(x, "maxpool2x2")
    n, c, h, w = data.shape
    if h < 2 or w < 2:
        raise ShapeError(f"maxpool2x2 needs H ≥ 2 and W ≥ 2, got input {x.shape}")
    oh, ow = h // 2, w // 2
    blocks = (
        data[:, :, :2 * oh, :2 * ow]
        .reshape(n, c, oh, 2, ow, 2)
        .transpose(0, 1, 2, 4, 3, 5)
        .reshape(n, c, oh, ow, 4)
    )
    winner = blocks.argmax(axis=-1)
    out = np.take_along_axis(blocks, winner[..., None], axis=-1)[..., 0]

    def backward(g: np.ndarray):
        g4 = g[None] if squeeze else g
        routed = np.zeros((n, c, oh, ow, 4))
        np.put_along_axis(routed, winner[..., None], g4[..., None], axis=-1)
        routed = routed.reshape(n, c, oh, ow, 2, 2).transpose(0, 1, 2, 4, 3, 5).reshape(n, c, 2 * oh, 2 * ow)
        grad_x = np.zeros_like(data)
        grad_x[:, :, :2 * oh, :2 * ow] = routed
        return (grad_x[0] if squeeze else grad_x),

    return _emit("maxpool2x2", (x,), out[0] if squeeze else out, backward)


def relu(x: Tensor) -> Tensor:
    positive = x.data > 0
    out = np.where(positive, x.data, 0.0)

    def backward(g: np.ndarray):
        return (g * positive),

    return _emit("relu", (x,), out, backward)


def sigmoid(x: Tensor) -> Tensor:
    out = 0.5 * (1.0 + np.tanh(0.5 * x.data))

    def backward(g: np.ndarray):
        return (g * out * (1.0 - out)),

    return _emit("sigmoid", (x,), out, backward)


def softmax(x: Tensor) -> Tensor:
    """Softmax over the last axis, with max-subtraction"""
    if x.ndim not in (1, 2) or x.shape[-1] < 1:
        raise ShapeError(f"softmax expects K or N×K input, got {x.shape}")
    shifted = x.data - x.data.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    out = e / e.sum(axis=-1, keepdims=True)

    def backward(g: np.ndarray):
        return (out * (g - (g * out).sum(axis=-1, keepdims=True))),

    return _emit("softmax", (x,), out, backward)


def dense(x: Tensor, weights: Tensor, bias: Tensor) -> Tensor:
    """Affine map W·x + b for a vector x (N) or a batch (B×N)"""
    if weights.ndim != 2 or x.ndim not in (1, 2) or x.shape[-1] != weights.shape[1]:
        raise ShapeError(f"dense mismatch: input {x.shape}, weights {weights.shape}")
    if bias.shape != (weights.shape[0],):
        raise ShapeError(f"dense bias must have shape ({weights.shape[0]},), got {bias.shape}")
    w = weights.data
    out = x.data @ w.T + bias.data

    def backward(g: np.ndarray):
        grad_x = g @ w
        if x.ndim == 1:
            grad_w = np.outer(g, x.data)
            grad_b = g
        else:
            grad_w = g.T @ x.data
            grad_b = g.sum(axis=0)
        return grad_x, grad_w, grad_b

    return _emit("dense", (x, weights, bias), out, backward)


def dropout(x: Tensor, rate: float, rng: Optional[np.random.Generator], training: bool) -> Tensor:
    """Inverted dropout; identity at inference, all zeros at rate 1"""
    if not 0.0 <= rate <= 1.0:
        raise ValueError(f"dropout rate must lie in [0, 1], got {rate}")
    if not training or rate == 0.0:
        return x
    if rng is None:
        raise ValueError("dropout in training mode needs a seeded generator")
    if rate == 1.0:
        mask = np.zeros(x.shape)
    else:
        mask = (rng.random(x.shape) >= rate) / (1.0 - rate)
    out = x.data * mask

    def backward(g: np.ndarray):
        return (g * mask),

    return _emit("dropout", (x,), out, backward)


# ---------- losses ----------

def cross_entropy(probabilities: Tensor, target) -> Tensor:
    """
    −log p[target] (floored at 1e−12), averaged over a batch when probabilities is N×K.
    """
    p = probabilities.data
    if p.ndim == 1:
        targets = np.array([int(target)])
        rows = p[None]
    elif p.ndim == 2:
        targets = np.asarray(target, dtype=np.int64).reshape(-1)
        rows = p
        if targets.shape[0] != rows.shape[0]:
            raise ShapeError(f"cross_entropy got {targets.shape[0]} targets for {rows.shape[0]} rows")
    else:
        raise ShapeError(f"cross_entropy expects K or N×K probabilities, got {probabilities.shape}")
    k = rows.shape[1]
    if np.any(targets < 0) or np.any(targets >= k):
        raise ValueError(f"target class out of range [0, {k}): {targets.tolist()}")

    idx = np.arange(rows.shape[0])
    picked = rows[idx, targets]
    clamped = np.maximum(picked, PROB_FLOOR)
    out = np.array(-np.log(clamped).mean())

    def backward(g: np.ndarray):
        grad = np.zeros_like(rows)
        active = picked > PROB_FLOOR
        grad[idx, targets] = np.where(active, -1.0 / clamped, 0.0) * (float(g) / rows.shape[0])
        return (grad[0] if p.ndim == 1 else grad),

    return _emit("cross_entropy", (probabilities,), out, backward)


def log(x: Tensor, low: float = 1e-7, high: float = 1.0 - 1e-7) -> Tensor:
    """Natural log of x clamped to [low, high]; zero gradient where the clamp engages"""
    clamped = np.clip(x.data, low, high)
    inside = (x.data >= low) & (x.data <= high)
    out = np.log(clamped)

    def backward(g: np.ndarray):
        return (np.where(inside, g / clamped, 0.0)),

    return _emit("log", (x,), out, backward)


def mse(a: Tensor, b: Tensor) -> Tensor:
    """Mean squared element difference (scalar)"""
    if a.shape != b.shape:
        raise ShapeError(f"mse shape mismatch: {a.shape} vs {b.shape}")
    diff = a.data - b.data
    out = np.array(np.mean(diff * diff))
    scale = 2.0 / diff.size

    def backward(g: np.ndarray):
        grad = float(g) * scale * diff
        return grad, -grad

    return _emit("mse", (a, b), out, backward)


# ---------- structural / arithmetic ----------

def add(a: Tensor, b: Tensor) -> Tensor:
    if a.shape != b.shape:
        raise ShapeError(f"add shape mismatch: {a.shape} vs {b.shape}")
    return _emit("add", (a, b), a.data + b.data, lambda g: (g, g))


def affine(x: Tensor, scale: float, shift: float = 0.0) -> Tensor:
    """scale·x + shift with constant scalars"""
    return _emit("affine", (x,), scale * x.data + shift, lambda g: (scale * g,))


def mean(x: Tensor) -> Tensor:
    n = x.size
    shape = x.shape
    return _emit("mean", (x,), np.array(x.data.mean()), lambda g: (np.full(shape, float(g) / n),))


def reduce_sum(x: Tensor) -> Tensor:
    shape = x.shape
    return _emit("reduce_sum", (x,), np.array(x.data.sum()), lambda g: (np.full(shape, float(g)),))


def reshape(x: Tensor, shape: Tuple[int, ...]) -> Tensor:
    original = x.shape
    return _emit("reshape", (x,), x.data.reshape(shape), lambda g: (g.reshape(original),))


def concat(tensors: Sequence[Tensor], axis: int = 0) -> Tensor:
    if not tensors:
        raise ShapeError("concat needs at least one tensor")
    out = np.concatenate([t.data for t in tensors], axis=axis)
    bounds = np.cumsum([t.shape[axis] for t in tensors])[:-1]

    def backward(g: np.ndarray):
        return tuple(np.split(g, bounds, axis=axis))

    return _emit("concat", tuple(tensors), out, backward)
