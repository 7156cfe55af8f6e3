"""Straight-line numpy re-evaluations used as oracles"""
import numpy as np


def conv_reference(x: np.ndarray, w: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Quadruple-loop valid cross-correlation of C×H×W with O×C×k×k"""
    c_out, _, k, _ = w.shape
    _, h, width = x.shape
    out = np.zeros((c_out, h - k + 1, width - k + 1))
    for o in range(c_out):
        for i in range(h - k + 1):
            for j in range(width - k + 1):
                out[o, i, j] = np.sum(x[:, i:i + k, j:j + k] * w[o]) + b[o]
    return out


def pool_reference(x: np.ndarray) -> np.ndarray:
    c, h, w = x.shape
    out = np.zeros((c, h // 2, w // 2))
    for i in range(h // 2):
        for j in range(w // 2):
            out[:, i, j] = x[:, 2 * i:2 * i + 2, 2 * j:2 * j + 2].reshape(c, -1).max(axis=1)
    return out


def softmax_reference(v: np.ndarray) -> np.ndarray:
    e = np.exp(v - v.max())
    return e / e.sum()


def mfp_reference(model, patches: np.ndarray) -> np.ndarray:
    """Inference-mode forward of an MFPModel on one 7×P×P patch set without the tape"""
    features = []
    for region, net in enumerate(model.subnets):
        h = patches[region][None]
        for w, b in zip(net.kernels, net.biases):
            h = pool_reference(np.maximum(conv_reference(h, w.data, b.data), 0.0))
        features.append(h.reshape(-1))
    v = np.concatenate(features)
    hidden = np.maximum(model.dense1_w.data @ v + model.dense1_b.data, 0.0)
    return softmax_reference(model.dense2_w.data @ hidden + model.dense2_b.data)
