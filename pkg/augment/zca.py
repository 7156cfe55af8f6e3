"""
ZCA whitening
W = U·diag(1/√(λ+ε))·Uᵀ from the eigendecomposition of the (population) patch covariance
"""
from dataclasses import dataclass
from typing import List

import numpy as np

from errors import ConfigurationError, ShapeError

DEFAULT_EPSILON = 1e-2


@dataclass(frozen=True)
class ZCAStatistics:
    mean: np.ndarray
    whitening: np.ndarray
    epsilon: float

    @property
    def dim(self) -> int:
        return self.mean.shape[0]


def fit_zca(patches: np.ndarray, epsilon: float = DEFAULT_EPSILON) -> ZCAStatistics:
    """Fit from n ≥ 2 patches given as n×P×P or n×D"""
    if epsilon <= 0:
        raise ConfigurationError(f"ZCA epsilon must be > 0, got {epsilon}")
    data = np.asarray(patches, dtype=np.float64)
    if data.shape[0] < 2:
        raise ShapeError(f"fit_zca needs at least 2 patches, got {data.shape[0]}")
    flat = data.reshape(data.shape[0], -1)
    mean = flat.mean(axis=0)
    centered = flat - mean
    cov = centered.T @ centered / flat.shape[0]
    eigvals, eigvecs = np.linalg.eigh(cov)
    eigvals = np.clip(eigvals, 0.0, None)
    w = (eigvecs / np.sqrt(eigvals + epsilon)) @ eigvecs.T
    w = 0.5 * (w + w.T)
    return ZCAStatistics(mean=mean, whitening=w, epsilon=epsilon)


def whiten(stats: ZCAStatistics, patch: np.ndarray) -> np.ndarray:
    """W·(x − μ), same shape as the input, no renormalization"""
    x = np.asarray(patch, dtype=np.float64)
    if x.size != stats.dim:
        raise ShapeError(f"ZCA statistics fitted for {stats.dim} pixels, patch has {x.size}")
    return (stats.whitening @ (x.reshape(-1) - stats.mean)).reshape(x.shape)


def renormalize(values: np.ndarray) -> np.ndarray:
    """Min-max to [0,1]; a constant input maps to zeros"""
    low, high = values.min(), values.max()
    if high - low <= 0:
        return np.zeros_like(values)
    return (values - low) / (high - low)


def fit_region_zca(patch_sets: np.ndarray, epsilon: float = DEFAULT_EPSILON) -> List[ZCAStatistics]:
    """One ZCAStatistics per facial region of an N×7×P×P training array"""
    data = np.asarray(patch_sets, dtype=np.float64)
    if data.ndim != 4:
        raise ShapeError(f"fit_region_zca expects N×7×P×P, got {data.shape}")
    return [fit_zca(data[:, region], epsilon) for region in range(data.shape[1])]
