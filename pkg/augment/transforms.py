"""
Transformation functions
The five label-preserving patch transforms: quarter turn, half turn,
zero-fill translation, circular shift and ZCA whitening.
"""
from abc import ABC, abstractmethod
from typing import Dict, Optional, Tuple, Type

import numpy as np

from augment.zca import ZCAStatistics, renormalize, whiten
from errors import ConfigurationError, ShapeError


class TransformationFunction(ABC):
    """Maps one P×P patch to another P×P patch"""

    name: str = ""

    @abstractmethod
    def apply(self, patch: np.ndarray, rng: Optional[np.random.Generator] = None,
              stats: Optional[ZCAStatistics] = None) -> np.ndarray:
        pass

    def spec(self) -> str:
        return self.name

    def __repr__(self) -> str:
        return f"{type(self).__name__}({self.spec()!r})"


class Rotate90(TransformationFunction):
    name = "rotate90"

    def apply(self, patch, rng=None, stats=None):
        return np.rot90(patch, k=1).copy()


class Rotate180(TransformationFunction):
    name = "rotate180"

    def apply(self, patch, rng=None, stats=None):
        return np.rot90(patch, k=2).copy()


class _OffsetTransform(TransformationFunction):
    """Fixed (dx, dy) when given, otherwise drawn per call from [−⌊P/8⌋, ⌊P/8⌋]"""

    def __init__(self, dx: Optional[int] = None, dy: Optional[int] = None):
        if (dx is None) != (dy is None):
            raise ConfigurationError(f"{self.name} needs both dx and dy or neither")
        self.dx = dx
        self.dy = dy

    def offsets(self, size: int, rng: Optional[np.random.Generator]) -> Tuple[int, int]:
        if self.dx is not None:
            return self.dx, self.dy
        if rng is None:
            raise ConfigurationError(f"{self.name} without fixed offsets needs a seeded generator")
        reach = size // 8
        dx, dy = rng.integers(-reach, reach + 1, size=2)
        return int(dx), int(dy)

    def spec(self) -> str:
        if self.dx is None:
            return self.name
        return f"{self.name}:{self.dx},{self.dy}"


class Translate(_OffsetTransform):
    name = "translate"

    def apply(self, patch, rng=None, stats=None):
        h, w = patch.shape
        dx, dy = self.offsets(h, rng)
        out = np.zeros_like(patch)
        src_x = slice(max(0, -dx), min(w, w - dx))
        src_y = slice(max(0, -dy), min(h, h - dy))
        dst_x = slice(max(0, dx), min(w, w + dx))
        dst_y = slice(max(0, dy), min(h, h + dy))
        if src_x.start < src_x.stop and src_y.start < src_y.stop:
            out[dst_y, dst_x] = patch[src_y, src_x]
        return out


class CircularShift(_OffsetTransform):
    name = "shift"

    def apply(self, patch, rng=None, stats=None):
        dx, dy = self.offsets(patch.shape[0], rng)
        return np.roll(patch, (dy, dx), axis=(0, 1))


class ZCAWhiten(TransformationFunction):
    name = "zca"

    def apply(self, patch, rng=None, stats=None):
        if stats is None:
            raise ConfigurationError("ZCAWhiten needs fitted ZCA statistics")
        return renormalize(whiten(stats, patch))


TF_REGISTRY: Dict[str, Type[TransformationFunction]] = {
    cls.name: cls for cls in (Rotate90, Rotate180, Translate, CircularShift, ZCAWhiten)
}

DEFAULT_PLAN = ("rotate90", "rotate180", "translate", "shift", "zca")


def parse_tf(text: str) -> TransformationFunction:
    """'rotate90', 'translate', 'translate:2,-1', 'shift:3,0', 'zca'"""
    name, _, args = text.strip().lower().partition(":")
    cls = TF_REGISTRY.get(name)
    if cls is None:
        raise ConfigurationError(f"unknown transformation {name!r}; allowed: {', '.join(TF_REGISTRY)}")
    if not args:
        return cls()
    if not issubclass(cls, _OffsetTransform):
        raise ConfigurationError(f"transformation {name!r} takes no parameters")
    try:
        dx, dy = (int(v) for v in args.split(","))
    except ValueError as e:
        raise ConfigurationError(f"bad offsets in {text!r}; expected name:dx,dy") from e
    return cls(dx, dy)


def apply_tf(patch: np.ndarray, tf: TransformationFunction,
             stats: Optional[ZCAStatistics] = None,
             rng: Optional[np.random.Generator] = None) -> np.ndarray:
    patch = np.asarray(patch, dtype=np.float64)
    if patch.ndim != 2 or patch.shape[0] != patch.shape[1]:
        raise ShapeError(f"transformations act on square P×P patches, got {patch.shape}")
    return tf.apply(patch, rng=rng, stats=stats)
