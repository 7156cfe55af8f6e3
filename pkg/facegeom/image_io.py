"""
Grayscale image I/O
8-bit PGM/PNG on disk, [0,1] float64 in memory
"""
from dataclasses import dataclass
from pathlib import Path
from typing import Union

import numpy as np
from PIL import Image

from errors import ShapeError


@dataclass(frozen=True)
class FaceImage:
    pixels: np.ndarray

    def __post_init__(self):
        pixels = np.array(self.pixels, dtype=np.float64)
        if pixels.ndim != 2 or min(pixels.shape) < 1:
            raise ShapeError(f"FaceImage needs a non-empty H×W grid, got {pixels.shape}")
        if not np.all(np.isfinite(pixels)) or pixels.min() < 0.0 or pixels.max() > 1.0:
            raise ShapeError("FaceImage intensities must lie in [0, 1]")
        pixels.flags.writeable = False
        object.__setattr__(self, "pixels", pixels)

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]


def load_image(path: Union[str, Path]) -> FaceImage:
    with Image.open(path) as img:
        gray = np.asarray(img.convert("L"), dtype=np.float64)
    return FaceImage(gray / 255.0)


def save_image(path: Union[str, Path], image: FaceImage) -> Path:
    """Write as 8-bit grayscale; the suffix (.pgm / .png) picks the format"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    raw = np.clip(np.rint(image.pixels * 255.0), 0, 255).astype(np.uint8)
    Image.fromarray(raw, mode="L").save(path)
    return path
