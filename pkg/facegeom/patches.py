"""
Seven-region patch extraction
Each landmark group's bounding box is widened by a margin, cropped with zero
fill outside the image and resampled to P×P.
"""
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Tuple, Union

import cv2
import numpy as np
from pydantic import BaseModel, Field

from errors import ShapeError
from facegeom.image_io import FaceImage
from facegeom.landmarks import PATCH_ORDER, LandmarkSet

N_PATCHES = len(PATCH_ORDER)


class PatchGeometry(BaseModel):
    patch_size: int = Field(default=36, ge=1)
    margin: float = Field(default=0.25, ge=0)


@dataclass(frozen=True)
class PatchSet:
    """Seven P×P crops stacked as a 7×P×P array in PATCH_ORDER"""

    patches: np.ndarray

    def __post_init__(self):
        patches = np.array(self.patches, dtype=np.float64)
        if patches.ndim != 3 or patches.shape[0] != N_PATCHES or patches.shape[1] != patches.shape[2]:
            raise ShapeError(f"PatchSet needs {N_PATCHES}×P×P patches, got {patches.shape}")
        patches.flags.writeable = False
        object.__setattr__(self, "patches", patches)

    @property
    def size(self) -> int:
        return self.patches.shape[1]

    def region(self, name: str) -> np.ndarray:
        return self.patches[PATCH_ORDER.index(name)]

    def save(self, path: Union[str, Path]) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("wb") as fh:
            np.savez(fh, patches=self.patches, order=np.array(PATCH_ORDER))
        return path

    @classmethod
    def load(cls, path: Union[str, Path]) -> "PatchSet":
        with np.load(path) as data:
            if tuple(str(n) for n in data["order"]) != PATCH_ORDER:
                raise ShapeError(f"{path}: patch order differs from {PATCH_ORDER}")
            return cls(data["patches"])


def crop_box(points: np.ndarray, margin: float) -> Tuple[int, int, int, int]:
    """Inclusive integer box (x0, y0, x1, y1) around points, widened by margin·extent per side"""
    xmin, ymin = points.min(axis=0)
    xmax, ymax = points.max(axis=0)
    wx, wy = xmax - xmin, ymax - ymin
    return (
        math.floor(xmin - margin * wx),
        math.floor(ymin - margin * wy),
        math.ceil(xmax + margin * wx),
        math.ceil(ymax + margin * wy),
    )


def crop_zero_fill(pixels: np.ndarray, box: Tuple[int, int, int, int]) -> np.ndarray:
    x0, y0, x1, y1 = box
    out = np.zeros((y1 - y0 + 1, x1 - x0 + 1))
    h, w = pixels.shape
    sx0, sy0 = max(x0, 0), max(y0, 0)
    sx1, sy1 = min(x1, w - 1), min(y1, h - 1)
    if sx0 <= sx1 and sy0 <= sy1:
        out[sy0 - y0:sy1 - y0 + 1, sx0 - x0:sx1 - x0 + 1] = pixels[sy0:sy1 + 1, sx0:sx1 + 1]
    return out


def resample(crop: np.ndarray, size: int) -> np.ndarray:
    if crop.shape == (size, size):
        return crop.copy()
    resized = cv2.resize(crop, (size, size), interpolation=cv2.INTER_LINEAR)
    return np.clip(resized, 0.0, 1.0)


def extract_patches(
    aligned: FaceImage, landmarks: LandmarkSet, geometry: PatchGeometry = PatchGeometry()
) -> PatchSet:
    crops = []
    for region in PATCH_ORDER:
        box = crop_box(landmarks.group(region), geometry.margin)
        crops.append(resample(crop_zero_fill(aligned.pixels, box), geometry.patch_size))
    return PatchSet(np.stack(crops))
