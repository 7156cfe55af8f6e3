"""
Eye-based face alignment
Rotates the eye line to horizontal, scales the inter-eye distance to D and
places the eye midpoint at (width/2, eye_line).
"""
import math
from dataclasses import dataclass
from typing import Tuple

import cv2
import numpy as np
from pydantic import BaseModel, Field

from errors import DegenerateGeometryError
from facegeom.image_io import FaceImage
from facegeom.landmarks import LandmarkSet

MIN_EYE_DISTANCE = 1e-6


class AlignmentSpec(BaseModel):
    eye_distance: float = Field(default=48.0, gt=0)
    eye_line: float = Field(default=52.0, ge=0)
    output_size: int = Field(default=128, ge=1)


@dataclass(frozen=True)
class AlignmentTransform:
    angle: float
    scale: float
    dx: float
    dy: float

    def __post_init__(self):
        if not self.scale > 0:
            raise DegenerateGeometryError(f"alignment scale must be > 0, got {self.scale}")

    def matrix(self) -> np.ndarray:
        """2×3 affine: p' = scale·R(−angle)·p + (dx, dy)"""
        c, s = math.cos(self.angle), math.sin(self.angle)
        return np.array([
            [self.scale * c, self.scale * s, self.dx],
            [-self.scale * s, self.scale * c, self.dy],
        ])

    def apply(self, points: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
        return pts @ self.matrix()[:, :2].T + self.matrix()[:, 2]


def compute_alignment(right_eye: np.ndarray, left_eye: np.ndarray, spec: AlignmentSpec) -> AlignmentTransform:
    delta = np.asarray(left_eye, dtype=np.float64) - np.asarray(right_eye, dtype=np.float64)
    distance = float(np.hypot(*delta))
    if distance < MIN_EYE_DISTANCE:
        raise DegenerateGeometryError(
            f"eye centres coincide at ({right_eye[0]:.3f}, {right_eye[1]:.3f})"
        )
    angle = math.atan2(delta[1], delta[0])
    scale = spec.eye_distance / distance
    midpoint = (np.asarray(right_eye) + np.asarray(left_eye)) / 2.0

    rot = cv2.getRotationMatrix2D((float(midpoint[0]), float(midpoint[1])), math.degrees(angle), scale)
    rot[0, 2] += spec.output_size / 2.0 - midpoint[0]
    rot[1, 2] += spec.eye_line - midpoint[1]
    return AlignmentTransform(angle=angle, scale=scale, dx=float(rot[0, 2]), dy=float(rot[1, 2]))


def align_face(
    image: FaceImage, landmarks: LandmarkSet, spec: AlignmentSpec = AlignmentSpec()
) -> Tuple[FaceImage, LandmarkSet, AlignmentTransform]:
    right_eye, left_eye = landmarks.eye_centers()
    transform = compute_alignment(right_eye, left_eye, spec)
    warped = cv2.warpAffine(
        np.ascontiguousarray(image.pixels),
        transform.matrix(),
        (spec.output_size, spec.output_size),
        flags=cv2.INTER_LINEAR,
        borderMode=cv2.BORDER_CONSTANT,
        borderValue=0.0,
    )
    return FaceImage(np.clip(warped, 0.0, 1.0)), landmarks.transformed(transform.matrix()), transform
