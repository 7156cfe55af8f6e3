"""
68-point facial landmarks (iBUG ordering)
Region groups, eye centres, and .pts / CSV readers
"""
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Tuple, Union

import numpy as np
import pandas as pd

from errors import ShapeError

N_LANDMARKS = 68

# "right"/"left" are the subject's; the right eye sits on the image left
REGION_GROUPS: Dict[str, Tuple[int, int]] = {
    "jaw": (0, 17),
    "right_eyebrow": (17, 22),
    "left_eyebrow": (22, 27),
    "nose": (27, 36),
    "right_eye": (36, 42),
    "left_eye": (42, 48),
    "mouth": (48, 68),
}

PATCH_ORDER: Tuple[str, ...] = (
    "left_eye",
    "right_eye",
    "left_eyebrow",
    "right_eyebrow",
    "nose",
    "mouth",
    "jaw",
)


@dataclass(frozen=True)
class LandmarkSet:
    """Exactly 68 finite (x, y) points in source-image pixel coordinates"""

    points: np.ndarray

    def __post_init__(self):
        points = np.array(self.points, dtype=np.float64)
        if points.shape != (N_LANDMARKS, 2):
            raise ShapeError(f"LandmarkSet needs {N_LANDMARKS}×2 points, got {points.shape}")
        if not np.all(np.isfinite(points)):
            raise ShapeError("LandmarkSet coordinates must be finite")
        points.flags.writeable = False
        object.__setattr__(self, "points", points)

    def group(self, region: str) -> np.ndarray:
        start, stop = REGION_GROUPS[region]
        return self.points[start:stop]

    def eye_centers(self) -> Tuple[np.ndarray, np.ndarray]:
        """(right eye centroid, left eye centroid)"""
        return self.group("right_eye").mean(axis=0), self.group("left_eye").mean(axis=0)

    def translated(self, dx: float, dy: float) -> "LandmarkSet":
        return LandmarkSet(self.points + np.array([dx, dy]))

    def transformed(self, matrix: np.ndarray) -> "LandmarkSet":
        """Apply a 2×3 affine matrix"""
        homogeneous = np.hstack([self.points, np.ones((N_LANDMARKS, 1))])
        return LandmarkSet(homogeneous @ np.asarray(matrix, dtype=np.float64).T)


def read_pts(path: Union[str, Path]) -> LandmarkSet:
    """iBUG .pts: header lines, then 68 "x y" lines between "{" and "}" """
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    try:
        start = next(i for i, line in enumerate(lines) if line.strip() == "{")
        stop = next(i for i, line in enumerate(lines) if line.strip() == "}")
    except StopIteration:
        raise ShapeError(f"{path}: .pts file lacks '{{' / '}}' delimiters")
    rows = [line.split() for line in lines[start + 1:stop] if line.strip()]
    try:
        points = np.array([[float(x), float(y)] for x, y in rows])
    except ValueError as e:
        raise ShapeError(f"{path}: malformed .pts row: {e}") from e
    return LandmarkSet(points)


def write_pts(path: Union[str, Path], landmarks: LandmarkSet) -> Path:
    path = Path(path)
    body = "\n".join(f"{x:.6f} {y:.6f}" for x, y in landmarks.points)
    path.write_text(f"version: 1\nn_points: {N_LANDMARKS}\n{{\n{body}\n}}\n", encoding="utf-8")
    return path


def read_landmarks_csv(path: Union[str, Path], row: int = 0) -> LandmarkSet:
    """136-column CSV, interleaved x0, y0, x1, y1, ...; an optional header row is skipped"""
    frame = pd.read_csv(path, header=None)
    if frame.shape[1] != 2 * N_LANDMARKS:
        raise ShapeError(f"{path}: landmark CSV needs {2 * N_LANDMARKS} columns, got {frame.shape[1]}")
    numeric = frame.apply(pd.to_numeric, errors="coerce").dropna()
    if row >= len(numeric):
        raise ShapeError(f"{path}: landmark CSV has {len(numeric)} numeric rows, wanted row {row}")
    return LandmarkSet(numeric.iloc[row].to_numpy(dtype=np.float64).reshape(N_LANDMARKS, 2))


def load_landmarks(path: Union[str, Path]) -> LandmarkSet:
    path = Path(path)
    if path.suffix.lower() == ".csv":
        return read_landmarks_csv(path)
    return read_pts(path)
