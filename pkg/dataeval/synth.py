"""
Procedural face dataset
Template landmarks deformed per class, region intensities per class, per-subject
offset/scale/tone, per-image noise. Each (subject, class) pair is one sequence.
"""
from pathlib import Path
from typing import Dict, List, Tuple, Union

import cv2
import numpy as np
from pydantic import BaseModel, Field

from config.logging import get_logger
from dataeval.manifest import DEFAULT_CLASSES, Manifest, SampleRecord, write_manifest
from facegeom.image_io import FaceImage, save_image
from facegeom.landmarks import REGION_GROUPS, LandmarkSet, write_pts

logger = get_logger(__name__)

TEMPLATE_SIZE = 128.0

# brow lift (px, + lowers), eye opening, mouth half-width, mouth half-height, mouth drop
DEFORMATIONS = np.array([
    [0.0, 1.0, 14.0, 3.0, 0.0],    # neutral
    [4.0, 0.7, 12.0, 2.0, 0.0],    # anger
    [-1.0, 0.9, 16.0, 2.5, 1.0],   # contempt
    [3.0, 0.6, 13.0, 4.0, -2.0],   # disgust
    [-5.0, 1.4, 15.0, 6.0, 2.0],   # fear
    [0.0, 0.8, 20.0, 5.0, 0.0],    # happy
    [-2.0, 0.8, 12.0, 3.0, 3.0],   # sadness
    [-7.0, 1.6, 10.0, 10.0, 3.0],  # surprise
])

REGION_DRAW_ORDER = ("jaw", "nose", "right_eyebrow", "left_eyebrow", "right_eye", "left_eye", "mouth")


class SynthSpec(BaseModel):
    subjects: int = Field(default=16, ge=1)
    classes: int = Field(default=8, ge=2, le=len(DEFAULT_CLASSES))
    per: int = Field(default=4, ge=1)
    image_size: int = Field(default=128, ge=32)
    noise: float = Field(default=0.02, ge=0.0)
    domain_shift: float = Field(default=0.0, ge=0.0, le=1.0)


def template_landmarks(deformation: np.ndarray) -> np.ndarray:
    """68 points in a 128×128 frame; eye centres at (40, 52) and (88, 52)"""
    brow_dy, eye_open, mouth_w, mouth_h, mouth_dy = deformation
    pts = np.zeros((68, 2))
    t = np.linspace(0.0, np.pi, 17)
    pts[0:17] = np.column_stack([64 - 44 * np.cos(t), 60 + 50 * np.sin(t)])
    arc = 4 * np.sin(np.linspace(0.0, np.pi, 5))
    pts[17:22] = np.column_stack([np.linspace(26, 54, 5), 38 + brow_dy - arc])
    pts[22:27] = np.column_stack([np.linspace(74, 102, 5), 38 + brow_dy - arc])
    pts[27:31] = np.column_stack([np.full(4, 64.0), np.linspace(50, 72, 4)])
    pts[31:36] = np.column_stack([np.linspace(56, 72, 5), np.full(5, 78.0)])
    h = 4.0 * eye_open
    for start, cx in ((36, 40.0), (42, 88.0)):
        pts[start:start + 6] = [
            [cx - 8, 52], [cx - 3, 52 - h], [cx + 3, 52 - h],
            [cx + 8, 52], [cx + 3, 52 + h], [cx - 3, 52 + h],
        ]
    outer = np.linspace(np.pi, -np.pi, 12, endpoint=False)
    inner = np.linspace(np.pi, -np.pi, 8, endpoint=False)
    my = 96 + mouth_dy
    pts[48:60] = np.column_stack([64 + mouth_w * np.cos(outer), my - mouth_h * np.sin(outer)])
    pts[60:68] = np.column_stack([64 + 0.6 * mouth_w * np.cos(inner), my - 0.5 * mouth_h * np.sin(inner)])
    return pts


def region_intensities(class_index: int, domain_shift: float) -> Dict[str, float]:
    levels = {
        region: 0.35 + 0.5 * ((3 * class_index + 5 * r) % 8) / 7.0
        for r, region in enumerate(REGION_DRAW_ORDER)
    }
    return {k: (1 - domain_shift) * v + domain_shift * (1 - v) for k, v in levels.items()}


def render_face(points: np.ndarray, size: int, intensities: Dict[str, float], skin: float) -> np.ndarray:
    canvas = np.full((size, size), 0.08)
    scale = size / TEMPLATE_SIZE
    center = (int(round(64 * scale)), int(round(70 * scale)))
    axes = (int(round(48 * scale)), int(round(58 * scale)))
    cv2.ellipse(canvas, center, axes, 0, 0, 360, skin, thickness=-1)
    for region in REGION_DRAW_ORDER:
        start, stop = REGION_GROUPS[region]
        poly = np.round(points[start:stop]).astype(np.int32)
        value = float(intensities[region])
        if region in ("jaw", "right_eyebrow", "left_eyebrow"):
            cv2.polylines(canvas, [poly], False, value, thickness=max(1, int(round(3 * scale))))
        elif region == "nose":
            cv2.polylines(canvas, [poly[:4]], False, value, thickness=max(1, int(round(3 * scale))))
            cv2.fillConvexPoly(canvas, cv2.convexHull(poly[4:]), value)
        else:
            cv2.fillConvexPoly(canvas, cv2.convexHull(poly), value)
    return np.clip(canvas, 0.0, 1.0)


def _subject_pose(seed: int, subject: int) -> Tuple[np.ndarray, float, float]:
    rng = np.random.default_rng([seed, subject])
    offset = rng.integers(-3, 4, size=2).astype(np.float64)
    scale = rng.uniform(0.95, 1.05)
    tone = rng.uniform(-0.08, 0.08)
    return offset, scale, tone


def synth_dataset(spec: SynthSpec, out_dir: Union[str, Path], seed: int = 0) -> Tuple[Manifest, Path]:
    """Write images/, landmarks/ and manifest.json under out_dir"""
    out_dir = Path(out_dir)
    classes = list(DEFAULT_CLASSES[:spec.classes])
    size = spec.image_size
    ratio = size / TEMPLATE_SIZE
    records: List[SampleRecord] = []

    for s in range(spec.subjects):
        subject = f"s{s:03d}"
        offset, scale, tone = _subject_pose(seed, s)
        for c, name in enumerate(classes):
            base = template_landmarks(DEFORMATIONS[c])
            base = (base - 64.0) * scale + 64.0 + offset
            intensities = region_intensities(c, spec.domain_shift)
            sequence = f"{subject}_{name}"
            for frame in range(spec.per):
                rng = np.random.default_rng([seed, s, c, frame])
                jitter = spec.noise * 10.0 * rng.standard_normal(base.shape)
                points = (base + jitter) * ratio
                skin = 0.45 + tone + spec.noise * rng.standard_normal()
                shade = {k: v + spec.noise * rng.standard_normal() for k, v in intensities.items()}
                pixels = render_face(points, size, shade, skin)
                pixels = np.clip(pixels + spec.noise * rng.standard_normal(pixels.shape), 0.0, 1.0)

                stem = f"{sequence}_{frame:02d}"
                save_image(out_dir / "images" / f"{stem}.png", FaceImage(pixels))
                (out_dir / "landmarks").mkdir(parents=True, exist_ok=True)
                write_pts(out_dir / "landmarks" / f"{stem}.pts", LandmarkSet(points))
                records.append(SampleRecord(
                    image=f"images/{stem}.png",
                    landmarks=f"landmarks/{stem}.pts",
                    subject=subject,
                    sequence=sequence,
                    frame=frame,
                    label=name,
                ))

    manifest = Manifest(classes=classes, samples=records, root=out_dir)
    path = write_manifest(out_dir / "manifest.json", manifest)
    logger.info("synthetic_dataset_written", path=str(path), samples=len(records),
                subjects=spec.subjects, classes=spec.classes)
    return manifest, path
