"""
Expression synthesis from a neutral face
"""
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import cv2
import numpy as np

from cgan.networks import Generator
from config.logging import get_logger
from facegeom.image_io import FaceImage, save_image
from facegeom.landmarks import LandmarkSet, write_pts

logger = get_logger(__name__)


def to_gan_size(pixels: np.ndarray, side: int) -> np.ndarray:
    if pixels.shape == (side, side):
        return np.asarray(pixels, dtype=np.float64)
    return np.clip(cv2.resize(np.asarray(pixels, dtype=np.float64), (side, side), interpolation=cv2.INTER_AREA), 0.0, 1.0)


def from_gan_size(pixels: np.ndarray, shape: Tuple[int, int]) -> np.ndarray:
    if pixels.shape == shape:
        return pixels
    resized = cv2.resize(pixels, (shape[1], shape[0]), interpolation=cv2.INTER_LINEAR)
    return np.clip(resized, 0.0, 1.0)


def synthesize_expressions(
    generator: Generator,
    neutral: Union[FaceImage, np.ndarray],
    labels: Optional[Sequence[int]] = None,
    z_seed: int = 0,
) -> List[Tuple[int, np.ndarray]]:
    """One image per conditioning label, same dims as the neutral face, values in [0,1]"""
    pixels = neutral.pixels if isinstance(neutral, FaceImage) else np.asarray(neutral, dtype=np.float64)
    labels = list(range(generator.num_labels)) if labels is None else list(labels)
    small = to_gan_size(pixels, generator.image_size)
    outputs = []
    for label in labels:
        z = np.random.default_rng([z_seed, label]).standard_normal((1, generator.z_dim))
        fake = generator.forward(small[None, None], z, [label]).numpy()[0, 0]
        outputs.append((label, from_gan_size(fake, pixels.shape)))
    return outputs


def write_synthesized(
    out_dir: Union[str, Path],
    synthesized: Sequence[Tuple[int, np.ndarray]],
    landmarks: LandmarkSet,
    subject: str,
    label_names: Sequence[str],
    stem: str = "synth",
) -> List[Dict[str, object]]:
    """Write PNGs plus the shared aligned landmarks; returns manifest-fragment records"""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    pts_path = write_pts(out_dir / f"{stem}_{subject}.pts", landmarks)
    records = []
    for label, pixels in synthesized:
        name = label_names[label]
        image_path = save_image(out_dir / f"{stem}_{subject}_{name}.png", FaceImage(pixels))
        records.append({
            "image": image_path.name,
            "landmarks": pts_path.name,
            "subject": subject,
            "sequence": f"{stem}_{subject}_{name}",
            "frame": 0,
            "label": name,
            "provenance": "cgan",
        })
    logger.info("expressions_synthesized", subject=subject, count=len(records))
    return records
