"""
cGAN training pairs and synthetic training samples
Pairs a subject's neutral face with each of that subject's expression faces.
"""
from dataclasses import dataclass
from typing import Dict, List, Sequence

import numpy as np

from cgan.networks import Generator
from cgan.synthesis import synthesize_expressions, to_gan_size
from config.logging import get_logger
from dataeval.loader import AlignedFace, PatchDataset
from dataeval.manifest import NEUTRAL
from errors import ConfigurationError
from facegeom.image_io import FaceImage
from facegeom.patches import PatchGeometry, extract_patches

logger = get_logger(__name__)


def expression_classes(classes: Sequence[str]) -> List[str]:
    return [c for c in classes if c != NEUTRAL]


@dataclass
class GANPairs:
    neutral: np.ndarray
    expression: np.ndarray
    labels: np.ndarray
    subjects: List[str]

    def __len__(self) -> int:
        return int(self.labels.shape[0])


def neutral_faces(faces: Sequence[AlignedFace]) -> Dict[str, AlignedFace]:
    """First neutral face (by sequence, frame) of each subject"""
    chosen: Dict[str, AlignedFace] = {}
    for face in sorted(faces, key=lambda f: (f.record.subject, f.record.sequence, f.record.frame)):
        if face.record.target == NEUTRAL and face.record.subject not in chosen:
            chosen[face.record.subject] = face
    return chosen


def gan_pairs(faces: Sequence[AlignedFace], classes: Sequence[str], image_size: int) -> GANPairs:
    if NEUTRAL not in classes:
        raise ConfigurationError(f"cGAN augmentation needs a {NEUTRAL!r} class; classes are {list(classes)}")
    expressions = expression_classes(classes)
    anchors = neutral_faces(faces)
    x, y, labels, subjects = [], [], [], []
    for face in faces:
        target = face.record.target
        anchor = anchors.get(face.record.subject)
        if target == NEUTRAL or anchor is None:
            continue
        x.append(to_gan_size(anchor.image.pixels, image_size))
        y.append(to_gan_size(face.image.pixels, image_size))
        labels.append(expressions.index(target))
        subjects.append(face.record.subject)
    if not labels:
        raise ConfigurationError("no (neutral, expression) pairs found for cGAN training")
    return GANPairs(np.stack(x), np.stack(y), np.array(labels, dtype=np.int64), subjects)


def synthesize_training_set(
    generator: Generator,
    faces: Sequence[AlignedFace],
    classes: Sequence[str],
    geometry: PatchGeometry,
    z_seed: int,
) -> PatchDataset:
    """Seven synthetic expressions per subject neutral face, patch-extracted with the neutral's landmarks"""
    expressions = expression_classes(classes)
    patches, labels, subjects = [], [], []
    for position, (subject, anchor) in enumerate(sorted(neutral_faces(faces).items())):
        for label, pixels in synthesize_expressions(generator, anchor.image, z_seed=z_seed + position):
            patches.append(extract_patches(FaceImage(pixels), anchor.landmarks, geometry).patches)
            labels.append(list(classes).index(expressions[label]))
            subjects.append(subject)
    p = geometry.patch_size
    logger.info("cgan_samples_synthesized", subjects=len(set(subjects)), samples=len(labels))
    return PatchDataset(
        patches=np.stack(patches) if patches else np.zeros((0, 7, p, p)),
        labels=np.array(labels, dtype=np.int64),
        classes=list(classes),
        subjects=subjects,
        tags=["cgan"] * len(labels),
    )
