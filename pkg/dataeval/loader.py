"""
Manifest → aligned faces → patch arrays
Per-image work fans out over a bounded thread pool; results keep manifest order.
"""
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np

from config.logging import get_logger
from dataeval.manifest import Manifest, SampleRecord
from facegeom.align import AlignmentSpec, align_face
from facegeom.image_io import FaceImage, load_image
from facegeom.landmarks import LandmarkSet, load_landmarks
from facegeom.patches import PatchGeometry, extract_patches

logger = get_logger(__name__)


@dataclass
class AlignedFace:
    record: SampleRecord
    image: FaceImage
    landmarks: LandmarkSet


@dataclass
class PatchDataset:
    """N patch sets with integer labels into `classes`, plus per-sample subject and provenance"""

    patches: np.ndarray
    labels: np.ndarray
    classes: List[str]
    subjects: List[str]
    tags: List[str] = field(default_factory=list)

    def __post_init__(self):
        if not self.tags:
            self.tags = ["original"] * len(self.subjects)

    def __len__(self) -> int:
        return int(self.labels.shape[0])

    def subset(self, subjects: Sequence[str]) -> "PatchDataset":
        keep = set(subjects)
        idx = [i for i, s in enumerate(self.subjects) if s in keep]
        return self.take(idx)

    def take(self, idx: Sequence[int]) -> "PatchDataset":
        idx = list(idx)
        return PatchDataset(
            patches=self.patches[idx],
            labels=self.labels[idx],
            classes=list(self.classes),
            subjects=[self.subjects[i] for i in idx],
            tags=[self.tags[i] for i in idx],
        )

    @classmethod
    def concat(cls, parts: Sequence["PatchDataset"]) -> "PatchDataset":
        return cls(
            patches=np.concatenate([p.patches for p in parts], axis=0),
            labels=np.concatenate([p.labels for p in parts], axis=0),
            classes=list(parts[0].classes),
            subjects=[s for p in parts for s in p.subjects],
            tags=[t for p in parts for t in p.tags],
        )


def _align_one(manifest: Manifest, record: SampleRecord, spec: AlignmentSpec) -> AlignedFace:
    image = load_image(manifest.image_path(record))
    landmarks = load_landmarks(manifest.landmarks_path(record))
    aligned, moved, _ = align_face(image, landmarks, spec)
    return AlignedFace(record=record, image=aligned, landmarks=moved)


def load_aligned_faces(
    manifest: Manifest, spec: AlignmentSpec = AlignmentSpec(), threads: int = 1
) -> List[AlignedFace]:
    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        faces = list(pool.map(lambda r: _align_one(manifest, r, spec), manifest.samples))
    logger.info("faces_aligned", count=len(faces), threads=threads)
    return faces


def patches_from_faces(
    faces: Sequence[AlignedFace],
    classes: Sequence[str],
    geometry: PatchGeometry = PatchGeometry(),
    threads: int = 1,
    tags: Optional[Sequence[str]] = None,
) -> PatchDataset:
    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        sets = list(pool.map(lambda f: extract_patches(f.image, f.landmarks, geometry).patches, faces))
    p = geometry.patch_size
    return PatchDataset(
        patches=np.stack(sets) if sets else np.zeros((0, 7, p, p)),
        labels=np.array([list(classes).index(f.record.target) for f in faces], dtype=np.int64),
        classes=list(classes),
        subjects=[f.record.subject for f in faces],
        tags=list(tags) if tags is not None else [f.record.provenance for f in faces],
    )


def load_patch_dataset(
    manifest: Manifest,
    alignment: AlignmentSpec = AlignmentSpec(),
    geometry: PatchGeometry = PatchGeometry(),
    threads: int = 1,
) -> PatchDataset:
    faces = load_aligned_faces(manifest, alignment, threads)
    return patches_from_faces(faces, manifest.classes, geometry, threads)
