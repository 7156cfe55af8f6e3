"""
Dataset manifests
JSON: {"classes": [names], "samples": [{image, landmarks, subject, sequence, frame, label, frame_label?}]}
Paths are relative to the manifest file.
"""
import json
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Union

from pydantic import BaseModel, Field, ValidationError

from config.logging import get_logger
from errors import ManifestError

logger = get_logger(__name__)

DEFAULT_CLASSES = ("neutral", "anger", "contempt", "disgust", "fear", "happy", "sadness", "surprise")
NEUTRAL = "neutral"


class SampleRecord(BaseModel):
    image: str
    landmarks: str
    subject: str
    sequence: str
    frame: int = Field(ge=0)
    label: str
    frame_label: Optional[str] = None
    provenance: str = "original"

    @property
    def key(self) -> tuple:
        return (self.subject, self.sequence, self.frame)

    @property
    def target(self) -> str:
        """Resolved per-frame label when labeling ran, else the sequence label"""
        return self.frame_label if self.frame_label is not None else self.label


@dataclass
class Manifest:
    classes: List[str]
    samples: List[SampleRecord]
    root: Path = field(default_factory=Path)

    def image_path(self, record: SampleRecord) -> Path:
        return self.root / record.image

    def landmarks_path(self, record: SampleRecord) -> Path:
        return self.root / record.landmarks

    def subjects(self) -> List[str]:
        return sorted({r.subject for r in self.samples})

    def class_index(self, name: str) -> int:
        return self.classes.index(name)

    def subset(self, subjects: Sequence[str]) -> "Manifest":
        keep = set(subjects)
        return Manifest(self.classes, [r for r in self.samples if r.subject in keep], self.root)

    def sequences(self) -> Dict[tuple, List[SampleRecord]]:
        groups: Dict[tuple, List[SampleRecord]] = {}
        for record in self.samples:
            groups.setdefault((record.subject, record.sequence), []).append(record)
        return groups

    def to_dict(self) -> dict:
        return {
            "classes": list(self.classes),
            "samples": [r.model_dump(exclude_none=True) for r in self.samples],
        }


def validate_records(
    records: Sequence[SampleRecord], classes: Sequence[str], root: Optional[Path] = None
) -> List[str]:
    """Every problem found, in manifest order; empty when valid"""
    problems: List[str] = []
    allowed = ", ".join(classes)
    counts = Counter(r.key for r in records)
    for key, count in counts.items():
        if count > 1:
            problems.append(f"duplicate frame key (subject={key[0]}, sequence={key[1]}, frame={key[2]}) x{count}")
    for i, r in enumerate(records):
        if r.label not in classes:
            problems.append(f"samples[{i}]: unknown label {r.label!r}; allowed labels: {allowed}")
        if r.frame_label is not None and r.frame_label not in classes:
            problems.append(f"samples[{i}]: unknown frame_label {r.frame_label!r}; allowed labels: {allowed}")
        if root is not None:
            for kind, rel in (("image", r.image), ("landmarks", r.landmarks)):
                if not (root / rel).is_file():
                    problems.append(f"samples[{i}]: missing {kind} file {rel}")
    return problems


def load_manifest(
    path: Union[str, Path], classes: Optional[Sequence[str]] = None, check_files: bool = True
) -> Manifest:
    path = Path(path)
    try:
        raw = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ManifestError([f"not found or unreadable: {e}"], str(path)) from e
    try:
        data = json.loads(raw)
    except json.JSONDecodeError as e:
        raise ManifestError([f"not valid JSON: {e}"], str(path)) from e
    if not isinstance(data, dict) or not isinstance(data.get("samples"), list):
        raise ManifestError(["top level must be an object with a 'samples' list"], str(path))

    class_set = list(classes or data.get("classes") or DEFAULT_CLASSES)
    problems: List[str] = []
    records: List[SampleRecord] = []
    for i, item in enumerate(data["samples"]):
        try:
            records.append(SampleRecord.model_validate(item))
        except ValidationError as e:
            for err in e.errors():
                where = ".".join(str(p) for p in err["loc"])
                problems.append(f"samples[{i}].{where}: {err['msg']}")
    problems.extend(validate_records(records, class_set, path.parent if check_files else None))
    if problems:
        raise ManifestError(problems, str(path))

    manifest = Manifest(classes=class_set, samples=records, root=path.parent)
    logger.info("manifest_loaded", path=str(path), samples=len(records), subjects=len(manifest.subjects()))
    return manifest


def write_manifest(path: Union[str, Path], manifest: Manifest) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(manifest.to_dict(), indent=2, sort_keys=True), encoding="utf-8")
    return path
