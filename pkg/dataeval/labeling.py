"""
Frame labeling for onset-to-peak sequences
prefix:     first n frames neutral, last s frames the sequence label, the rest dropped
from_frame: frames before position f neutral, the rest the sequence label
"""
from typing import List, Literal, Sequence

from pydantic import BaseModel, Field

from config.logging import get_logger
from dataeval.manifest import NEUTRAL, Manifest, SampleRecord
from errors import LabelingError

logger = get_logger(__name__)


class FramePolicy(BaseModel):
    kind: Literal["prefix", "from_frame"] = "prefix"
    neutral_prefix: int = Field(default=7, ge=0)
    expression_suffix: int = Field(default=3, ge=0)
    from_frame: int = Field(default=3, ge=0)


def label_sequence_frames(
    records: Sequence[SampleRecord], policy: FramePolicy = FramePolicy(), neutral: str = NEUTRAL
) -> List[SampleRecord]:
    """Resolved copies of one sequence's records, ordered by frame index"""
    frames = sorted(records, key=lambda r: r.frame)
    if not frames:
        return []
    sequence_id = f"{frames[0].subject}/{frames[0].sequence}"
    n = len(frames)

    if policy.kind == "prefix":
        need = policy.neutral_prefix + policy.expression_suffix
        if n < need:
            raise LabelingError(
                f"sequence {sequence_id} has {n} frames; prefix policy needs at least {need}"
            )
        head = frames[:policy.neutral_prefix]
        tail = frames[n - policy.expression_suffix:] if policy.expression_suffix else []
        return (
            [r.model_copy(update={"frame_label": neutral}) for r in head]
            + [r.model_copy(update={"frame_label": r.label}) for r in tail]
        )

    return [
        r.model_copy(update={"frame_label": neutral if position < policy.from_frame else r.label})
        for position, r in enumerate(frames)
    ]


def label_manifest(manifest: Manifest, policy: FramePolicy) -> Manifest:
    labeled: List[SampleRecord] = []
    for records in manifest.sequences().values():
        labeled.extend(label_sequence_frames(records, policy))
    logger.info(
        "frames_labeled",
        policy=policy.kind,
        sequences=len(manifest.sequences()),
        kept=len(labeled),
        dropped=len(manifest.samples) - len(labeled),
    )
    return Manifest(manifest.classes, labeled, manifest.root)
