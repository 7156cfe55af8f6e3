"""
Dataset expansion
Originals first, then one transformed copy of every sample per plan entry, labels unchanged.
"""
from dataclasses import dataclass
from typing import List, Optional, Sequence, Union

import numpy as np

from augment.transforms import TransformationFunction, ZCAWhiten, apply_tf, parse_tf
from augment.zca import DEFAULT_EPSILON, ZCAStatistics, fit_region_zca
from config.logging import get_logger
from errors import ConfigurationError, ShapeError

logger = get_logger(__name__)


@dataclass
class AugmentedSet:
    patches: np.ndarray
    labels: np.ndarray
    tags: List[str]
    source_index: np.ndarray
    zca_stats: Optional[List[ZCAStatistics]] = None

    def __len__(self) -> int:
        return self.labels.shape[0]


def resolve_plan(plan: Sequence[Union[str, TransformationFunction]]) -> List[TransformationFunction]:
    return [parse_tf(tf) if isinstance(tf, str) else tf for tf in plan]


def expand_dataset(
    patches: np.ndarray,
    labels: Sequence[int],
    plan: Sequence[Union[str, TransformationFunction]],
    seed: int = 0,
    zca_stats: Optional[List[ZCAStatistics]] = None,
    zca_epsilon: float = DEFAULT_EPSILON,
) -> AugmentedSet:
    """
    patches: N×7×P×P patch sets. ZCA statistics, when the plan whitens and
    none are given, are fitted per region on exactly these samples.
    """
    tfs = resolve_plan(plan)
    if not tfs:
        raise ConfigurationError("augmentation plan must not be empty")
    source = np.asarray(patches, dtype=np.float64)
    targets = np.asarray(labels, dtype=np.int64)
    if source.ndim != 4 or source.shape[0] != targets.shape[0]:
        raise ShapeError(f"expand_dataset needs N×7×P×P patches with N labels, got {source.shape} / {targets.shape}")

    if any(isinstance(tf, ZCAWhiten) for tf in tfs) and zca_stats is None:
        zca_stats = fit_region_zca(source, zca_epsilon)

    n = source.shape[0]
    blocks = [source.copy()]
    tags = ["original"] * n
    for position, tf in enumerate(tfs):
        rng = np.random.default_rng([seed, position])
        block = np.empty_like(source)
        for i in range(n):
            sample_seed = int(rng.integers(0, 2**63 - 1))
            for region in range(source.shape[1]):
                stats = zca_stats[region] if zca_stats is not None else None
                # offsets are shared by the seven regions of one sample
                region_rng = np.random.default_rng(sample_seed)
                block[i, region] = apply_tf(source[i, region], tf, stats=stats, rng=region_rng)
        blocks.append(block)
        tags.extend([f"tf:{tf.spec()}"] * n)

    expanded = AugmentedSet(
        patches=np.concatenate(blocks, axis=0),
        labels=np.tile(targets, 1 + len(tfs)),
        tags=tags,
        source_index=np.tile(np.arange(n), 1 + len(tfs)),
        zca_stats=zca_stats,
    )
    logger.info("dataset_expanded", originals=n, transforms=len(tfs), total=len(expanded))
    return expanded
