"""
Subject-independent folds
"""
from dataclasses import dataclass
from typing import Dict, Iterable, List

import numpy as np

from errors import ConfigurationError


@dataclass(frozen=True)
class FoldPlan:
    k: int
    seed: int
    assignments: Dict[str, int]

    def test_subjects(self, fold: int) -> List[str]:
        return sorted(s for s, f in self.assignments.items() if f == fold)

    def train_subjects(self, fold: int) -> List[str]:
        return sorted(s for s, f in self.assignments.items() if f != fold)

    def folds(self) -> List[List[str]]:
        return [self.test_subjects(i) for i in range(self.k)]

    def to_dict(self) -> dict:
        return {"k": self.k, "seed": self.seed, "folds": self.folds()}


def make_subject_folds(subjects: Iterable[str], k: int = 10, seed: int = 0) -> FoldPlan:
    """Shuffle distinct subjects under the seed and deal them round-robin into k folds"""
    unique = sorted(set(subjects))
    if k < 2:
        raise ConfigurationError(f"need at least 2 folds, got {k}")
    if len(unique) < k:
        raise ConfigurationError(f"{len(unique)} subjects cannot fill {k} subject-disjoint folds")
    order = np.random.default_rng(seed).permutation(len(unique))
    assignments = {unique[j]: position % k for position, j in enumerate(order)}
    return FoldPlan(k=k, seed=seed, assignments=assignments)
