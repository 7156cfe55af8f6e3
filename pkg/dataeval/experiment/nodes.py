"""
Experiment Nodes
prepare → augment_fold → train_fold → evaluate_fold → audit_fold → (next fold | aggregate)
"""
import functools
import json
from collections import Counter
from datetime import datetime
from pathlib import Path
from typing import Any, Dict, Sequence, Tuple

import numpy as np
import pandas as pd

from augment.expand import expand_dataset
from cgan.trainer import train_cgan
from config.logging import get_logger
from config.settings import write_resolved_config
from dataeval.config import ExperimentConfig, derive_seeds
from dataeval.experiment.state import ExperimentState
from dataeval.folds import make_subject_folds
from dataeval.gan_data import expression_classes, gan_pairs, synthesize_training_set
from dataeval.labeling import label_manifest
from dataeval.loader import AlignedFace, PatchDataset, load_aligned_faces, patches_from_faces
from dataeval.manifest import load_manifest
from dataeval.metrics import evaluate
from dataeval.plots import plot_confusion
from errors import FoldError, LeakageError
from model.mfp import MFPModel
from model.trainer import fit

logger = get_logger(__name__)


def log_step(state: ExperimentState, step_name: str, result: dict):
    entry = {
        "timestamp": datetime.now().isoformat(),
        "step": step_name,
        "fold": state.get("current_fold"),
        "result": result,
    }
    state["execution_log"].append(entry)
    logger.info("experiment_step", **entry)


def fold_step(node):
    """Any failure inside a fold aborts the run as a FoldError carrying the fold id"""

    @functools.wraps(node)
    def wrapper(state: ExperimentState) -> ExperimentState:
        try:
            return node(state)
        except FoldError:
            raise
        except Exception as e:
            logger.error("fold_failed", fold=state.get("current_fold"), step=node.__name__, error=str(e))
            raise FoldError(state.get("current_fold", -1), e) from e

    return wrapper


def prepare_node(state: ExperimentState) -> ExperimentState:
    """Load, label, align and patch the whole manifest; plan the folds"""
    config = state["config"]
    seeds = derive_seeds(config.seed)
    manifest = load_manifest(state["manifest_path"])
    if config.labeling is not None:
        manifest = label_manifest(manifest, config.labeling)

    faces = load_aligned_faces(manifest, config.alignment, config.threads)
    dataset = patches_from_faces(faces, manifest.classes, config.patches, config.threads)
    plan = make_subject_folds(manifest.subjects(), config.folds, seeds["folds"])

    out_dir = Path(state["out_dir"])
    write_resolved_config(out_dir, config.model_dump(mode="json"))
    (out_dir / "folds.json").write_text(json.dumps(plan.to_dict(), indent=2), encoding="utf-8")

    state.update({
        "seeds": seeds,
        "classes": list(manifest.classes),
        "faces": faces,
        "dataset": dataset,
        "fold_plan": plan,
        "current_fold": 0,
    })
    log_step(state, "prepare", {"samples": len(dataset), "subjects": len(manifest.subjects()), "folds": plan.k})
    return state


def augment_training_set(
    config: ExperimentConfig,
    train: PatchDataset,
    faces: Sequence[AlignedFace],
    seeds: Dict[str, int],
    fold: int = 0,
) -> Tuple[PatchDataset, Dict[str, Any]]:
    """
    Apply the configured augmentation to a training set: cGAN synthesis first, then TF expansion.
    `faces` must hold training subjects only. Returns the set and what was fitted on whom.
    """
    fitted: Dict[str, Any] = {"gan_subjects": [], "zca_subjects": []}
    classes = list(train.classes)

    if config.uses_cgan:
        gan_config = config.cgan.model_copy(update={
            "num_labels": len(expression_classes(classes)),
            "seed": seeds["gan"] + fold,
        })
        pairs = gan_pairs(faces, classes, gan_config.image_size)
        result = train_cgan(pairs.neutral, pairs.expression, pairs.labels, gan_config)
        synthetic = synthesize_training_set(
            result.generator, faces, classes, config.patches, z_seed=seeds["gan"] + 1000 * fold
        )
        fitted["gan_subjects"] = sorted(set(pairs.subjects))
        train = PatchDataset.concat([train, synthetic])

    if config.uses_tf:
        expanded = expand_dataset(
            train.patches, train.labels, config.tf_plan,
            seed=seeds["augmentation"] + fold, zca_epsilon=config.zca_epsilon,
        )
        if expanded.zca_stats is not None:
            fitted["zca_subjects"] = sorted(set(train.subjects))
        source = expanded.source_index
        train = PatchDataset(
            patches=expanded.patches,
            labels=expanded.labels,
            classes=classes,
            subjects=[train.subjects[i] for i in source],
            tags=[train.tags[i] if tag == "original" else tag for i, tag in zip(source, expanded.tags)],
        )
    return train, fitted


@fold_step
def augment_fold_node(state: ExperimentState) -> ExperimentState:
    """Build the fold's training set from training subjects only"""
    fold = state["current_fold"]
    plan = state["fold_plan"]
    train_subjects = plan.train_subjects(fold)
    test_subjects = plan.test_subjects(fold)
    dataset = state["dataset"]

    keep = set(train_subjects)
    train_faces = [f for f in state["faces"] if f.record.subject in keep]
    train, fitted = augment_training_set(
        state["config"], dataset.subset(train_subjects), train_faces, state["seeds"], fold
    )
    test = dataset.subset(test_subjects)

    provenance: Dict[str, Any] = {
        "fold": fold,
        "train_subjects": train_subjects,
        "test_subjects": test_subjects,
        **fitted,
        "training_sample_subjects": sorted(set(train.subjects)),
        "counts": dict(sorted(Counter(train.tags).items())),
    }
    state.update({"fold_train": train, "fold_test": test, "fold_provenance": provenance})
    log_step(state, "augment_fold", {"train": len(train), "test": len(test), "counts": provenance["counts"]})
    return state


@fold_step
def train_fold_node(state: ExperimentState) -> ExperimentState:
    config = state["config"]
    seeds = state["seeds"]
    fold = state["current_fold"]
    train = state["fold_train"]
    model_config = config.model.model_copy(update={
        "num_classes": len(state["classes"]),
        "patch_size": config.patches.patch_size,
        "seed": seeds["init"] + fold,
    })
    model = MFPModel(model_config)
    training = config.training.model_copy(update={"seed": seeds["dropout"] + fold})
    history = fit(model, train.patches, train.labels, training)
    if history:
        pd.DataFrame(history).to_csv(Path(state["out_dir"]) / f"history_fold{fold:02d}.csv", index=False)
    state.update({"fold_model": model, "fold_history": history})
    log_step(state, "train_fold", {"epochs": len(history), "final_loss": history[-1]["loss"] if history else None})
    return state


@fold_step
def evaluate_fold_node(state: ExperimentState) -> ExperimentState:
    fold = state["current_fold"]
    test = state["fold_test"]
    cm, accuracy = evaluate(state["fold_model"], test)
    cm.save_csv(Path(state["out_dir"]) / f"confusion_fold{fold:02d}.csv")
    state["confusions"].append(cm)
    state["fold_results"].append({
        "fold": fold,
        "accuracy": accuracy,
        "train_size": len(state["fold_train"]),
        "test_size": len(test),
        "test_subjects": len(state["fold_provenance"]["test_subjects"]),
    })
    log_step(state, "evaluate_fold", {"accuracy": accuracy, "test": len(test)})
    return state


def audit_fold_provenance(entry: Dict[str, Any]) -> None:
    """Raise LeakageError if any test subject reached training samples, ZCA fitting or GAN training"""
    test = set(entry["test_subjects"])
    for key in ("train_subjects", "training_sample_subjects", "zca_subjects", "gan_subjects"):
        leaked = sorted(test & set(entry.get(key, [])))
        if leaked:
            raise LeakageError(f"fold {entry['fold']}: test subjects {leaked} found in {key}")


@fold_step
def audit_fold_node(state: ExperimentState) -> ExperimentState:
    entry = state["fold_provenance"]
    audit_fold_provenance(entry)
    state["provenance"].append(entry)
    logger.info("leakage_audit_passed", fold=state["current_fold"])
    state.update({
        "current_fold": state["current_fold"] + 1,
        "fold_train": None,
        "fold_test": None,
        "fold_model": None,
    })
    return state


def aggregate_node(state: ExperimentState) -> ExperimentState:
    out_dir = Path(state["out_dir"])
    total = state["confusions"][0]
    for cm in state["confusions"][1:]:
        total = total + cm
    total.save_csv(out_dir / "confusion_aggregate.csv")
    plot_confusion(total, out_dir / "confusion_aggregate.svg", title=f"augmentation={state['config'].augmentation}")

    metrics = pd.DataFrame(state["fold_results"])
    metrics.to_csv(out_dir / "metrics.csv", index=False)
    accuracies = metrics["accuracy"].to_numpy()

    summary = {
        "augmentation": state["config"].augmentation,
        "folds": len(accuracies),
        "mean_accuracy": float(np.mean(accuracies)),
        "std_accuracy": float(np.std(accuracies)),
        "aggregate_accuracy": total.accuracy,
        "samples_evaluated": total.total,
    }
    provenance = {
        "config": state["config"].model_dump(mode="json"),
        "seeds": state["seeds"],
        "fold_plan": state["fold_plan"].to_dict(),
        "folds": state["provenance"],
        "summary": summary,
    }
    (out_dir / "provenance.json").write_text(json.dumps(provenance, indent=2, sort_keys=True), encoding="utf-8")

    state.update({"summary": summary, "status": "success", "end_time": datetime.now()})
    log_step(state, "aggregate", summary)
    return state


def should_continue(state: ExperimentState) -> str:
    if state["current_fold"] < state["fold_plan"].k:
        return "next_fold"
    return "aggregate"


__all__ = [
    "aggregate_node",
    "audit_fold_node",
    "audit_fold_provenance",
    "augment_fold_node",
    "augment_training_set",
    "evaluate_fold_node",
    "prepare_node",
    "should_continue",
    "train_fold_node",
]
