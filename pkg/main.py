"""
MFP-Net command line
One command per process; every output lands under --out next to resolved_config.json.
"""
import argparse
import json
import sys
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional

import numpy as np
import pandas as pd

from config.logging import configure_logging, get_logger
from config.settings import get_settings, load_config_file, merge_layers, write_resolved_config
from errors import MFPNetError

logger = get_logger(__name__)

COMMANDS: Dict[str, Callable[[argparse.Namespace], int]] = {}


def command(name: str):
    def register(fn):
        COMMANDS[name] = fn
        return fn
    return register


# ---------------------------------------------------------------------------
# Configuration layering
# ---------------------------------------------------------------------------

def flag_layer(args: argparse.Namespace) -> Dict[str, Any]:
    """Only flags the user actually gave; None means absent and never overrides"""
    patch_size = getattr(args, "patch_size", None)
    return {
        "seed": getattr(args, "seed", None),
        "folds": getattr(args, "folds", None),
        "augmentation": getattr(args, "augment", None),
        "threads": getattr(args, "threads", None),
        "tf_plan": args.plan.split(",") if getattr(args, "plan", None) else None,
        "patches": {"patch_size": patch_size},
        "model": {"patch_size": patch_size},
        "training": {
            "epochs": getattr(args, "epochs", None),
            "batch_size": getattr(args, "batch_size", None),
            "learning_rate": getattr(args, "learning_rate", None),
        },
        "cgan": {
            "steps": getattr(args, "steps", None),
            "image_size": getattr(args, "gan_size", None),
        },
    }


def resolve_config(args: argparse.Namespace):
    """Flags > config file > defaults; the patch geometry is authoritative for the model's patch size"""
    from dataeval.config import ExperimentConfig

    settings = get_settings()
    merged = merge_layers({"threads": settings.threads}, load_config_file(args.config), flag_layer(args))
    config = ExperimentConfig.model_validate(merged)
    if config.model.patch_size != config.patches.patch_size:
        config = config.model_copy(update={
            "model": config.model.model_copy(update={"patch_size": config.patches.patch_size})
        })
    return config


def out_dir(args: argparse.Namespace) -> Path:
    return Path(args.out) if args.out else Path(get_settings().output_root) / args.command


def finish(args: argparse.Namespace, resolved: Dict[str, Any]) -> Path:
    out = out_dir(args)
    write_resolved_config(out, {"command": args.command, **resolved})
    return out


def report(**values: Any) -> None:
    """Machine-readable result line on stdout"""
    print(json.dumps(values, sort_keys=True))


def load_inputs(config, manifest_path: str):
    """Manifest → labeled, aligned faces → patch dataset"""
    from dataeval.labeling import label_manifest
    from dataeval.loader import load_aligned_faces, patches_from_faces
    from dataeval.manifest import load_manifest

    manifest = load_manifest(manifest_path)
    if config.labeling is not None:
        manifest = label_manifest(manifest, config.labeling)
    faces = load_aligned_faces(manifest, config.alignment, config.threads)
    dataset = patches_from_faces(faces, manifest.classes, config.patches, config.threads)
    return manifest, faces, dataset


def save_dataset(path: Path, dataset) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    np.savez(
        path,
        patches=dataset.patches,
        labels=dataset.labels,
        classes=np.array(dataset.classes),
        subjects=np.array(dataset.subjects),
        tags=np.array(dataset.tags),
    )
    return path


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

@command("shape-plan")
def cmd_shape_plan(args: argparse.Namespace) -> int:
    from model.mfp import shape_plan

    config = resolve_config(args)
    model_config = config.model.model_copy(update={"num_classes": args.classes or config.model.num_classes})
    plan = shape_plan(model_config)
    out = finish(args, {"model": model_config.model_dump(mode="json")})
    plan.to_frame().to_csv(out / "shape_plan.csv", index=False)
    print(plan.to_text())
    return 0


@command("synth-data")
def cmd_synth_data(args: argparse.Namespace) -> int:
    from dataeval.synth import SynthSpec, synth_dataset

    overrides = merge_layers(load_config_file(args.config).get("synth", {}), {
        "subjects": args.subjects,
        "classes": args.classes,
        "per": args.per,
        "noise": args.noise,
        "image_size": args.image_size,
        "domain_shift": args.domain_shift,
    })
    spec = SynthSpec.model_validate(overrides)
    seed = args.seed if args.seed is not None else 0
    out = finish(args, {"synth": spec.model_dump(mode="json"), "seed": seed})
    manifest, path = synth_dataset(spec, out, seed=seed)
    report(manifest=str(path), samples=len(manifest.samples), subjects=len(manifest.subjects()))
    return 0


@command("extract-patches")
def cmd_extract_patches(args: argparse.Namespace) -> int:
    config = resolve_config(args)
    _, _, dataset = load_inputs(config, args.manifest)
    out = finish(args, config.model_dump(mode="json"))
    path = save_dataset(out / "patches.npz", dataset)
    report(patches=str(path), samples=len(dataset), patch_size=config.patches.patch_size)
    return 0


@command("augment")
def cmd_augment(args: argparse.Namespace) -> int:
    from augment.expand import expand_dataset
    from dataeval.config import derive_seeds

    config = resolve_config(args)
    _, _, dataset = load_inputs(config, args.manifest)
    seeds = derive_seeds(config.seed)
    expanded = expand_dataset(
        dataset.patches, dataset.labels, config.tf_plan,
        seed=seeds["augmentation"], zca_epsilon=config.zca_epsilon,
    )
    out = finish(args, config.model_dump(mode="json"))
    path = out / "augmented.npz"
    np.savez(
        path,
        patches=expanded.patches,
        labels=expanded.labels,
        tags=np.array(expanded.tags),
        source_index=expanded.source_index,
        subjects=np.array([dataset.subjects[i] for i in expanded.source_index]),
        classes=np.array(dataset.classes),
    )
    report(augmented=str(path), samples=len(expanded), originals=len(dataset), plan=list(config.tf_plan))
    return 0


@command("gan-train")
def cmd_gan_train(args: argparse.Namespace) -> int:
    from cgan.trainer import save_cgan, train_cgan
    from dataeval.config import derive_seeds
    from dataeval.gan_data import expression_classes, gan_pairs

    config = resolve_config(args)
    manifest, faces, _ = load_inputs(config, args.manifest)
    gan_config = config.cgan.model_copy(update={
        "num_labels": len(expression_classes(manifest.classes)),
        "seed": derive_seeds(config.seed)["gan"],
    })
    pairs = gan_pairs(faces, manifest.classes, gan_config.image_size)
    out = finish(args, {**config.model_dump(mode="json"), "cgan": gan_config.model_dump(mode="json")})
    result = train_cgan(pairs.neutral, pairs.expression, pairs.labels, gan_config)
    save_cgan(out, result)
    pd.DataFrame(result.history).to_csv(out / "gan_history.csv", index=False)
    final = result.history[-1] if result.history else {}
    report(model=str(out), pairs=len(pairs), steps=gan_config.steps, final_mse=final.get("g_mse"))
    return 0


@command("gan-generate")
def cmd_gan_generate(args: argparse.Namespace) -> int:
    from cgan.synthesis import synthesize_expressions, write_synthesized
    from cgan.trainer import load_cgan
    from dataeval.config import derive_seeds
    from dataeval.gan_data import expression_classes, neutral_faces
    from dataeval.manifest import Manifest, SampleRecord, write_manifest
    from errors import ConfigurationError

    config = resolve_config(args)
    gan = load_cgan(args.model)
    manifest, faces, _ = load_inputs(config, args.manifest)
    label_names = expression_classes(manifest.classes)
    if gan.generator.num_labels != len(label_names):
        raise ConfigurationError(
            f"generator conditions on {gan.generator.num_labels} labels, manifest has {len(label_names)} expressions"
        )
    z_seed = derive_seeds(config.seed)["gan"]
    out = finish(args, {**config.model_dump(mode="json"), "gan_model": str(args.model)})

    records: List[Dict[str, Any]] = []
    for position, (subject, anchor) in enumerate(sorted(neutral_faces(faces).items())):
        synthesized = synthesize_expressions(gan.generator, anchor.image, z_seed=z_seed + position)
        records.extend(write_synthesized(out / "images", synthesized, anchor.landmarks, subject, label_names))
    for record in records:
        record["image"] = f"images/{record['image']}"
        record["landmarks"] = f"images/{record['landmarks']}"
    path = write_manifest(out / "manifest.json", Manifest(
        classes=list(manifest.classes),
        samples=[SampleRecord.model_validate(r) for r in records],
        root=out,
    ))
    report(manifest=str(path), samples=len(records))
    return 0


@command("train")
def cmd_train(args: argparse.Namespace) -> int:
    from dataeval.config import derive_seeds
    from dataeval.experiment.nodes import augment_training_set
    from model.mfp import MFPModel
    from model.trainer import fit, predict_batch, save_model

    config = resolve_config(args)
    manifest, faces, dataset = load_inputs(config, args.manifest)
    seeds = derive_seeds(config.seed)
    train, _ = augment_training_set(config, dataset, faces, seeds)

    model = MFPModel(config.model.model_copy(update={"num_classes": len(manifest.classes), "seed": seeds["init"]}))
    out = finish(args, config.model_dump(mode="json"))
    history = fit(model, train.patches, train.labels, config.training.model_copy(update={"seed": seeds["dropout"]}))
    save_model(out, model, manifest.classes)
    pd.DataFrame(history).to_csv(out / "history.csv", index=False)

    predicted, _ = predict_batch(model, dataset.patches)
    accuracy = float(np.mean(predicted == dataset.labels))
    report(model=str(out), train_samples=len(train), train_accuracy=accuracy)
    return 0


def _evaluate_command(args: argparse.Namespace, cross: bool) -> int:
    from dataeval.metrics import cross_evaluate, evaluate
    from dataeval.plots import plot_confusion
    from errors import ConfigurationError
    from model.trainer import load_model

    config = resolve_config(args)
    model, model_classes = load_model(args.model)
    config = config.model_copy(update={"patches": config.patches.model_copy(
        update={"patch_size": model.config.patch_size})})
    manifest, _, dataset = load_inputs(config, args.manifest)
    if cross:
        cm, accuracy = cross_evaluate(model, model_classes, dataset)
    else:
        if list(manifest.classes) != list(model_classes):
            raise ConfigurationError(
                f"model classes {list(model_classes)} differ from manifest classes {list(manifest.classes)}; "
                "use cross-eval"
            )
        cm, accuracy = evaluate(model, dataset)
    out = finish(args, {**config.model_dump(mode="json"), "model_dir": str(args.model)})
    cm.save_csv(out / "confusion.csv")
    plot_confusion(cm, out / "confusion.svg", title=args.command)
    report(accuracy=accuracy, samples=cm.total)
    return 0


@command("eval")
def cmd_eval(args: argparse.Namespace) -> int:
    return _evaluate_command(args, cross=False)


@command("cross-eval")
def cmd_cross_eval(args: argparse.Namespace) -> int:
    return _evaluate_command(args, cross=True)


@command("fine-tune")
def cmd_fine_tune(args: argparse.Namespace) -> int:
    from dataeval.config import derive_seeds
    from dataeval.finetune import fine_tune
    from model.trainer import load_model, save_model

    config = resolve_config(args)
    model, model_classes = load_model(args.model)
    config = config.model_copy(update={"patches": config.patches.model_copy(
        update={"patch_size": model.config.patch_size})})
    fraction = args.fraction if args.fraction is not None else (config.fine_tune_fraction or 0.8)
    _, _, dataset = load_inputs(config, args.manifest)
    training = config.training.model_copy(update={"seed": derive_seeds(config.seed)["dropout"]})

    out = finish(args, {**config.model_dump(mode="json"), "model_dir": str(args.model), "fraction": fraction})
    model, result = fine_tune(model, model_classes, dataset, fraction=fraction,
                              epochs=training.epochs, training=training)
    save_model(out, model, model_classes)
    result.confusion.save_csv(out / "confusion.csv")
    summary = {
        "pre_accuracy": result.pre_accuracy,
        "post_accuracy": result.post_accuracy,
        "delta": result.delta,
        "tune_subjects": result.tune_subjects,
        "test_subjects": result.test_subjects,
    }
    (out / "fine_tune.json").write_text(json.dumps(summary, indent=2, sort_keys=True), encoding="utf-8")
    report(pre_accuracy=result.pre_accuracy, post_accuracy=result.post_accuracy)
    return 0


@command("plot")
def cmd_plot(args: argparse.Namespace) -> int:
    from dataeval.metrics import ConfusionMatrix
    from dataeval.plots import plot_confusion, plot_history

    if args.confusion:
        cm = ConfusionMatrix.load_csv(args.confusion)
        out = finish(args, {"confusion": str(args.confusion)})
        path = plot_confusion(cm, out / f"{Path(args.confusion).stem}.svg", title=args.title or "Confusion matrix")
    else:
        history = pd.read_csv(args.history).to_dict(orient="records")
        if not history:
            raise ValueError(f"history file {args.history} has no rows")
        out = finish(args, {"history": str(args.history)})
        x_key = "epoch" if "epoch" in history[0] else "step"
        path = plot_history(history, out / f"{Path(args.history).stem}.svg", x_key=x_key,
                            title=args.title or "Training history")
    report(plot=str(path))
    return 0


@command("experiment")
def cmd_experiment(args: argparse.Namespace) -> int:
    from dataeval.experiment import run_experiment

    config = resolve_config(args)
    out = finish(args, config.model_dump(mode="json"))
    result = run_experiment(config, args.manifest, str(out))
    report(**result["summary"])
    return 0


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config file; flags override its values")
    common.add_argument("--out", help="Output directory (default: $MFPNET_OUT/<command>)")
    common.add_argument("--seed", type=int, help="Experiment seed")
    common.add_argument("--threads", type=int, help="Worker cap for image loading and patch extraction")

    data = argparse.ArgumentParser(add_help=False)
    data.add_argument("--manifest", required=True, help="Dataset manifest JSON")
    data.add_argument("--patch-size", dest="patch_size", type=int, help="Patch side P (>= 36)")

    training = argparse.ArgumentParser(add_help=False)
    training.add_argument("--epochs", type=int)
    training.add_argument("--batch-size", dest="batch_size", type=int)
    training.add_argument("--learning-rate", dest="learning_rate", type=float)

    augmentation = argparse.ArgumentParser(add_help=False)
    augmentation.add_argument("--augment", choices=["none", "cgan", "tf", "both"])
    augmentation.add_argument("--plan", help="Comma-separated TF plan, e.g. rotate90,translate:2,-1,zca")
    augmentation.add_argument("--steps", type=int, help="cGAN training steps")
    augmentation.add_argument("--gan-size", dest="gan_size", type=int, help="cGAN image side")

    parser = argparse.ArgumentParser(prog="mfpnet", description="Multi-facial-patch expression recognition")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("shape-plan", parents=[common], help="Print per-layer shapes and parameter counts")
    p.add_argument("--patch-size", dest="patch_size", type=int)
    p.add_argument("--classes", type=int, help="Number of output classes")

    p = sub.add_parser("synth-data", parents=[common], help="Write a synthetic landmark-annotated dataset")
    p.add_argument("--subjects", type=int)
    p.add_argument("--classes", type=int)
    p.add_argument("--per", type=int, help="Frames per (subject, class)")
    p.add_argument("--noise", type=float)
    p.add_argument("--image-size", dest="image_size", type=int)
    p.add_argument("--domain-shift", dest="domain_shift", type=float)

    sub.add_parser("extract-patches", parents=[common, data], help="Align faces and extract the seven patches")

    p = sub.add_parser("augment", parents=[common, data], help="Expand patches with transformation functions")
    p.add_argument("--plan", help="Comma-separated TF plan")

    sub.add_parser("gan-train", parents=[common, data, augmentation], help="Train the expression cGAN")

    p = sub.add_parser("gan-generate", parents=[common, data],
                       help="Synthesize expressions from each subject's neutral face")
    p.add_argument("--model", required=True, help="Directory written by gan-train")

    sub.add_parser("train", parents=[common, data, training, augmentation], help="Train the patch classifier")

    for name in ("eval", "cross-eval"):
        p = sub.add_parser(name, parents=[common, data], help="Evaluate a saved model on a manifest")
        p.add_argument("--model", required=True, help="Directory written by train")

    p = sub.add_parser("fine-tune", parents=[common, data, training], help="Fine-tune a saved model on a new dataset")
    p.add_argument("--model", required=True)
    p.add_argument("--fraction", type=float, help="Share of target subjects used for tuning")

    p = sub.add_parser("plot", parents=[common], help="Render a confusion matrix or history CSV as SVG")
    target = p.add_mutually_exclusive_group(required=True)
    target.add_argument("--confusion", help="Confusion matrix CSV")
    target.add_argument("--history", help="Training history CSV")
    p.add_argument("--title")

    p = sub.add_parser("experiment", parents=[common, data, training, augmentation],
                       help="Subject-independent k-fold experiment")
    p.add_argument("--folds", type=int)

    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    configure_logging()
    logger.info("command_started", command=args.command)
    try:
        status = COMMANDS[args.command](args)
    except (MFPNetError, ValueError, OSError) as e:
        logger.error("command_failed", command=args.command, error=type(e).__name__)
        print(json.dumps({"status": "error", "error": type(e).__name__, "message": str(e)}), file=sys.stderr)
        return 1
    logger.info("command_completed", command=args.command)
    return status


if __name__ == "__main__":
    sys.exit(main())
