"""
model
Multi-facial-patch classifier, its shape plan and training loop
"""
from model.mfp import MFPModel, ModelConfig, ShapePlan, predict, shape_plan, train_step
from model.subnetwork import SubNetwork
from model.trainer import TrainingConfig, fit, load_model, predict_batch, save_model

__all__ = [
    "MFPModel",
    "ModelConfig",
    "ShapePlan",
    "SubNetwork",
    "TrainingConfig",
    "fit",
    "load_model",
    "predict",
    "predict_batch",
    "save_model",
    "shape_plan",
    "train_step",
]
