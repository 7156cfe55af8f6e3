"""
Experiment Orchestrator
Main entry point for a cross-validated augmentation experiment
"""
from datetime import datetime
from pathlib import Path
from typing import Any, Dict, Optional

from config.logging import get_logger
from dataeval.config import ExperimentConfig
from dataeval.experiment.graph import get_experiment_graph
from dataeval.experiment.state import ExperimentState

logger = get_logger(__name__)

# Steps per fold through the graph, plus slack for prepare/aggregate
STEPS_PER_FOLD = 4


class ExperimentOrchestrator:
    """Runs the experiment graph and collects its summary"""

    def __init__(self):
        self.graph = None

    def _get_graph(self):
        if self.graph is None:
            self.graph = get_experiment_graph()
        return self.graph

    def initial_state(self, config: ExperimentConfig, manifest_path: str, out_dir: str) -> ExperimentState:
        return {
            "config": config,
            "manifest_path": str(manifest_path),
            "out_dir": str(out_dir),
            "seeds": {},
            "classes": [],
            "faces": [],
            "dataset": None,
            "fold_plan": None,
            "current_fold": 0,
            "fold_train": None,
            "fold_test": None,
            "fold_model": None,
            "fold_history": [],
            "fold_provenance": {},
            "fold_results": [],
            "confusions": [],
            "provenance": [],
            "summary": {},
            "execution_log": [],
            "start_time": datetime.now(),
            "end_time": None,
            "status": "running",
        }

    def run(self, config: ExperimentConfig, manifest_path: str, out_dir: str) -> Dict[str, Any]:
        """
        Execute every fold and aggregate.
        Errors propagate to the caller; a fold failure surfaces as FoldError.
        """
        Path(out_dir).mkdir(parents=True, exist_ok=True)
        state = self.initial_state(config, manifest_path, out_dir)
        logger.info("experiment_started", augmentation=config.augmentation, folds=config.folds,
                    seed=config.seed, manifest=str(manifest_path), out_dir=str(out_dir))

        final_state = self._get_graph().invoke(
            state, config={"recursion_limit": 10 + STEPS_PER_FOLD * 2 * config.folds}
        )

        end_time: Optional[datetime] = final_state.get("end_time") or datetime.now()
        result = {
            "status": final_state.get("status", "unknown"),
            "summary": final_state.get("summary", {}),
            "folds": final_state.get("fold_results", []),
            "execution_time": (end_time - state["start_time"]).total_seconds(),
            "execution_log": final_state.get("execution_log", []),
        }
        logger.info("experiment_completed", status=result["status"],
                    execution_time=result["execution_time"], **result["summary"])
        return result


# Global orchestrator instance
orchestrator = ExperimentOrchestrator()


def run_experiment(config: ExperimentConfig, manifest_path: str, out_dir: str) -> Dict[str, Any]:
    return orchestrator.run(config, manifest_path, out_dir)
