from dataeval.experiment.orchestrator import ExperimentOrchestrator, orchestrator, run_experiment

__all__ = ["ExperimentOrchestrator", "orchestrator", "run_experiment"]
