"""
LangGraph Experiment Orchestration
Subject-disjoint k-fold loop: prepare → (augment → train → evaluate → audit) × k → aggregate
"""
from langgraph.graph import END, StateGraph

from config.logging import get_logger
from dataeval.experiment.nodes import (
    aggregate_node,
    audit_fold_node,
    augment_fold_node,
    evaluate_fold_node,
    prepare_node,
    should_continue,
    train_fold_node,
)
from dataeval.experiment.state import ExperimentState

logger = get_logger(__name__)

NODES = ["prepare", "augment_fold", "train_fold", "evaluate_fold", "audit_fold", "aggregate"]


def create_experiment_graph():
    workflow = StateGraph(ExperimentState)

    workflow.add_node("prepare", prepare_node)
    workflow.add_node("augment_fold", augment_fold_node)
    workflow.add_node("train_fold", train_fold_node)
    workflow.add_node("evaluate_fold", evaluate_fold_node)
    workflow.add_node("audit_fold", audit_fold_node)
    workflow.add_node("aggregate", aggregate_node)

    workflow.set_entry_point("prepare")
    workflow.add_edge("prepare", "augment_fold")
    workflow.add_edge("augment_fold", "train_fold")
    workflow.add_edge("train_fold", "evaluate_fold")
    workflow.add_edge("evaluate_fold", "audit_fold")

    # Audit → next fold or aggregate
    workflow.add_conditional_edges(
        "audit_fold",
        should_continue,
        {
            "next_fold": "augment_fold",
            "aggregate": "aggregate",
        },
    )
    workflow.add_edge("aggregate", END)

    app = workflow.compile()
    logger.info("experiment_graph_created", nodes=NODES)
    return app


# Global experiment graph instance (lazy initialization)
experiment_graph = None


def get_experiment_graph():
    """Get experiment graph instance (lazy initialization)"""
    global experiment_graph
    if experiment_graph is None:
        experiment_graph = create_experiment_graph()
    return experiment_graph
