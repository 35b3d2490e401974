"""Regulatory network inference from knockout screens and steady-state expression data."""

__version__ = "0.1.0"

from .consensus import ConsensusNetwork, build_consensus, lower_quantile, select_top_orderings, threshold_edges
from .errors import DataError, NumericalError, ParseError, RipeError
from .estimator import DagEstimate, LassoConfig, OrderingEstimator, lambda_schedule, lasso_solve
from .evaluation import EvalReport, er_significance, precision_recall_f1
from .graph import DirectedGraph, dfs_traverse, scc_decompose, topological_sort
from .influence import ExpressionDataset, InfluenceMatrix, build_influence_matrix, cutoff_scan, welch_t_test
from .orderings import CausalOrdering, OrderingUniverse, enumerate_scc_orderings, generate_orderings, mc_dfs_sample
from .pipeline import InferenceConfig, InferenceResult, infer_network
from .synth import WeightedNetwork, random_cyclic, random_dag, sample_sem, true_influence

__all__ = [
    "CausalOrdering", "ConsensusNetwork", "DagEstimate", "DataError", "DirectedGraph",
    "EvalReport", "ExpressionDataset", "InferenceConfig", "InferenceResult", "InfluenceMatrix",
    "LassoConfig", "NumericalError", "OrderingEstimator", "OrderingUniverse", "ParseError",
    "RipeError", "WeightedNetwork", "build_consensus", "build_influence_matrix", "cutoff_scan",
    "dfs_traverse", "enumerate_scc_orderings", "er_significance", "generate_orderings",
    "infer_network", "lambda_schedule", "lasso_solve", "lower_quantile", "mc_dfs_sample",
    "precision_recall_f1", "random_cyclic", "random_dag", "sample_sem", "scc_decompose",
    "select_top_orderings", "threshold_edges", "topological_sort", "true_influence", "welch_t_test",
]
