"""Continuum percolation among Haar-random states of N qubits."""

__version__ = "0.1.0"

from .clusters import ClusterPartition, MscReport, UnionFind, build_clusters, detect_msc, oracle_boolean_clusters
from .concentration import (
    ConcentrationBoundReport,
    analytic_bound,
    bound_components,
    chi_square_tail,
    empirical_tail,
    lower_bound_plb,
)
from .fitting import MetaFit, PowerLawFit, fit_A_law, fit_B_law, fit_meta, fit_power_law
from .metric import DistanceMatrix, distance_matrix, fidelity, fubini_study_distance
from .percolation import CriticalThresholdResult, SweepRecord, critical_threshold, msc_indicator, run_sweep
from .states import QuantumState, StateEnsemble, sample_ensemble, sample_state

__all__ = [
    "ClusterPartition", "ConcentrationBoundReport", "CriticalThresholdResult", "DistanceMatrix",
    "MetaFit", "MscReport", "PowerLawFit", "QuantumState", "StateEnsemble", "SweepRecord", "UnionFind",
    "analytic_bound", "bound_components", "build_clusters", "chi_square_tail", "critical_threshold",
    "detect_msc", "distance_matrix", "empirical_tail", "fidelity", "fit_A_law", "fit_B_law", "fit_meta",
    "fit_power_law", "fubini_study_distance", "lower_bound_plb", "msc_indicator", "oracle_boolean_clusters",
    "run_sweep", "sample_ensemble", "sample_state",
]
