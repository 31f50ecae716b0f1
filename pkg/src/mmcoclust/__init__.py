"""Overlapping community detection in multi-layer directed networks."""

from .aggregation import (
    AggregationPair,
    baseline_aggregation,
    debiased_aggregation,
    population_aggregation,
)
from .edgelist import LabeledStack, merge_nodes, parse_multiplex_edges, select_top_layers
from .experiment import ExperimentConfig, run_experiment
from .metrics import ErrorReport, evaluate, hamming_error, relative_error
from .model import (
    AdjacencyStack,
    ExpectationStack,
    GroundTruth,
    Membership,
    MixingSequence,
    ValidationError,
    build_expectations,
    sample_network,
    synth_instance,
)
from .pipeline import DetectionResult, baseline_detect, cspdsos, ideal_cspdsos, reconstruct_membership
from .report import analyze_memberships
from .spectral import EigenBasis, leading_eigenvectors
from .vertex_hunting import VertexSet, spa

__version__ = "0.1.0"
