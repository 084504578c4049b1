"""Hierarchical morphological synthesis and multistage trajectory design."""

from .model import (
    AnalysisPoint,
    CompatTable,
    Component,
    CompositeNode,
    DeclaredSolution,
    DesignAlternative,
    MorphError,
    MorphPoint,
    MorphStructure,
    PointSolution,
    TopLevelNetwork,
    ValidationReport,
    validate_network,
    validate_structure,
)
from .morphfile import MorphDocument, MorphParseError, export_graph, parse, parse_file, serialize
from .oracle import oracle_synthesize, oracle_trajectories
from .quality import Dominance, QualityVector, dominates, pareto_layers, quality_of
from .synthesis import CompositeSolution, SynthesisConfig, synthesize_hierarchy, synthesize_node
from .trajectory import (
    AggregationMode,
    DecisionPath,
    Trajectory,
    chain_for_path,
    chain_trajectories,
    contract_analysis,
    execute_decision_path,
    simplify_network,
    spanning_tree,
    tree_trajectories,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
