"""Quantum-inspired abductive inference engine.

Competing hypotheses live as a normalized amplitude vector in a shared
semantic space; observations project onto them, hypotheses interfere, and
the state resolves into a dominant, hybrid, or deliberately deferred
explanation. A classical eliminative baseline is included for comparison.
"""

from .model import (
    AbductiveState,
    CaseFile,
    CollapseOutcome,
    DynamicsConfig,
    Hypothesis,
    InterferenceMatrix,
    Observation,
    OutcomeKind,
    ProjectionMatrix,
    Violation,
    initial_state,
    new_case,
    validate,
)
from .dynamics import (
    RunResult,
    StepTrace,
    build_interference,
    coherence,
    evidence_activation,
    mix,
    project,
    run,
    step,
    try_collapse,
)
from .embed import HashingEmbedder, RemoteEmbedder, VectorStore, cosine, load_vectors
from .estimator import EliminativeAbductor, QuantumAbductor
from .classical import ComparisonReport, EliminationResult, compare, eliminate
from .casebook import FixtureManifest, SignMark, fixture, list_fixtures, load_case

__all__ = [
    "AbductiveState",
    "CaseFile",
    "CollapseOutcome",
    "ComparisonReport",
    "DynamicsConfig",
    "EliminationResult",
    "EliminativeAbductor",
    "FixtureManifest",
    "HashingEmbedder",
    "Hypothesis",
    "InterferenceMatrix",
    "Observation",
    "OutcomeKind",
    "ProjectionMatrix",
    "QuantumAbductor",
    "RemoteEmbedder",
    "RunResult",
    "SignMark",
    "StepTrace",
    "VectorStore",
    "Violation",
    "build_interference",
    "coherence",
    "compare",
    "cosine",
    "eliminate",
    "evidence_activation",
    "fixture",
    "initial_state",
    "list_fixtures",
    "load_case",
    "load_vectors",
    "mix",
    "new_case",
    "project",
    "run",
    "step",
    "try_collapse",
    "validate",
]
