"""Domain types and validation for abductive cases.

All types are immutable values: mutation happens by constructing new values,
so cases, states, and matrices are safe to share across threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Mapping, Optional, Sequence

from .errors import DuplicateIdError, TooFewHypothesesError

UNIT_NORM_TOL = 1e-9
# Deferred membership uses strict alpha_i^2 > 1/n, but a state sitting exactly
# at the uniform value counts as included; this tolerance defines "exactly".
UNIFORM_BOUNDARY_TOL = 1e-12


@dataclass(frozen=True)
class Hypothesis:
    """One candidate explanation, optionally carrying a precomputed embedding."""

    id: str
    label: str
    statement: str
    embedding: Optional[tuple[float, ...]] = None


@dataclass(frozen=True)
class Observation:
    """One piece of evidence with a salience weight in (0, 1].

    ``polarity_overrides`` maps hypothesis id -> projection value in [-1, +1]
    and takes precedence over embedding-derived projections (fixture mode).
    ``sequence`` is the arrival index; it must be strictly increasing within
    a case.
    """

    id: str
    statement: str
    weight: float = 1.0
    polarity_overrides: Mapping[str, float] = field(default_factory=dict)
    sequence: int = 0


@dataclass(frozen=True)
class AbductiveState:
    """Signed real amplitudes over the hypothesis list, L2-normalized.

    Amplitudes may go negative under destructive pressure; the interpretive
    quantity is always the square.
    """

    amplitudes: tuple[float, ...]
    step: int = 0

    @staticmethod
    def uniform(n: int) -> "AbductiveState":
        a = 1.0 / math.sqrt(n)
        return AbductiveState(amplitudes=(a,) * n, step=0)

    def norm_sq(self) -> float:
        return math.fsum(a * a for a in self.amplitudes)


@dataclass(frozen=True)
class InterferenceMatrix:
    """Symmetric coupling between hypotheses: positive entries reinforce,
    negative entries suppress. Zero diagonal. ``provenance[i][j]`` records
    whether an off-diagonal entry was derived from similarity or set by an
    expert override.
    """

    entries: tuple[tuple[float, ...], ...]
    provenance: tuple[tuple[str, ...], ...]

    @property
    def n(self) -> int:
        return len(self.entries)

    def entry(self, i: int, j: int) -> float:
        return self.entries[i][j]

    @staticmethod
    def zero(n: int) -> "InterferenceMatrix":
        return InterferenceMatrix(
            entries=tuple((0.0,) * n for _ in range(n)),
            provenance=tuple(("derived",) * n for _ in range(n)),
        )


@dataclass(frozen=True)
class ProjectionMatrix:
    """Hypothesis-by-observation projection values in [-1, +1].

    One column per applied observation; ``source[j]`` is "fixture" when every
    value in column j came from polarity overrides, else "cosine".
    """

    entries: tuple[tuple[float, ...], ...]
    source: tuple[str, ...]

    @property
    def n(self) -> int:
        return len(self.entries)

    @property
    def m(self) -> int:
        return len(self.source)

    def column(self, j: int) -> tuple[float, ...]:
        return tuple(row[j] for row in self.entries)


@dataclass(frozen=True)
class DynamicsConfig:
    eta: float = 0.1
    aggregation: str = "sum"  # "sum" (incremental) or "max" (batch)
    collapse_threshold: float = 0.6
    hybrid_ratio: float = 0.8
    interference_offset: float = 0.5
    embed_dim: int = 256


class OutcomeKind(str, Enum):
    DOMINANT = "dominant"
    HYBRID = "hybrid"
    DEFERRED = "deferred"


@dataclass(frozen=True)
class CollapseOutcome:
    """Resolution of a state: a single dominant hypothesis, a hybrid subset,
    or a deliberate deferral listing every hypothesis at or above uniform
    weight. ``tie_break`` records that the dominant member was chosen by
    lowest index among exact ties; ``forced`` marks decision-forced outcomes.
    """

    kind: OutcomeKind
    members: tuple[str, ...]
    confidence: float
    synthesized: Optional[Hypothesis] = None
    tie_break: bool = False
    forced: bool = False


@dataclass(frozen=True)
class CaseFile:
    """The unit of persistence and replay: hypotheses, the ordered observation
    event log, dynamics configuration, and sparse expert interference
    overrides keyed by hypothesis-id pairs.
    """

    name: str
    hypotheses: tuple[Hypothesis, ...]
    observations: tuple[Observation, ...] = ()
    config: DynamicsConfig = field(default_factory=DynamicsConfig)
    interference_overrides: Mapping[tuple[str, str], float] = field(default_factory=dict)

    def hypothesis_ids(self) -> tuple[str, ...]:
        return tuple(h.id for h in self.hypotheses)

    def index_of(self, hypothesis_id: str) -> int:
        return self.hypothesis_ids().index(hypothesis_id)

    def with_observation(self, observation: Observation) -> "CaseFile":
        return replace(self, observations=self.observations + (observation,))

    def next_sequence(self) -> int:
        if not self.observations:
            return 1
        return max(o.sequence for o in self.observations) + 1


@dataclass(frozen=True)
class Violation:
    """One validation failure, naming the rule and the offending subject."""

    rule: str
    subject: str
    detail: str = ""

    def __str__(self) -> str:
        if self.detail:
            return f"{self.rule}({self.subject}): {self.detail}"
        return f"{self.rule}({self.subject})"


def new_case(
    name: str,
    hypotheses: Sequence[Hypothesis],
    config: DynamicsConfig | None = None,
) -> CaseFile:
    """Create a case with an empty event log.

    Requires at least two hypotheses with unique ids; the initial state over
    the case is uniform (no hypothesis privileged before evidence arrives).
    """
    hyps = tuple(hypotheses)
    if len(hyps) < 2:
        raise TooFewHypothesesError(f"need >= 2 hypotheses, got {len(hyps)}")
    seen: set[str] = set()
    for h in hyps:
        if h.id in seen:
            raise DuplicateIdError(f"hypothesis id {h.id!r} repeated")
        seen.add(h.id)
    return CaseFile(name=name, hypotheses=hyps, config=config or DynamicsConfig())


def initial_state(case: CaseFile) -> AbductiveState:
    return AbductiveState.uniform(len(case.hypotheses))


def set_override(
    overrides: Mapping[tuple[str, str], float], i: str, j: str, value: float
) -> dict[tuple[str, str], float]:
    """Copy of ``overrides`` with the (i, j) coupling replaced symmetrically:
    any entry stored under the reverse key is superseded, not contradicted."""
    out = {k: v for k, v in overrides.items() if k not in ((i, j), (j, i))}
    out[(i, j)] = float(value)
    return out


def _check_unit(values: Sequence[float]) -> bool:
    return abs(math.fsum(v * v for v in values) - 1.0) <= UNIT_NORM_TOL * 2 + 1e-15


def validate(case: CaseFile) -> list[Violation]:
    """Check every type invariant; returns the violations instead of raising.

    Total over well-typed input: never faults, just reports.
    """
    out: list[Violation] = []
    cfg = case.config

    if len(case.hypotheses) < 2:
        out.append(Violation("TooFewHypotheses", case.name, f"n={len(case.hypotheses)}"))

    hyp_ids: set[str] = set()
    for h in case.hypotheses:
        if h.id in hyp_ids:
            out.append(Violation("DuplicateId", h.id, "hypothesis id repeated"))
        hyp_ids.add(h.id)
        if not h.statement.strip():
            out.append(Violation("EmptyStatement", h.id))
        if h.embedding is not None:
            if len(h.embedding) != cfg.embed_dim:
                out.append(
                    Violation("BadDimension", h.id, f"{len(h.embedding)} != {cfg.embed_dim}")
                )
            if not _check_unit(h.embedding):
                out.append(Violation("EmbeddingNotUnit", h.id))

    obs_ids: set[str] = set()
    last_seq: Optional[int] = None
    for o in case.observations:
        if o.id in obs_ids:
            out.append(Violation("DuplicateId", o.id, "observation id repeated"))
        obs_ids.add(o.id)
        if not o.statement.strip():
            out.append(Violation("EmptyStatement", o.id))
        if not (0.0 < o.weight <= 1.0):
            out.append(Violation("WeightOutOfRange", o.id, f"weight={o.weight}"))
        if last_seq is not None and o.sequence <= last_seq:
            out.append(Violation("NonMonotoneSequence", o.id, f"sequence={o.sequence}"))
        last_seq = o.sequence
        for hid, value in o.polarity_overrides.items():
            if hid not in hyp_ids:
                out.append(Violation("UnknownHypothesis", f"{o.id}->{hid}"))
            if not (-1.0 <= value <= 1.0):
                out.append(Violation("OverrideOutOfRange", f"{o.id}->{hid}", f"value={value}"))

    if not cfg.eta > 0:
        out.append(Violation("BadConfig", "eta", f"{cfg.eta}"))
    if cfg.aggregation not in ("sum", "max"):
        out.append(Violation("BadConfig", "aggregation", cfg.aggregation))
    if not (0.0 < cfg.collapse_threshold <= 1.0):
        out.append(Violation("BadConfig", "collapse_threshold", f"{cfg.collapse_threshold}"))
    if not (0.0 < cfg.hybrid_ratio <= 1.0):
        out.append(Violation("BadConfig", "hybrid_ratio", f"{cfg.hybrid_ratio}"))
    if not (0.0 <= cfg.interference_offset <= 1.0):
        out.append(Violation("BadConfig", "interference_offset", f"{cfg.interference_offset}"))
    if cfg.embed_dim < 1:
        out.append(Violation("BadConfig", "embed_dim", f"{cfg.embed_dim}"))

    seen_pairs: dict[tuple[str, str], float] = {}
    for (i, j), value in case.interference_overrides.items():
        if i == j:
            out.append(Violation("DiagonalOverride", i))
        for hid in (i, j):
            if hid not in hyp_ids:
                out.append(Violation("UnknownHypothesis", f"override {i},{j}: {hid}"))
        if not (-1.0 <= value <= 1.0):
            out.append(Violation("OverrideOutOfRange", f"{i},{j}", f"value={value}"))
        if (j, i) in seen_pairs and seen_pairs[(j, i)] != value:
            out.append(
                Violation(
                    "AsymmetricInterference",
                    f"{i},{j}",
                    f"{value} vs {seen_pairs[(j, i)]}",
                )
            )
        seen_pairs[(i, j)] = value

    return out
