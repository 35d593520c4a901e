"""Amplitude dynamics: projection, interference, update, coherence, collapse.

The engine works on plain Python floats with ``math.fsum`` reductions, so
every operation is deterministic across platforms, permutation-equivariant
to the bit, and independent of BLAS library details. Embedding math (the
only place wide vectors appear) lives in :mod:`qabd.embed`.

Update rule per arriving observation, with learning rate ``eta``::

    pre_norm[i] = alpha[i] + eta * (evidence[i] + sum_{k != i} I[i][k] * alpha[k])

followed by L2 normalization. Evidence either scales the new observation's
projections (``sum`` mode, the incremental default) or the running maximum
projection per hypothesis (``max`` mode, batch-style).
"""

from __future__ import annotations

import math
import shlex
import subprocess
from dataclasses import dataclass
from typing import Mapping, Sequence

from .embed import HashingEmbedder, cosine
from .errors import BadValueError, DegenerateMixError, DegenerateStateError
from .model import (
    UNIFORM_BOUNDARY_TOL,
    AbductiveState,
    CaseFile,
    CollapseOutcome,
    DynamicsConfig,
    Hypothesis,
    InterferenceMatrix,
    Observation,
    OutcomeKind,
    ProjectionMatrix,
)

DEGENERATE_NORM = 1e-12
# When a step moves nothing (no evidence, no interference) the norm is already
# 1 up to representation error; skip the division so the state is a bit-for-bit
# fixed point.
_RENORM_SKIP_TOL = 1e-12


@dataclass(frozen=True)
class StepTrace:
    """Audit record of one update: what the observation contributed, what the
    neighbors contributed, and the state before and after normalization."""

    observation_id: str
    evidence: tuple[float, ...]
    interference_term: tuple[float, ...]
    pre_norm: tuple[float, ...]
    post: AbductiveState


@dataclass(frozen=True)
class RunResult:
    state: AbductiveState
    traces: tuple[StepTrace, ...]
    outcome: CollapseOutcome
    projections: ProjectionMatrix
    interference: InterferenceMatrix


def _embedding_of(hypothesis: Hypothesis, provider) -> Sequence[float]:
    if hypothesis.embedding is not None:
        return hypothesis.embedding
    return provider.embed(hypothesis.statement)


def project(hypothesis: Hypothesis, observation: Observation, provider) -> float:
    """Projection of one observation onto one hypothesis, in [-1, +1].

    A polarity override for this hypothesis wins (fixture mode); otherwise
    the value is the cosine between statement embeddings.
    """
    if hypothesis.id in observation.polarity_overrides:
        return float(observation.polarity_overrides[hypothesis.id])
    return cosine(_embedding_of(hypothesis, provider), provider.embed(observation.statement))


def build_interference(
    hypotheses: Sequence[Hypothesis],
    config: DynamicsConfig,
    overrides: Mapping[tuple[str, str], float] | None = None,
    provider=None,
) -> InterferenceMatrix:
    """Pairwise coupling matrix: similarity minus the offset, clamped to
    [-1, +1], zero diagonal. Expert overrides replace derived entries
    symmetrically and are recorded as such.
    """
    overrides = overrides or {}
    provider = provider or HashingEmbedder(config.embed_dim)
    n = len(hypotheses)
    ids = [h.id for h in hypotheses]
    entries = [[0.0] * n for _ in range(n)]
    provenance = [["derived"] * n for _ in range(n)]
    embeddings: dict[int, Sequence[float]] = {}

    def emb(i: int) -> Sequence[float]:
        if i not in embeddings:
            embeddings[i] = _embedding_of(hypotheses[i], provider)
        return embeddings[i]

    for i in range(n):
        for j in range(i + 1, n):
            if (ids[i], ids[j]) in overrides:
                value = float(overrides[(ids[i], ids[j])])
                origin = "expert-override"
            elif (ids[j], ids[i]) in overrides:
                value = float(overrides[(ids[j], ids[i])])
                origin = "expert-override"
            else:
                raw = cosine(emb(i), emb(j)) - config.interference_offset
                value = min(1.0, max(-1.0, raw))
                origin = "derived"
            entries[i][j] = entries[j][i] = value
            provenance[i][j] = provenance[j][i] = origin

    return InterferenceMatrix(
        entries=tuple(tuple(row) for row in entries),
        provenance=tuple(tuple(row) for row in provenance),
    )


def evidence_activation(
    projections: Sequence[float] | Sequence[Sequence[float]],
    weight: float,
    mode: str = "sum",
) -> tuple[float, ...]:
    """Per-hypothesis evidence for one update.

    ``sum`` mode scales the new observation's projection column by its
    weight. ``max`` mode takes, per hypothesis, the maximum projection over
    all applied observations (rows of ``projections``), scaled by the
    arriving observation's weight.
    """
    if mode == "sum":
        return tuple(weight * float(p) for p in projections)
    if mode == "max":
        return tuple(weight * max(float(p) for p in row) for row in projections)
    raise BadValueError(f"unknown aggregation mode {mode!r}")


def step(
    state: AbductiveState,
    evidence: Sequence[float],
    interference: InterferenceMatrix,
    eta: float,
    observation_id: str = "",
) -> tuple[AbductiveState, StepTrace]:
    """One amplitude update followed by normalization.

    An all-zero pre-normalization state is an error, not a silent rescale:
    it signals a pathological destructive configuration to the operator.
    The trace carries every intermediate term for audit and replay checks.
    """
    alpha = state.amplitudes
    n = len(alpha)
    if len(evidence) != n or interference.n != n:
        raise BadValueError(
            f"dimension mismatch: state {n}, evidence {len(evidence)}, "
            f"interference {interference.n}"
        )
    if not eta > 0:
        raise BadValueError(f"eta must be > 0, got {eta}")

    coupling = tuple(
        math.fsum(interference.entries[i][k] * alpha[k] for k in range(n) if k != i)
        for i in range(n)
    )
    pre_norm = tuple(
        alpha[i] + eta * (evidence[i] + coupling[i]) for i in range(n)
    )
    norm = math.sqrt(math.fsum(a * a for a in pre_norm))
    if norm < DEGENERATE_NORM:
        raise DegenerateStateError("update cancelled all amplitudes")
    if abs(norm - 1.0) <= _RENORM_SKIP_TOL:
        post_amplitudes = pre_norm
    else:
        post_amplitudes = tuple(a / norm for a in pre_norm)
    post = AbductiveState(amplitudes=post_amplitudes, step=state.step + 1)
    trace = StepTrace(
        observation_id=observation_id,
        evidence=tuple(float(e) for e in evidence),
        interference_term=coupling,
        pre_norm=pre_norm,
        post=post,
    )
    return post, trace


def coherence(state: AbductiveState) -> float:
    """Concentration summary: the largest squared amplitude."""
    return max(a * a for a in state.amplitudes)


def mix(
    state: AbductiveState,
    subset: Sequence[str],
    hypotheses: Sequence[Hypothesis],
    provider=None,
    narrative_command: str | None = None,
) -> Hypothesis:
    """Synthesize a composite hypothesis from two or more members.

    The hybrid embedding is the normalized |amplitude|-weighted sum of the
    member embeddings. Exact cancellation (e.g. antipodal members at equal
    weight) is an error. ``narrative_command``, when set, is an external
    command template that receives the member statements on stdin and
    returns narrative text; it is disabled by default and never required.
    """
    ids = [h.id for h in hypotheses]
    members = [h for h in hypotheses if h.id in set(subset)]
    if len(members) < 2:
        raise BadValueError(f"mix needs >= 2 members, got {len(members)}")
    provider = provider or HashingEmbedder(
        len(members[0].embedding) if members[0].embedding else 256
    )
    dim = None
    acc: list[float] = []
    for member in members:
        weight = abs(state.amplitudes[ids.index(member.id)])
        emb = _embedding_of(member, provider)
        if dim is None:
            dim = len(emb)
            acc = [0.0] * dim
        for k in range(dim):
            acc[k] += weight * float(emb[k])
    norm = math.sqrt(math.fsum(v * v for v in acc))
    if norm < DEGENERATE_NORM:
        raise DegenerateMixError("weighted member embeddings cancel to zero")
    hybrid_embedding = tuple(v / norm for v in acc)

    labels = ", ".join(m.label for m in members)
    statement = f"Synthesis of {labels}: " + " / ".join(m.statement for m in members)
    if narrative_command:
        narrative = _invoke_narrative_hook(narrative_command, members)
        if narrative:
            statement = narrative
    return Hypothesis(
        id="+".join(m.id for m in members),
        label=f"Synthesis of {labels}",
        statement=statement,
        embedding=hybrid_embedding,
    )


def _invoke_narrative_hook(command: str, members: Sequence[Hypothesis]) -> str:
    """Run the external narrative generator, feeding member statements on
    stdin. Failures fall back to the template statement."""
    payload = "\n".join(m.statement for m in members)
    try:
        result = subprocess.run(
            shlex.split(command),
            input=payload.encode("utf-8"),
            capture_output=True,
            timeout=60,
        )
    except (OSError, subprocess.SubprocessError):
        return ""
    if result.returncode != 0:
        return ""
    return result.stdout.decode("utf-8", errors="replace").strip()


def try_collapse(
    state: AbductiveState,
    interference: InterferenceMatrix,
    config: DynamicsConfig,
    hypotheses: Sequence[Hypothesis],
    provider=None,
) -> CollapseOutcome:
    """Resolve the current state without mutating it.

    Dominant when coherence crosses the threshold (exact ties broken by
    lowest hypothesis index and recorded). Otherwise hybrid when at least
    two near-maximal hypotheses are all pairwise positively coupled.
    Otherwise deferred, listing every hypothesis strictly above uniform
    weight -- with amplitudes sitting exactly at uniform counted as included.
    """
    ids = [h.id for h in hypotheses]
    squares = [a * a for a in state.amplitudes]
    top = max(squares)
    n = len(squares)

    if top >= config.collapse_threshold:
        leaders = [i for i, s in enumerate(squares) if s == top]
        return CollapseOutcome(
            kind=OutcomeKind.DOMINANT,
            members=(ids[min(leaders)],),
            confidence=top,
            tie_break=len(leaders) > 1,
        )

    near_max = [i for i, s in enumerate(squares) if s >= config.hybrid_ratio * top]
    if len(near_max) >= 2 and all(
        interference.entries[i][j] > 0.0
        for pos, i in enumerate(near_max)
        for j in near_max[pos + 1:]
    ):
        synthesized = None
        if provider is not None:
            try:
                synthesized = mix(state, [ids[i] for i in near_max], hypotheses, provider)
            except DegenerateMixError:
                synthesized = None
        return CollapseOutcome(
            kind=OutcomeKind.HYBRID,
            members=tuple(ids[i] for i in near_max),
            confidence=top,
            synthesized=synthesized,
        )

    uniform = 1.0 / n
    members = tuple(
        ids[i]
        for i, s in enumerate(squares)
        if s > uniform or abs(s - uniform) <= UNIFORM_BOUNDARY_TOL
    )
    return CollapseOutcome(kind=OutcomeKind.DEFERRED, members=members, confidence=top)


def projection_column(
    case: CaseFile, observation: Observation, provider
) -> tuple[tuple[float, ...], str]:
    """All-hypothesis projections for one observation, plus the column source
    ("fixture" when every value came from an override, else "cosine")."""
    values = tuple(project(h, observation, provider) for h in case.hypotheses)
    fixture = all(h.id in observation.polarity_overrides for h in case.hypotheses)
    return values, "fixture" if fixture else "cosine"


def run(case: CaseFile, provider=None) -> RunResult:
    """Fold the observation event log in sequence order.

    The collapse check runs after every step; the fold stops at the first
    dominant or hybrid outcome, otherwise it returns the final deferred one.
    Fully deterministic given the case and provider.
    """
    provider = provider or HashingEmbedder(case.config.embed_dim)
    config = case.config
    interference = build_interference(
        case.hypotheses, config, case.interference_overrides, provider
    )
    state = AbductiveState.uniform(len(case.hypotheses))
    traces: list[StepTrace] = []
    columns: list[tuple[float, ...]] = []
    sources: list[str] = []
    # The collapse check only runs after evidence has been applied; with an
    # empty log the state is uniform and the outcome is a deferral listing
    # every hypothesis (all sit at the uniform boundary).
    outcome = CollapseOutcome(
        kind=OutcomeKind.DEFERRED,
        members=tuple(h.id for h in case.hypotheses),
        confidence=coherence(state),
    )

    for observation in sorted(case.observations, key=lambda o: o.sequence):
        column, source = projection_column(case, observation, provider)
        columns.append(column)
        sources.append(source)
        if config.aggregation == "max":
            per_hypothesis = [
                [col[i] for col in columns] for i in range(len(case.hypotheses))
            ]
            evidence = evidence_activation(per_hypothesis, observation.weight, "max")
        else:
            evidence = evidence_activation(column, observation.weight, "sum")
        state, trace = step(
            state, evidence, interference, config.eta, observation_id=observation.id
        )
        traces.append(trace)
        outcome = try_collapse(state, interference, config, case.hypotheses, provider)
        if outcome.kind in (OutcomeKind.DOMINANT, OutcomeKind.HYBRID):
            break

    projections = ProjectionMatrix(
        entries=tuple(
            tuple(col[i] for col in columns) for i in range(len(case.hypotheses))
        ),
        source=tuple(sources),
    )
    return RunResult(
        state=state,
        traces=tuple(traces),
        outcome=outcome,
        projections=projections,
        interference=interference,
    )
