"""Eliminative baseline and the classical-vs-quantum comparison.

Classical elimination strikes a hypothesis on its first contradiction and
keeps the rest; ambiguity is not contradiction, so ambiguous marks (0) count
as compatible. The comparison report runs both paradigms on one case and
flags where they diverge.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

from .dynamics import RunResult, run
from .errors import NonQualitativeMatrixError
from .model import CaseFile, CollapseOutcome, OutcomeKind, ProjectionMatrix

QUALITATIVE_VALUES = (-1.0, 0.0, 1.0)


@dataclass(frozen=True)
class EliminationResult:
    """Survivors plus, per eliminated hypothesis, the first observation that
    contradicted it. Together they partition the hypothesis set."""

    survivors: frozenset[str]
    eliminated: dict[str, str]


@dataclass(frozen=True)
class ComparisonReport:
    classical: EliminationResult
    quantum_outcome: CollapseOutcome
    quantum_amplitudes: tuple[float, ...]
    flags: tuple[str, ...]

    def to_dict(self) -> dict:
        return {
            "classical": {
                "survivors": sorted(self.classical.survivors),
                "eliminated": dict(sorted(self.classical.eliminated.items())),
            },
            "quantum": {
                "outcome": {
                    "kind": self.quantum_outcome.kind.value,
                    "members": list(self.quantum_outcome.members),
                    "confidence": self.quantum_outcome.confidence,
                },
                "amplitudes": list(self.quantum_amplitudes),
            },
            "flags": list(self.flags),
        }


def qualitative_matrix(case: CaseFile) -> ProjectionMatrix:
    """Projection matrix built purely from polarity overrides.

    Raises when any (hypothesis, observation) cell lacks an override: the
    eliminative baseline is only defined for fixture-mode cases.
    """
    observations = sorted(case.observations, key=lambda o: o.sequence)
    rows = []
    for h in case.hypotheses:
        row = []
        for o in observations:
            if h.id not in o.polarity_overrides:
                raise NonQualitativeMatrixError(
                    f"no qualitative mark for {h.id} x {o.id}"
                )
            row.append(float(o.polarity_overrides[h.id]))
        rows.append(tuple(row))
    return ProjectionMatrix(
        entries=tuple(rows), source=tuple("fixture" for _ in observations)
    )


def eliminate(
    matrix: ProjectionMatrix,
    hypothesis_ids: Sequence[str],
    observation_ids: Sequence[str],
) -> EliminationResult:
    """Strike every hypothesis with at least one -1 projection; record the
    first contradicting observation in column order. Requires qualitative
    values only ({-1, 0, +1})."""
    for row in matrix.entries:
        for value in row:
            if value not in QUALITATIVE_VALUES:
                raise NonQualitativeMatrixError(f"non-qualitative entry {value}")
    survivors: set[str] = set()
    eliminated: dict[str, str] = {}
    for i, hid in enumerate(hypothesis_ids):
        row = matrix.entries[i]
        for j, value in enumerate(row):
            if value == -1.0:
                eliminated[hid] = observation_ids[j]
                break
        else:
            survivors.add(hid)
    return EliminationResult(survivors=frozenset(survivors), eliminated=eliminated)


def compare(case: CaseFile, provider=None) -> ComparisonReport:
    """Run elimination and amplitude dynamics on the same case.

    Flags: ``deadlock`` when classical elimination empties the hypothesis
    set; ``agreement`` when the quantum dominant member survived classically;
    ``premature-closure`` when classical closed on a single survivor the
    quantum side does not confirm as dominant.
    """
    matrix = qualitative_matrix(case)
    observation_ids = [o.id for o in sorted(case.observations, key=lambda o: o.sequence)]
    classical = eliminate(matrix, list(case.hypothesis_ids()), observation_ids)
    result: RunResult = run(case, provider)

    flags: list[str] = []
    if not classical.survivors:
        flags.append("deadlock")
    dominant_member: Optional[str] = None
    if result.outcome.kind is OutcomeKind.DOMINANT:
        dominant_member = result.outcome.members[0]
    if dominant_member is not None and dominant_member in classical.survivors:
        flags.append("agreement")
    if len(classical.survivors) == 1 and dominant_member not in classical.survivors:
        flags.append("premature-closure")

    return ComparisonReport(
        classical=classical,
        quantum_outcome=result.outcome,
        quantum_amplitudes=result.state.amplitudes,
        flags=tuple(flags),
    )
