"""Exporters: step traces as JSON lines, interference maps as DOT or JSON.

DOT styling mirrors the split-layout map vocabulary: solid edges for
constructive coupling, dashed for destructive, with two width buckets
(|I| >= 0.5 strong, otherwise medium). Zero couplings are omitted from DOT
but kept in the JSON map so interactive views can render hairlines.
"""

from __future__ import annotations

import json
from typing import Sequence

from .dynamics import StepTrace
from .model import CollapseOutcome, Hypothesis, InterferenceMatrix

STRONG_EDGE = 0.5
_STRONG_PENWIDTH = 3.0
_MEDIUM_PENWIDTH = 1.2


def trace_to_dict(trace: StepTrace) -> dict:
    return {
        "observation_id": trace.observation_id,
        "evidence": list(trace.evidence),
        "interference_term": list(trace.interference_term),
        "pre_norm": list(trace.pre_norm),
        "post": {
            "amplitudes": list(trace.post.amplitudes),
            "step": trace.post.step,
        },
    }


def traces_to_jsonl(traces: Sequence[StepTrace]) -> str:
    """One trace per line; byte-stable for identical inputs."""
    return "".join(
        json.dumps(trace_to_dict(t), sort_keys=True, separators=(",", ":")) + "\n"
        for t in traces
    )


def outcome_to_dict(outcome: CollapseOutcome) -> dict:
    synthesized = None
    if outcome.synthesized is not None:
        synthesized = {
            "id": outcome.synthesized.id,
            "label": outcome.synthesized.label,
            "statement": outcome.synthesized.statement,
        }
    return {
        "kind": outcome.kind.value,
        "members": list(outcome.members),
        "confidence": outcome.confidence,
        "synthesized": synthesized,
        "tie_break": outcome.tie_break,
        "forced": outcome.forced,
    }


def interference_to_dot(
    hypotheses: Sequence[Hypothesis], interference: InterferenceMatrix
) -> str:
    """Graphviz source for the coupling graph (undirected, labeled edges)."""
    lines = ["graph interference {"]
    for h in hypotheses:
        label = f"{h.id}: {h.label}".replace('"', r"\"")
        lines.append(f'  "{h.id}" [label="{label}"];')
    n = interference.n
    for i in range(n):
        for j in range(i + 1, n):
            value = interference.entries[i][j]
            if value == 0.0:
                continue
            style = "solid" if value > 0 else "dashed"
            penwidth = _STRONG_PENWIDTH if abs(value) >= STRONG_EDGE else _MEDIUM_PENWIDTH
            lines.append(
                f'  "{hypotheses[i].id}" -- "{hypotheses[j].id}" '
                f'[label="{value:+.2f}", style={style}, penwidth={penwidth}];'
            )
    lines.append("}")
    return "\n".join(lines) + "\n"


def interference_to_json(
    hypotheses: Sequence[Hypothesis], interference: InterferenceMatrix
) -> dict:
    """Full map (every pair, zeros included) for interactive rendering."""
    edges = []
    n = interference.n
    for i in range(n):
        for j in range(i + 1, n):
            value = interference.entries[i][j]
            edges.append(
                {
                    "i": hypotheses[i].id,
                    "j": hypotheses[j].id,
                    "value": value,
                    "provenance": interference.provenance[i][j],
                    "style": "solid" if value > 0 else ("dashed" if value < 0 else "none"),
                    "bucket": "strong" if abs(value) >= STRONG_EDGE else "medium",
                }
            )
    return {
        "nodes": [{"id": h.id, "label": h.label} for h in hypotheses],
        "edges": edges,
    }
