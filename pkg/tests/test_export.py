from __future__ import annotations

import json

from qabd.casebook import fixture
from qabd.dynamics import run
from qabd.export import (
    interference_to_dot,
    interference_to_json,
    outcome_to_dict,
    traces_to_jsonl,
)
from qabd.model import Hypothesis, InterferenceMatrix


def _matrix(entries, provenance=None):
    n = len(entries)
    return InterferenceMatrix(
        entries=tuple(tuple(float(v) for v in row) for row in entries),
        provenance=tuple(
            tuple((provenance or [["derived"] * n] * n)[i][j] for j in range(n))
            for i in range(n)
        ),
    )


HYPS = (
    Hypothesis("H1", "First", "one"),
    Hypothesis("H2", "Second", "two"),
    Hypothesis("H3", "Third", "three"),
)


class TestDot:
    def test_styles_and_buckets(self):
        matrix = _matrix(
            [[0.0, 0.7, -0.2], [0.7, 0.0, 0.0], [-0.2, 0.0, 0.0]]
        )
        dot = interference_to_dot(HYPS, matrix)
        lines = dot.splitlines()
        assert lines[0] == "graph interference {"
        edge_12 = next(l for l in lines if '"H1" -- "H2"' in l)
        assert "style=solid" in edge_12 and "penwidth=3.0" in edge_12
        edge_13 = next(l for l in lines if '"H1" -- "H3"' in l)
        assert "style=dashed" in edge_13 and "penwidth=1.2" in edge_13
        # zero couplings are not drawn
        assert not any('"H2" -- "H3"' in l for l in lines)

    def test_nodes_carry_labels(self):
        dot = interference_to_dot(HYPS, _matrix([[0.0] * 3] * 3))
        assert '"H1" [label="H1: First"];' in dot

    def test_boundary_bucket(self):
        matrix = _matrix([[0.0, 0.5], [0.5, 0.0]])
        dot = interference_to_dot(HYPS[:2], matrix)
        assert "penwidth=3.0" in dot  # |I| >= 0.5 counts as strong


class TestJsonMap:
    def test_includes_zero_edges(self):
        payload = interference_to_json(HYPS, _matrix([[0.0] * 3] * 3))
        assert len(payload["edges"]) == 3
        assert all(edge["style"] == "none" for edge in payload["edges"])

    def test_provenance_passthrough(self):
        prov = [
            ["derived", "expert-override", "derived"],
            ["expert-override", "derived", "derived"],
            ["derived", "derived", "derived"],
        ]
        payload = interference_to_json(
            HYPS, _matrix([[0, -0.9, 0], [-0.9, 0, 0], [0, 0, 0]], prov)
        )
        edge = next(e for e in payload["edges"] if e["i"] == "H1" and e["j"] == "H2")
        assert edge["provenance"] == "expert-override"
        assert edge["style"] == "dashed"
        assert edge["bucket"] == "strong"


class TestTraceExport:
    def test_jsonl_one_line_per_trace_and_stable(self):
        result = run(fixture("bossetti").case)
        text = traces_to_jsonl(result.traces)
        lines = [line for line in text.splitlines() if line]
        assert len(lines) == len(result.traces)
        parsed = [json.loads(line) for line in lines]
        assert parsed[0]["observation_id"] == "O1"
        assert text == traces_to_jsonl(result.traces)

    def test_outcome_dict_fields(self):
        result = run(fixture("ludwig").case)
        doc = outcome_to_dict(result.outcome)
        assert doc["kind"] == "dominant"
        assert doc["members"] == ["H5"]
        assert doc["forced"] is False
