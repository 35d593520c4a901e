import assert from "node:assert/strict";
import { test } from "node:test";

import {
  CouplingEdge,
  renderAmplitudeBars,
  renderBanner,
  renderInterferenceMap,
  renderTimeline,
} from "../src/render.js";
import { ObservationDetail, applyPush, PushEvent } from "../src/state.js";

const HYPS = [
  { id: "H1", label: "First", statement: "one account" },
  { id: "H2", label: "Second", statement: "another account" },
  { id: "H3", label: "Third", statement: "a third account" },
];

function edge(i: string, j: string, value: number, provenance = "derived"): CouplingEdge {
  return {
    i,
    j,
    value,
    provenance,
    style: value > 0 ? "solid" : value < 0 ? "dashed" : "none",
    bucket: Math.abs(value) >= 0.5 ? "strong" : "medium",
  };
}

function viewWith(amplitudes: number[], outcome: Partial<PushEvent["state"]["outcome"]> = {}) {
  const push: PushEvent = {
    revision: 4,
    event: "observation",
    state: {
      case_id: "case-9",
      name: "demo",
      revision: 4,
      amplitudes,
      squares: amplitudes.map((a) => a * a),
      coherence: Math.max(...amplitudes.map((a) => a * a)),
      step: 4,
      hypotheses: HYPS.slice(0, amplitudes.length),
      outcome: {
        kind: "deferred",
        members: ["H1"],
        confidence: 0.4,
        synthesized: null,
        tie_break: false,
        forced: false,
        ...outcome,
      },
    },
  };
  return applyPush(null, push);
}

test("coupling arcs: solid/dashed by sign, width bucket at |I| >= 0.5, hairline at zero", () => {
  const svg = renderInterferenceMap(
    HYPS,
    [edge("H1", "H2", -0.9), edge("H1", "H3", 0.3), edge("H2", "H3", 0.0)],
    [],
  );
  const h12 = svg.split("\n").find((l) => l.includes('data-edge="H1:H2"'))!;
  assert.match(h12, /destructive strong/);
  const h13 = svg.split("\n").find((l) => l.includes('data-edge="H1:H3"'))!;
  assert.match(h13, /constructive medium/);
  const h23 = svg.split("\n").find((l) => l.includes('data-edge="H2:H3"'))!;
  assert.match(h23, /neutral hairline/);
});

test("no self-edges are rendered", () => {
  const svg = renderInterferenceMap(HYPS, [edge("H1", "H1", 0.7)], []);
  assert.ok(!svg.includes('data-edge="H1:H1"'));
});

test("observation arrows split above/below and style by sign and salience", () => {
  const observations: ObservationDetail[] = [
    { id: "O1", statement: "first", weight: 1.0, overrides: { H1: 1.0, H2: -1.0, H3: 0.0 } },
    { id: "O2", statement: "second", weight: 0.4, overrides: { H1: 1.0 } },
  ];
  const svg = renderInterferenceMap(HYPS, [], observations);
  const lines = svg.split("\n");
  const o1h1 = lines.find((l) => l.includes("O1 → H1"))!;
  assert.match(o1h1, /constructive strong/);
  const o1h2 = lines.find((l) => l.includes("O1 → H2"))!;
  assert.match(o1h2, /destructive strong/);
  // |1.0| * 0.4 < 0.5 -> medium
  const o2h1 = lines.find((l) => l.includes("O2 → H1"))!;
  assert.match(o2h1, /constructive medium/);
  // ambiguous marks draw no arrow
  assert.equal(lines.filter((l) => l.includes("O1 → H3")).length, 0);
  // O1 above the band, O2 below
  const o1Node = lines.find((l) => l.includes(">O1<"))!;
  const o2Node = lines.find((l) => l.includes(">O2<"))!;
  assert.match(o1Node, /y="50"/);
  assert.match(o2Node, /y="310"/);
});

test("rendering is deterministic", () => {
  const observations: ObservationDetail[] = [
    { id: "O1", statement: "x", weight: 0.6, overrides: { H1: 1.0, H2: -1.0 } },
  ];
  const couplings = [edge("H1", "H2", -0.4, "expert-override")];
  const first = renderInterferenceMap(HYPS, couplings, observations);
  const second = renderInterferenceMap(HYPS, couplings, observations);
  assert.equal(first, second);
});

test("amplitude bars carry the exact server numbers", () => {
  const view = viewWith([0.8, -0.6]);
  const html = renderAmplitudeBars(view);
  assert.ok(html.includes("0.80000"));
  assert.ok(html.includes("-0.60000"));
  assert.ok(html.includes("0.64000")); // square
  assert.match(html, /amp-bar neg/);
});

test("banner: deferred vs dominant vs forced", () => {
  const deferred = renderBanner(viewWith([0.8, 0.6]));
  assert.match(deferred, /Deferred — in superposition/);
  assert.match(deferred, /data-leader="H1"/);

  const dominant = renderBanner(
    viewWith([0.9, 0.43589], { kind: "dominant", members: ["H1"], confidence: 0.81 }),
  );
  assert.match(dominant, /Dominant: H1/);

  const forced = renderBanner(
    viewWith([0.7071, 0.7071], {
      kind: "dominant",
      members: ["H1"],
      forced: true,
      tie_break: true,
    }),
  );
  assert.match(forced, /FORCED/);
  assert.match(forced, /tie-break/);
});

test("timeline renders one entry per revision in order", () => {
  const view = viewWith([0.8, 0.6]);
  const html = renderTimeline(view);
  assert.match(html, /data-revision="4"/);
  assert.match(html, /observation applied/);
});
