// Pure renderers: view state in, markup string out. Keeping these free of
// DOM access makes rendering deterministic and snapshot-testable; app.ts
// only assigns the returned strings to innerHTML.

import {
  HypothesisInfo,
  ObservationDetail,
  ViewState,
  argmaxHypothesis,
} from "./state.js";

export interface CouplingEdge {
  i: string;
  j: string;
  value: number;
  provenance: string;
  style: string; // solid | dashed | none
  bucket: string; // strong | medium
}

export interface MapData {
  nodes: { id: string; label: string }[];
  edges: CouplingEdge[];
}

const STRONG = 0.5;

function esc(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

export function fmt(value: number, places = 5): string {
  // avoid "-0.00000" noise in bars and banners
  const rendered = value.toFixed(places);
  return rendered === (-0).toFixed(places) && value === 0 ? (0).toFixed(places) : rendered;
}

// --- amplitude bars ---------------------------------------------------------

export function renderAmplitudeBars(view: ViewState): string {
  const rows = view.hypotheses
    .map((h, i) => {
      const amplitude = view.amplitudes[i];
      const square = view.squares[i];
      const width = Math.min(100, Math.abs(amplitude) * 100);
      const side = amplitude >= 0 ? "pos" : "neg";
      return `
  <div class="amp-row" data-hypothesis="${esc(h.id)}">
    <span class="amp-label" title="${esc(h.statement)}">${esc(h.id)} ${esc(h.label)}</span>
    <span class="amp-track"><span class="amp-bar ${side}" style="width:${width.toFixed(1)}%"></span></span>
    <span class="amp-value">${fmt(amplitude)}</span>
    <span class="amp-square">${fmt(square)}</span>
  </div>`;
    })
    .join("");
  return `<div class="amp-bars">
  <div class="amp-head"><span>hypothesis</span><span></span><span>amplitude</span><span>weight</span></div>${rows}
</div>`;
}

// --- collapse banner ---------------------------------------------------------

export function renderBanner(view: ViewState): string {
  const outcome = view.outcome;
  const leader = argmaxHypothesis(view);
  const members = outcome.members.join(" + ") || "(none)";
  const forced = outcome.forced ? " forced" : "";
  let text: string;
  if (outcome.kind === "dominant") {
    text = `Dominant: ${members}`;
  } else if (outcome.kind === "hybrid") {
    text = `Hybrid synthesis: ${members}`;
  } else {
    text = `Deferred — in superposition: ${members}`;
  }
  return `<div class="banner banner-${esc(outcome.kind)}${forced}" data-kind="${esc(outcome.kind)}" data-leader="${esc(leader.id)}">
  <strong>${esc(text)}</strong>
  <span class="banner-meta">leader ${esc(leader.id)} · confidence ${fmt(outcome.confidence, 4)} · revision ${view.revision}${outcome.forced ? " · FORCED" : ""}${outcome.tie_break ? " · tie-break" : ""}</span>
</div>`;
}

// --- event timeline ----------------------------------------------------------

export function renderTimeline(view: ViewState): string {
  const items = view.timeline
    .map(
      (entry) => `
  <li class="timeline-${esc(entry.event)}" data-revision="${entry.revision}">
    <span class="rev">r${entry.revision}</span> ${esc(entry.summary)}
  </li>`,
    )
    .join("");
  return `<ol class="timeline">${items}\n</ol>`;
}

// --- split-layout interference map -------------------------------------------

interface Box {
  x: number;
  y: number;
}

function arrowClass(value: number, weight: number): string {
  const sign = value > 0 ? "constructive" : "destructive";
  const strength = Math.abs(value) * weight >= STRONG ? "strong" : "medium";
  return `${sign} ${strength}`;
}

function couplingClass(value: number): string {
  if (value === 0) return "neutral hairline";
  const sign = value > 0 ? "constructive" : "destructive";
  const strength = Math.abs(value) >= STRONG ? "strong" : "medium";
  return `${sign} ${strength}`;
}

// Hypotheses sit in a central band; observations split above/below it in
// arrival order. Solid edges reinforce, dashed edges suppress, and the two
// stroke widths encode the strong/medium buckets.
export function renderInterferenceMap(
  hypotheses: HypothesisInfo[],
  couplings: CouplingEdge[],
  observations: ObservationDetail[],
): string {
  const colWidth = 150;
  const width = Math.max(640, Math.max(hypotheses.length, Math.ceil(observations.length / 2)) * colWidth + 40);
  const height = 360;
  const bandY = 180;
  const aboveY = 50;
  const belowY = 310;
  const boxW = 120;
  const boxH = 34;

  const hypBox = new Map<string, Box>();
  hypotheses.forEach((h, i) => {
    const x = 20 + i * ((width - 40 - boxW) / Math.max(1, hypotheses.length - 1));
    hypBox.set(h.id, { x, y: bandY });
  });

  const parts: string[] = [];
  parts.push(
    `<svg class="interference-map" xmlns="http://www.w3.org/2000/svg" viewBox="0 0 ${width} ${height}" width="${width}" height="${height}">`,
  );

  // coupling arcs first so nodes draw over them
  for (const edge of couplings) {
    const a = hypBox.get(edge.i);
    const b = hypBox.get(edge.j);
    if (!a || !b || edge.i === edge.j) continue;
    const x1 = a.x + boxW / 2;
    const x2 = b.x + boxW / 2;
    const midX = (x1 + x2) / 2;
    const arcY = bandY + boxH + 36 + Math.abs(x2 - x1) / 12;
    parts.push(
      `<path class="coupling ${couplingClass(edge.value)}" data-edge="${esc(edge.i)}:${esc(edge.j)}" data-provenance="${esc(edge.provenance)}" d="M ${x1.toFixed(1)} ${(bandY + boxH).toFixed(1)} Q ${midX.toFixed(1)} ${arcY.toFixed(1)} ${x2.toFixed(1)} ${(bandY + boxH).toFixed(1)}" fill="none"><title>${esc(edge.i)}–${esc(edge.j)}: ${fmt(edge.value, 2)} (${esc(edge.provenance)})</title></path>`,
    );
  }

  // observation -> hypothesis projection arrows
  observations.forEach((obs, index) => {
    const above = index % 2 === 0;
    const row = Math.floor(index / 2);
    const x = 20 + row * colWidth;
    const y = above ? aboveY : belowY;
    for (const [hid, value] of Object.entries(obs.overrides)) {
      if (value === 0) continue;
      const target = hypBox.get(hid);
      if (!target) continue;
      const x1 = x + boxW / 2;
      const y1 = above ? y + boxH : y;
      const x2 = target.x + boxW / 2;
      const y2 = above ? target.y : target.y + boxH;
      parts.push(
        `<line class="projection ${arrowClass(value, obs.weight)}" x1="${x1.toFixed(1)}" y1="${y1.toFixed(1)}" x2="${x2.toFixed(1)}" y2="${y2.toFixed(1)}"><title>${esc(obs.id)} → ${esc(hid)}: ${fmt(value, 2)} × w${fmt(obs.weight, 2)}</title></line>`,
      );
    }
    parts.push(
      `<g class="obs-node"><rect x="${x}" y="${y}" width="${boxW}" height="${boxH}" rx="4"></rect><text x="${x + boxW / 2}" y="${y + boxH / 2 + 4}" text-anchor="middle">${esc(obs.id)}</text></g>`,
    );
  });

  for (const h of hypotheses) {
    const box = hypBox.get(h.id)!;
    parts.push(
      `<g class="hyp-node" data-hypothesis="${esc(h.id)}"><rect x="${box.x}" y="${box.y}" width="${boxW}" height="${boxH}" rx="4"></rect><text x="${box.x + boxW / 2}" y="${box.y + boxH / 2 + 4}" text-anchor="middle">${esc(h.id)}: ${esc(h.label)}</text></g>`,
    );
  }

  parts.push("</svg>");
  return parts.join("\n");
}

// --- whole workbench panel -----------------------------------------------------

export function renderWorkbench(
  view: ViewState,
  mapData: MapData,
  observations: ObservationDetail[],
): string {
  return [
    renderBanner(view),
    renderAmplitudeBars(view),
    renderInterferenceMap(view.hypotheses, mapData.edges, observations),
    renderTimeline(view),
  ].join("\n");
}

export function observationsFromTimeline(view: ViewState): ObservationDetail[] {
  return view.timeline
    .filter((entry) => entry.observation !== undefined)
    .map((entry) => entry.observation as ObservationDetail);
}
