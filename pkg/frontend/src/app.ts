// Browser wiring for the workbench. All state flows one way: user actions
// fire requests, the push stream delivers revisions, the reducer updates the
// view, and the pure renderers repaint. Nothing is rendered optimistically.

import { ServiceClient, ServiceError } from "./api.js";
import {
  MapData,
  observationsFromTimeline,
  renderAmplitudeBars,
  renderBanner,
  renderInterferenceMap,
  renderTimeline,
  fmt,
} from "./render.js";
import { ObservationDetail, PushEvent, ViewState, applyPush, reduceAll } from "./state.js";

const SERVICE_URL =
  new URLSearchParams(window.location.search).get("service") ?? "http://127.0.0.1:8901";

const client = new ServiceClient(SERVICE_URL);

const $ = <T extends HTMLElement>(selector: string): T => {
  const el = document.querySelector<T>(selector);
  if (!el) throw new Error(`missing element ${selector}`);
  return el;
};

interface AppState {
  caseId: string | null;
  view: ViewState | null;
  mapData: MapData | null;
  pendingObservations: ObservationDetail[];
  selectedEdge: { i: string; j: string } | null;
  online: boolean;
  streamAbort: AbortController | null;
  obsCounter: number;
}

const app: AppState = {
  caseId: null,
  view: null,
  mapData: null,
  pendingObservations: [],
  selectedEdge: null,
  online: false,
  streamAbort: null,
  obsCounter: 0,
};

// --- rendering ----------------------------------------------------------------

function paint(): void {
  const { view, mapData } = app;
  $("#connection").className = app.online ? "online" : "offline";
  $("#connection").textContent = app.online
    ? `live · ${SERVICE_URL}`
    : "offline — controls disabled, no optimistic state";
  document
    .querySelectorAll<HTMLButtonElement | HTMLInputElement>("[data-needs-connection]")
    .forEach((el) => {
      el.disabled = !app.online || app.caseId === null;
    });
  if (!view) return;
  $("#banner-slot").innerHTML = renderBanner(view);
  $("#bars-slot").innerHTML = renderAmplitudeBars(view);
  if (mapData) {
    $("#map-slot").innerHTML = renderInterferenceMap(
      view.hypotheses,
      mapData.edges,
      observationsFromTimeline(view),
    );
    attachEdgeHandlers();
  }
  $("#timeline-slot").innerHTML = renderTimeline(view);
  $("#case-title").textContent = `${view.name} · ${view.caseId} · revision ${view.revision}`;
  paintPolarityPickers(view);
  paintQueue();
  paintForkChoices(view);
}

function paintPolarityPickers(view: ViewState): void {
  const slot = $("#polarity-slot");
  if (slot.childElementCount === view.hypotheses.length) return;
  slot.innerHTML = view.hypotheses
    .map(
      (h) => `
    <label class="polarity-pick">${h.id}
      <select data-polarity="${h.id}">
        <option value="">auto</option>
        <option value="1">supports</option>
        <option value="-1">contradicts</option>
        <option value="0">ambiguous</option>
      </select>
    </label>`,
    )
    .join("");
}

function paintQueue(): void {
  const next = app.pendingObservations[0];
  $("#queue-info").textContent = next
    ? `${app.pendingObservations.length} fixture observation(s) queued — next: ${next.id} "${next.statement}"`
    : "fixture observation queue empty";
  ($("#submit-next") as HTMLButtonElement).disabled =
    !app.online || app.pendingObservations.length === 0;
}

function paintForkChoices(view: ViewState): void {
  const applied = observationsFromTimeline(view);
  $("#fork-choices").innerHTML = applied
    .map(
      (o) =>
        `<label><input type="checkbox" data-drop="${o.id}"> drop ${o.id}</label>`,
    )
    .join(" ");
}

function banner(message: string, isError = true): void {
  const slot = $("#error-slot");
  slot.textContent = message;
  slot.className = message ? (isError ? "error-banner" : "info-banner") : "";
}

// --- stream -------------------------------------------------------------------

async function subscribe(caseId: string, from?: number): Promise<void> {
  app.streamAbort?.abort();
  const abort = new AbortController();
  app.streamAbort = abort;
  try {
    app.online = true;
    paint();
    for await (const push of client.events(caseId, { from, signal: abort.signal })) {
      app.view = applyPush(app.view, push);
      app.mapData = (await client.mapJson(caseId)) as MapData;
      paint();
    }
  } catch (err) {
    if (abort.signal.aborted) return;
    app.online = false;
    paint();
    banner(`push stream lost: ${String(err)} — use Reconnect`);
  }
}

// --- actions ------------------------------------------------------------------

async function loadFixture(): Promise<void> {
  const fixtureId = ($("#fixture-pick") as HTMLSelectElement).value;
  try {
    const doc = await client.fixture(fixtureId);
    app.pendingObservations = (doc.observations ?? []) as ObservationDetail[];
    doc.observations = [];
    const created = await client.createCase(doc);
    app.caseId = created.case_id;
    app.view = null;
    app.mapData = (await client.mapJson(created.case_id)) as MapData;
    banner("");
    void subscribe(created.case_id);
  } catch (err) {
    banner(`cannot load fixture: ${String(err)}`);
  }
}

async function submitNextQueued(): Promise<void> {
  const next = app.pendingObservations.shift();
  if (!next || !app.caseId) return;
  try {
    await client.submitObservation(app.caseId, next);
    paintQueue();
  } catch (err) {
    app.pendingObservations.unshift(next);
    banner(`submit failed: ${String(err)}`);
  }
}

async function submitForm(event: Event): Promise<void> {
  event.preventDefault();
  if (!app.caseId || !app.view) return;
  const statement = ($("#obs-statement") as HTMLInputElement).value.trim();
  if (!statement) {
    banner("observation statement must not be empty — nothing sent");
    return;
  }
  const weight = Number(($("#obs-weight") as HTMLInputElement).value);
  const overrides: Record<string, number> = {};
  document
    .querySelectorAll<HTMLSelectElement>("[data-polarity]")
    .forEach((select) => {
      if (select.value !== "")
        overrides[select.dataset.polarity as string] = Number(select.value);
    });
  app.obsCounter += 1;
  try {
    await client.submitObservation(app.caseId, {
      id: `U${app.obsCounter}`,
      statement,
      weight,
      overrides,
    });
    ($("#obs-statement") as HTMLInputElement).value = "";
    banner("");
  } catch (err) {
    const detail =
      err instanceof ServiceError && err.code === "degenerate_state"
        ? `degenerate update: this observation cancels every amplitude (${err.message})`
        : String(err);
    banner(`observation rejected: ${detail}`);
  }
}

function attachEdgeHandlers(): void {
  document.querySelectorAll<SVGPathElement>(".coupling").forEach((path) => {
    path.addEventListener("click", () => {
      const [i, j] = (path.dataset.edge as string).split(":");
      app.selectedEdge = { i, j };
      $("#edge-label").textContent = `editing coupling ${i} – ${j}`;
    });
  });
}

async function applyCoupling(): Promise<void> {
  if (!app.caseId) return;
  if (!app.selectedEdge) {
    banner("select an edge in the map first");
    return;
  }
  const value = Number(($("#edge-value") as HTMLInputElement).value);
  try {
    await client.putInterference(app.caseId, app.selectedEdge.i, app.selectedEdge.j, value);
    banner("");
  } catch (err) {
    banner(`override rejected: ${String(err)}`);
  }
}

async function forceCollapse(): Promise<void> {
  if (!app.caseId) return;
  try {
    await client.forceCollapse(app.caseId);
  } catch (err) {
    banner(`force collapse failed: ${String(err)}`);
  }
}

async function forkTimeline(): Promise<void> {
  if (!app.caseId) return;
  const drops = Array.from(
    document.querySelectorAll<HTMLInputElement>("[data-drop]:checked"),
  ).map((el) => el.dataset.drop as string);
  try {
    const fork = await client.fork(app.caseId, drops, []);
    const [parentPushes, childPushes] = await Promise.all([
      collectHistory(app.caseId),
      collectHistory(fork.case_id),
    ]);
    renderForkComparison(parentPushes, childPushes);
  } catch (err) {
    banner(`fork failed: ${String(err)}`);
  }
}

async function collectHistory(caseId: string): Promise<PushEvent[]> {
  const state = await client.state(caseId);
  const pushes: PushEvent[] = [];
  if (state.revision === 0) {
    pushes.push({ revision: 0, event: "snapshot", state });
    return pushes;
  }
  const abort = new AbortController();
  for await (const push of client.events(caseId, { from: 0, signal: abort.signal })) {
    pushes.push(push);
    if (push.revision >= state.revision) break;
  }
  abort.abort();
  return pushes;
}

function renderForkComparison(parent: PushEvent[], child: PushEvent[]): void {
  const parentView = reduceAll(parent);
  const childView = reduceAll(child);
  const rows = parentView.hypotheses
    .map((h, idx) => {
      const a = parentView.amplitudes[idx];
      const b = childView.amplitudes[idx];
      return `<tr><td>${h.id}</td><td>${fmt(a)}</td><td>${fmt(b)}</td><td>${fmt(b - a)}</td></tr>`;
    })
    .join("");
  $("#fork-slot").innerHTML = `
  <h3>what-if: ${childView.caseId}</h3>
  <p>original revision ${parentView.revision} vs fork revision ${childView.revision}</p>
  <table class="fork-table">
    <tr><th>hypothesis</th><th>original α</th><th>fork α</th><th>Δ</th></tr>
    ${rows}
  </table>`;
}

// --- bootstrap ------------------------------------------------------------------

async function start(): Promise<void> {
  try {
    const fixtures = await client.listFixtures();
    ($("#fixture-pick") as HTMLSelectElement).innerHTML = fixtures
      .map((f) => `<option value="${f.id}">${f.id}</option>`)
      .join("");
    app.online = true;
  } catch (err) {
    app.online = false;
    banner(`service unreachable at ${SERVICE_URL}: ${String(err)}`);
  }
  paint();

  $("#load-fixture").addEventListener("click", () => void loadFixture());
  $("#submit-next").addEventListener("click", () => void submitNextQueued());
  $("#obs-form").addEventListener("submit", (e) => void submitForm(e));
  $("#apply-edge").addEventListener("click", () => void applyCoupling());
  $("#force-collapse").addEventListener("click", () => void forceCollapse());
  $("#fork-button").addEventListener("click", () => void forkTimeline());
  $("#reconnect").addEventListener("click", () => {
    if (app.caseId) void subscribe(app.caseId, app.view?.revision ?? 0);
  });
  $("#obs-weight").addEventListener("input", () => {
    $("#weight-label").textContent = fmt(Number(($("#obs-weight") as HTMLInputElement).value), 2);
  });
}

void start();
