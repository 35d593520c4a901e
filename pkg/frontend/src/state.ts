// View-state types and the reducer that applies server push events.
// The server is the single source of truth: every number displayed by the
// workbench arrives in a push payload; nothing is computed client-side.

export interface HypothesisInfo {
  id: string;
  label: string;
  statement: string;
}

export interface OutcomeInfo {
  kind: string;
  members: string[];
  confidence: number;
  synthesized: { id: string; label: string; statement: string } | null;
  tie_break: boolean;
  forced: boolean;
}

export interface StatePayload {
  case_id: string;
  name: string;
  revision: number;
  amplitudes: number[];
  squares: number[];
  coherence: number;
  step: number;
  hypotheses: HypothesisInfo[];
  outcome: OutcomeInfo;
}

export interface ObservationDetail {
  id: string;
  statement: string;
  weight: number;
  overrides: Record<string, number>;
}

export interface PushEvent {
  revision: number;
  event: string;
  state: StatePayload;
  detail?: {
    observation?: ObservationDetail;
    sequence?: number;
    i?: string;
    j?: string;
    value?: number;
    outcome?: OutcomeInfo;
  };
}

export interface TimelineEntry {
  revision: number;
  event: string;
  summary: string;
  amplitudes: number[];
  observation?: ObservationDetail;
}

export interface ViewState {
  caseId: string;
  name: string;
  revision: number;
  hypotheses: HypothesisInfo[];
  amplitudes: number[];
  squares: number[];
  coherence: number;
  outcome: OutcomeInfo;
  timeline: TimelineEntry[];
}

function summarize(push: PushEvent): string {
  const detail = push.detail ?? {};
  switch (push.event) {
    case "snapshot":
      return "connected";
    case "observation":
      return detail.observation
        ? `observation ${detail.observation.id}: ${detail.observation.statement}`
        : "observation applied";
    case "override":
      return `coupling (${detail.i}, ${detail.j}) set to ${detail.value}`;
    case "forced_collapse":
      return detail.outcome
        ? `forced collapse: ${detail.outcome.kind} ${detail.outcome.members.join("+")}`
        : "forced collapse";
    default:
      return push.event;
  }
}

// Applies one push; throws if the stream delivers a stale revision, which
// would mean the transport broke its ordering contract.
export function applyPush(view: ViewState | null, push: PushEvent): ViewState {
  if (view !== null && push.revision < view.revision) {
    throw new Error(
      `push revision ${push.revision} older than view revision ${view.revision}`,
    );
  }
  const s = push.state;
  const entry: TimelineEntry = {
    revision: push.revision,
    event: push.event,
    summary: summarize(push),
    amplitudes: [...s.amplitudes],
    observation: push.detail?.observation,
  };
  const timeline = view === null ? [entry] : [...view.timeline, entry];
  return {
    caseId: s.case_id,
    name: s.name,
    revision: push.revision,
    hypotheses: s.hypotheses,
    amplitudes: [...s.amplitudes],
    squares: [...s.squares],
    coherence: s.coherence,
    outcome: s.outcome,
    timeline,
  };
}

export function reduceAll(pushes: PushEvent[]): ViewState {
  if (pushes.length === 0) throw new Error("no push events to reduce");
  let view: ViewState | null = null;
  for (const push of pushes) view = applyPush(view, push);
  return view as ViewState;
}

// Display-tolerance invariant: the squared amplitudes reported by the server
// must sum to 1 within 1e-6.
export function squaresConsistent(view: ViewState): boolean {
  const sum = view.squares.reduce((acc, v) => acc + v, 0);
  return Math.abs(sum - 1) <= 1e-6;
}

export function argmaxHypothesis(view: ViewState): HypothesisInfo {
  let best = 0;
  view.squares.forEach((v, i) => {
    if (v > view.squares[best]) best = i;
  });
  return view.hypotheses[best];
}
