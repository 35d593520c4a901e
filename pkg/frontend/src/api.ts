// HTTP client for the abduction service. Thin fetch wrappers plus an async
// generator over the newline-delimited push stream.

import { PushEvent } from "./state.js";

export class ServiceError extends Error {
  constructor(
    readonly status: number,
    readonly code: string,
    message: string,
  ) {
    super(message);
  }
}

export class ServiceClient {
  constructor(readonly baseUrl: string) {}

  private async request(method: string, path: string, body?: unknown): Promise<any> {
    const response = await fetch(this.baseUrl + path, {
      method,
      headers: { "Content-Type": "application/json" },
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    const text = await response.text();
    const payload = text ? JSON.parse(text) : null;
    if (!response.ok) {
      throw new ServiceError(
        response.status,
        payload?.code ?? "error",
        payload?.message ?? `HTTP ${response.status}`,
      );
    }
    return payload;
  }

  listFixtures(): Promise<{ id: string; description: string }[]> {
    return this.request("GET", "/fixtures");
  }

  fixture(id: string): Promise<any> {
    return this.request("GET", `/fixtures/${id}`);
  }

  createCase(doc: unknown): Promise<{ case_id: string; revision: number }> {
    return this.request("POST", "/cases", doc);
  }

  state(caseId: string): Promise<any> {
    return this.request("GET", `/cases/${caseId}/state`);
  }

  submitObservation(caseId: string, observation: unknown): Promise<any> {
    return this.request("POST", `/cases/${caseId}/observations`, observation);
  }

  putInterference(caseId: string, i: string, j: string, value: number): Promise<any> {
    return this.request("PUT", `/cases/${caseId}/interference`, { i, j, value });
  }

  forceCollapse(caseId: string): Promise<any> {
    return this.request("POST", `/cases/${caseId}/collapse`);
  }

  fork(
    caseId: string,
    drops: string[],
    overrides: { i: string; j: string; value: number }[],
  ): Promise<{ case_id: string }> {
    return this.request("POST", `/cases/${caseId}/fork`, {
      drop_observation_ids: drops,
      extra_overrides: overrides,
    });
  }

  mapJson(caseId: string): Promise<any> {
    return this.request("GET", `/cases/${caseId}/map?format=json`);
  }

  // Yields push events as the server emits them. With `from` set, the
  // server first replays every recorded revision after it, then stays live;
  // without it, the stream opens with a snapshot of the current revision.
  async *events(
    caseId: string,
    options: { from?: number; signal?: AbortSignal } = {},
  ): AsyncGenerator<PushEvent> {
    const query = options.from !== undefined ? `?from=${options.from}` : "";
    const response = await fetch(`${this.baseUrl}/cases/${caseId}/events${query}`, {
      signal: options.signal,
    });
    if (!response.ok || response.body === null) {
      throw new ServiceError(response.status, "stream", "event stream unavailable");
    }
    const reader = response.body.getReader();
    const decoder = new TextDecoder();
    let buffered = "";
    try {
      while (true) {
        const { done, value } = await reader.read();
        if (done) break;
        buffered += decoder.decode(value, { stream: true });
        let newline: number;
        while ((newline = buffered.indexOf("\n")) >= 0) {
          const line = buffered.slice(0, newline).trim();
          buffered = buffered.slice(newline + 1);
          if (line) yield JSON.parse(line) as PushEvent;
        }
      }
    } finally {
      reader.releaseLock();
    }
  }
}
