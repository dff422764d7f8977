/** Typed client for the run-control API. The fetch implementation is
 * injectable so tests can script the service. */

import type {
  DecisionChoice,
  InterventionView,
  RunDetail,
  RunSummary,
  TranscriptMessage,
} from "./types.js";

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export type SubmitOutcome =
  | { kind: "accepted" }
  | { kind: "conflict"; detail: string }
  | { kind: "error"; detail: string };

export class ApiClient {
  constructor(
    private readonly baseUrl: string = "",
    private readonly fetchImpl: FetchLike = (...args) => fetch(...args),
  ) {}

  private async getJson<T>(path: string): Promise<T> {
    const response = await this.fetchImpl(`${this.baseUrl}${path}`);
    if (!response.ok) {
      throw new Error(`GET ${path} failed with ${response.status}`);
    }
    return (await response.json()) as T;
  }

  listRuns(): Promise<RunSummary[]> {
    return this.getJson<RunSummary[]>("/runs");
  }

  getRun(runId: string): Promise<RunDetail> {
    return this.getJson<RunDetail>(`/runs/${runId}`);
  }

  async getTranscript(
    runId: string,
    since: number,
    timeoutSeconds: number = 0,
  ): Promise<TranscriptMessage[]> {
    const params = new URLSearchParams({
      since: String(since),
      timeout: String(timeoutSeconds),
    });
    const payload = await this.getJson<{ messages: TranscriptMessage[] }>(
      `/runs/${runId}/transcript?${params}`,
    );
    return payload.messages;
  }

  async getReport(runId: string): Promise<string> {
    const payload = await this.getJson<{ markdown: string }>(`/runs/${runId}/report`);
    return payload.markdown;
  }

  listInterventions(): Promise<InterventionView[]> {
    return this.getJson<InterventionView[]>("/interventions");
  }

  async submitDecision(
    interventionId: string,
    choice: DecisionChoice,
    replacementContent?: string,
  ): Promise<SubmitOutcome> {
    const response = await this.fetchImpl(
      `${this.baseUrl}/interventions/${interventionId}/decision`,
      {
        method: "POST",
        headers: { "Content-Type": "application/json" },
        body: JSON.stringify({
          choice,
          replacement_content: replacementContent ?? null,
        }),
      },
    );
    if (response.ok) {
      return { kind: "accepted" };
    }
    const detail = await response
      .json()
      .then((body: { detail?: string }) => body.detail ?? `HTTP ${response.status}`)
      .catch(() => `HTTP ${response.status}`);
    if (response.status === 409) {
      return { kind: "conflict", detail };
    }
    return { kind: "error", detail };
  }
}
