/** Mirrors of the service JSON payloads. */

export interface Kpi {
  n_properties: number;
  n_proven: number;
  proven_rate: number;
  coverage_rate: number;
  run_success: boolean;
}

export interface RunSummary {
  run_id: string;
  created: string;
  active: boolean;
  stage_reached: string;
  outcome: string | null;
  kpi: Kpi | null;
}

export interface RunDetail extends RunSummary {
  record?: {
    properties: Array<{
      id: string;
      status: string;
      revision: number;
      origin: string;
    }>;
    findings: Array<{ property_id: string; verdict: string; explanation: string }>;
  };
}

export interface TranscriptMessage {
  seq: number;
  sender: string;
  recipient: string;
  kind: string;
  content: string;
  timestamp: string;
}

export type InterventionState = "WAITING" | "ANSWERED" | "EXPIRED";

export interface InterventionView {
  intervention_id: string;
  run_id: string;
  property_id: string | null;
  prompt_context: TranscriptMessage[];
  latest_draft: string | null;
  created: string;
  state: InterventionState;
}

export type DecisionChoice = "TERMINATE" | "SKIP" | "INTERCEPT";
