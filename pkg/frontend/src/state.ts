/** Pure view-state helpers. Every rendered datum derives from a service
 * payload; nothing here invents state. */

import type { InterventionView, RunSummary, TranscriptMessage } from "./types.js";

export interface TranscriptState {
  messages: TranscriptMessage[];
  lastSeq: number;
}

export function emptyTranscript(): TranscriptState {
  return { messages: [], lastSeq: 0 };
}

/** Append a transcript page, dropping anything already seen. The result is
 * gapless and strictly increasing regardless of page overlaps. */
export function appendPage(
  state: TranscriptState,
  page: TranscriptMessage[],
): TranscriptState {
  const fresh = page
    .filter((m) => m.seq > state.lastSeq)
    .sort((a, b) => a.seq - b.seq);
  if (fresh.length === 0) {
    return state;
  }
  let lastSeq = state.lastSeq;
  for (const message of fresh) {
    if (message.seq !== lastSeq + 1) {
      throw new Error(`transcript gap: got seq ${message.seq} after ${lastSeq}`);
    }
    lastSeq = message.seq;
  }
  return { messages: [...state.messages, ...fresh], lastSeq };
}

/** The intervention panel is shown iff a WAITING entry exists for the run. */
export function waitingInterventionFor(
  interventions: InterventionView[],
  runId: string,
): InterventionView | undefined {
  return interventions.find((i) => i.run_id === runId && i.state === "WAITING");
}

export function outcomeBadge(run: RunSummary): string {
  if (run.active) {
    return `running:${run.stage_reached}`;
  }
  return run.outcome ?? "unknown";
}

/** Critique/diagnostic feedback to show beside the SVA editor: the latest
 * reply in the intervention context that is not the draft itself. */
export function latestFeedback(intervention: InterventionView): string | null {
  const replies = intervention.prompt_context.filter(
    (m) => m.kind === "REPLY" || m.kind === "FEEDBACK",
  );
  const last = replies[replies.length - 1];
  return last ? last.content : null;
}

export function validateDecision(
  choice: string,
  editorContent: string,
): string | null {
  if (choice === "INTERCEPT" && editorContent.trim() === "") {
    return "INTERCEPT needs replacement SVA in the editor";
  }
  return null;
}
