/** Decision submission with client-side validation and a single-flight
 * guard: however often the user clicks, one intervention gets one POST. */

import type { ApiClient, SubmitOutcome } from "./api.js";
import { validateDecision } from "./state.js";
import type { DecisionChoice } from "./types.js";

export type SubmitResult =
  | SubmitOutcome
  | { kind: "blocked"; detail: string }
  | { kind: "duplicate" };

export class InterventionSubmitter {
  private readonly inFlight = new Set<string>();
  private readonly settled = new Set<string>();

  constructor(private readonly api: ApiClient) {}

  /** Pre-submit validation; an empty INTERCEPT editor never reaches the
   * network. */
  validate(choice: DecisionChoice, editorContent: string): string | null {
    return validateDecision(choice, editorContent);
  }

  async submit(
    interventionId: string,
    choice: DecisionChoice,
    editorContent: string = "",
  ): Promise<SubmitResult> {
    const problem = this.validate(choice, editorContent);
    if (problem !== null) {
      return { kind: "blocked", detail: problem };
    }
    if (this.inFlight.has(interventionId) || this.settled.has(interventionId)) {
      return { kind: "duplicate" };
    }
    this.inFlight.add(interventionId);
    try {
      const outcome = await this.api.submitDecision(
        interventionId,
        choice,
        choice === "INTERCEPT" ? editorContent : undefined,
      );
      if (outcome.kind !== "error") {
        this.settled.add(interventionId);
      }
      return outcome;
    } finally {
      this.inFlight.delete(interventionId);
    }
  }
}
