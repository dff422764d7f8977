/** Thin DOM rendering: everything shown comes from service payloads. */

import { latestFeedback, outcomeBadge } from "./state.js";
import type { InterventionView, RunSummary, TranscriptMessage } from "./types.js";

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) {
    node.className = className;
  }
  if (text !== undefined) {
    node.textContent = text;
  }
  return node;
}

export function renderRunList(
  container: HTMLElement,
  runs: RunSummary[],
  selected: string | null,
  onSelect: (runId: string) => void,
): void {
  container.replaceChildren();
  if (runs.length === 0) {
    container.append(el("p", "empty", "No runs yet."));
    return;
  }
  for (const run of runs) {
    const row = el("button", "run-row" + (run.run_id === selected ? " selected" : ""));
    row.append(el("span", "run-id", run.run_id));
    const badge = outcomeBadge(run);
    row.append(el("span", `badge badge-${badge.split(":")[0]?.toLowerCase()}`, badge));
    if (run.kpi) {
      row.append(
        el(
          "span",
          "kpi-mini",
          `${run.kpi.n_proven}/${run.kpi.n_properties} proven`,
        ),
      );
    }
    row.addEventListener("click", () => onSelect(run.run_id));
    container.append(row);
  }
}

export function renderTranscriptRows(
  container: HTMLElement,
  fresh: TranscriptMessage[],
): void {
  for (const message of fresh) {
    const row = el("div", `msg msg-${message.kind.toLowerCase()} msg-from-${message.sender === "human" ? "human" : "agent"}`);
    row.append(el("div", "msg-meta", `#${message.seq} ${message.sender} → ${message.recipient} [${message.kind}]`));
    row.append(el("pre", "msg-body", message.content));
    container.append(row);
  }
  container.scrollTop = container.scrollHeight;
}

export function renderConnection(banner: HTMLElement, connected: boolean): void {
  banner.textContent = connected ? "" : "disconnected — retrying…";
  banner.classList.toggle("visible", !connected);
}

export function renderReport(container: HTMLElement, markdown: string | null): void {
  container.replaceChildren();
  if (markdown === null) {
    container.append(el("p", "empty", "Report not available yet."));
    return;
  }
  container.append(el("pre", "report-md", markdown));
}

export interface InterventionPanelHooks {
  onDecision(choice: "TERMINATE" | "SKIP" | "INTERCEPT", editorContent: string): void;
}

export function renderInterventionPanel(
  container: HTMLElement,
  intervention: InterventionView | undefined,
  hooks: InterventionPanelHooks,
  notice: string = "",
): void {
  container.replaceChildren();
  container.classList.toggle("visible", intervention !== undefined);
  if (!intervention) {
    return;
  }
  container.append(el("h3", undefined, `Intervention requested (${intervention.property_id ?? "run"})`));
  const feedback = latestFeedback(intervention);
  if (feedback) {
    const panel = el("div", "feedback");
    panel.append(el("div", "feedback-title", "Latest critique / diagnostics"));
    panel.append(el("pre", undefined, feedback));
    container.append(panel);
  }
  const editor = el("textarea", "sva-editor");
  editor.rows = 8;
  editor.value = intervention.latest_draft ?? "";
  container.append(editor);
  if (notice) {
    container.append(el("p", "notice", notice));
  }
  const buttons = el("div", "decision-buttons");
  for (const choice of ["INTERCEPT", "SKIP", "TERMINATE"] as const) {
    const button = el("button", `decision decision-${choice.toLowerCase()}`, choice);
    button.addEventListener("click", () => hooks.onDecision(choice, editor.value));
    buttons.append(button);
  }
  container.append(buttons);
}
