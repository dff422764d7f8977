/** Dashboard bootstrap: one polling loop per open run view, decision
 * submissions serialized per intervention. */

import { ApiClient } from "./api.js";
import { InterventionSubmitter } from "./intervention.js";
import { TranscriptPoller } from "./poller.js";
import {
  renderConnection,
  renderInterventionPanel,
  renderReport,
  renderRunList,
  renderTranscriptRows,
} from "./render.js";
import { waitingInterventionFor } from "./state.js";
import type { InterventionView, RunSummary } from "./types.js";

const api = new ApiClient("");
const submitter = new InterventionSubmitter(api);

const runListEl = document.getElementById("run-list") as HTMLElement;
const transcriptEl = document.getElementById("transcript") as HTMLElement;
const connectionEl = document.getElementById("connection") as HTMLElement;
const reportEl = document.getElementById("report") as HTMLElement;
const interventionEl = document.getElementById("intervention") as HTMLElement;

let selectedRun: string | null = null;
let poller: TranscriptPoller | null = null;
let runs: RunSummary[] = [];
let interventions: InterventionView[] = [];
let panelNotice = "";

function selectRun(runId: string): void {
  if (selectedRun === runId) {
    return;
  }
  selectedRun = runId;
  panelNotice = "";
  transcriptEl.replaceChildren();
  poller?.stop();
  poller = new TranscriptPoller(api, runId, {
    onMessages: (fresh) => renderTranscriptRows(transcriptEl, fresh),
    onConnectionChange: (connected) => renderConnection(connectionEl, connected),
  });
  void poller.run();
  void refreshReport();
  refreshSidebar();
}

async function refreshReport(): Promise<void> {
  if (!selectedRun) {
    return;
  }
  try {
    renderReport(reportEl, await api.getReport(selectedRun));
  } catch {
    renderReport(reportEl, null);
  }
}

function refreshSidebar(): void {
  renderRunList(runListEl, runs, selectedRun, selectRun);
  const waiting = selectedRun ? waitingInterventionFor(interventions, selectedRun) : undefined;
  renderInterventionPanel(
    interventionEl,
    waiting,
    {
      onDecision: (choice, editorContent) => {
        if (!waiting) {
          return;
        }
        void submitter.submit(waiting.intervention_id, choice, editorContent).then((result) => {
          if (result.kind === "blocked") {
            panelNotice = result.detail;
          } else if (result.kind === "conflict") {
            panelNotice = `already answered elsewhere: ${result.detail}`;
          } else {
            panelNotice = "";
          }
          void refreshControl();
        });
      },
    },
    panelNotice,
  );
}

async function refreshControl(): Promise<void> {
  try {
    [runs, interventions] = await Promise.all([api.listRuns(), api.listInterventions()]);
    renderConnection(connectionEl, true);
  } catch {
    renderConnection(connectionEl, false);
    return;
  }
  if (!selectedRun && runs.length > 0) {
    selectRun(runs[0]!.run_id);
    return;
  }
  refreshSidebar();
  const current = runs.find((r) => r.run_id === selectedRun);
  if (current && !current.active) {
    void refreshReport();
  }
}

void refreshControl();
setInterval(() => void refreshControl(), 2000);
