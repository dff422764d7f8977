/** Long-polling transcript loop with reconnect.
 *
 * The poller remembers the last seen seq, so after an outage it resumes
 * exactly where it stopped: the next request asks for `since=lastSeq` and
 * the server returns strictly newer messages, giving a gapless, duplicate-
 * free stream across any polling cadence or reconnection pattern.
 */

import type { ApiClient } from "./api.js";
import { appendPage, emptyTranscript, type TranscriptState } from "./state.js";
import type { TranscriptMessage } from "./types.js";

export interface PollerCallbacks {
  onMessages(fresh: TranscriptMessage[], state: TranscriptState): void;
  onConnectionChange(connected: boolean): void;
}

export interface PollerOptions {
  timeoutSeconds?: number;
  retryDelayMs?: number;
  idleDelayMs?: number;
  sleep?: (ms: number) => Promise<void>;
}

const defaultSleep = (ms: number) => new Promise<void>((resolve) => setTimeout(resolve, ms));

export class TranscriptPoller {
  private state: TranscriptState = emptyTranscript();
  private stopped = false;
  private connected = true;
  private readonly timeoutSeconds: number;
  private readonly retryDelayMs: number;
  private readonly idleDelayMs: number;
  private readonly sleep: (ms: number) => Promise<void>;

  constructor(
    private readonly api: ApiClient,
    private readonly runId: string,
    private readonly callbacks: PollerCallbacks,
    options: PollerOptions = {},
  ) {
    this.timeoutSeconds = options.timeoutSeconds ?? 25;
    this.retryDelayMs = options.retryDelayMs ?? 1000;
    this.idleDelayMs = options.idleDelayMs ?? 50;
    this.sleep = options.sleep ?? defaultSleep;
  }

  get lastSeq(): number {
    return this.state.lastSeq;
  }

  get snapshot(): TranscriptState {
    return this.state;
  }

  /** One poll round. Returns the delay to wait before the next round. */
  async tick(): Promise<number> {
    try {
      const page = await this.api.getTranscript(
        this.runId,
        this.state.lastSeq,
        this.timeoutSeconds,
      );
      if (!this.connected) {
        this.connected = true;
        this.callbacks.onConnectionChange(true);
      }
      const before = this.state.lastSeq;
      this.state = appendPage(this.state, page);
      if (this.state.lastSeq > before) {
        const fresh = this.state.messages.filter((m) => m.seq > before);
        this.callbacks.onMessages(fresh, this.state);
      }
      return this.idleDelayMs;
    } catch {
      if (this.connected) {
        this.connected = false;
        this.callbacks.onConnectionChange(false);
      }
      return this.retryDelayMs;
    }
  }

  async run(): Promise<void> {
    while (!this.stopped) {
      const delay = await this.tick();
      if (this.stopped) {
        break;
      }
      await this.sleep(delay);
    }
  }

  stop(): void {
    this.stopped = true;
  }
}
