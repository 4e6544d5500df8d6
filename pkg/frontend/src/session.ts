// Study-runner view model. All recognition results come from server messages;
// the controller never classifies anything locally (the protocol log proves it).

import type {
  ControlMsg,
  FeedbackMsg,
  ServerMessage,
  StimulusMsg,
} from "./protocol.js";
import { NO_POSE, releaseCmd, setPoseCmd } from "./protocol.js";
import type { Transport } from "./transport.js";

export type FeedbackColor = "neutral" | "green" | "blue";

export interface SessionViewState {
  connected: boolean;
  running: boolean;
  done: boolean;
  prompts: number;
  promptMs: number;
  stimulus: { promptId: number; label: string; deadlineMs: number } | null;
  nowMs: number;
  countdownMs: number | null;
  feedback: { color: FeedbackColor; predicted: string | null; outcome: string | null };
  score: { correct: number; total: number };
  heldPose: string | null;
  lastReadings: number[] | null;
  lastOor: boolean[] | null;
  lastEvent: { label: string; tMs: number } | null;
  error: string | null;
}

export interface LogEntry {
  dir: "in" | "out";
  msg: object;
}

const initialState = (): SessionViewState => ({
  connected: true,
  running: false,
  done: false,
  prompts: 0,
  promptMs: 4000,
  stimulus: null,
  nowMs: 0,
  countdownMs: null,
  feedback: { color: "neutral", predicted: null, outcome: null },
  score: { correct: 0, total: 0 },
  heldPose: null,
  lastReadings: null,
  lastOor: null,
  lastEvent: null,
  error: null,
});

export class SessionController {
  readonly state: SessionViewState = initialState();
  readonly log: LogEntry[] = [];
  private listeners: Array<(s: SessionViewState) => void> = [];

  constructor(private transport: Transport) {
    transport.onMessage((msg) => this.handleMessage(msg));
    transport.onClose(() => {
      // No stale feedback after a connection loss: the view shows only the
      // disconnected banner.
      this.state.connected = false;
      this.state.running = false;
      this.state.stimulus = null;
      this.state.countdownMs = null;
      this.state.feedback = { color: "neutral", predicted: null, outcome: null };
      this.emit();
    });
  }

  onChange(listener: (s: SessionViewState) => void): void {
    this.listeners.push(listener);
  }

  private emit(): void {
    for (const l of this.listeners) l(this.state);
  }

  private send(cmd: ControlMsg): void {
    this.log.push({ dir: "out", msg: cmd });
    this.transport.send(cmd);
  }

  clickPhalanx(label: string): void {
    this.state.heldPose = label;
    this.send(setPoseCmd(label));
    this.emit();
  }

  release(): void {
    this.state.heldPose = NO_POSE;
    this.send(releaseCmd());
    this.emit();
  }

  handleMessage(msg: ServerMessage): void {
    this.log.push({ dir: "in", msg });
    switch (msg.type) {
      case "session_control": {
        const action = msg.action;
        if (action === "start") {
          this.state.running = true;
          this.state.prompts = (msg as ControlMsg & { prompts?: number }).prompts ?? 0;
          this.state.promptMs = (msg as ControlMsg & { prompt_ms?: number }).prompt_ms ?? 4000;
        } else if (action === "end") {
          this.state.running = false;
          this.state.done = true;
          this.state.stimulus = null;
          this.state.countdownMs = null;
        } else if (action === "busy" || action === "error") {
          this.state.error = String((msg as ControlMsg & { reason?: string; error?: string }).reason ?? (msg as ControlMsg & { error?: string }).error ?? action);
        }
        break;
      }
      case "stimulus": {
        const s = msg as StimulusMsg;
        this.state.stimulus = { promptId: s.prompt_id, label: s.label, deadlineMs: s.deadline_ms };
        // feedback state only changes on feedback messages; the countdown
        // tracks the server deadline against the frame clock.
        this.state.countdownMs = s.deadline_ms - this.state.nowMs;
        break;
      }
      case "frame": {
        this.state.nowMs = msg.t_ms;
        this.state.lastReadings = msg.readings;
        this.state.lastOor = msg.oor;
        if (this.state.stimulus) {
          this.state.countdownMs = Math.max(0, this.state.stimulus.deadlineMs - msg.t_ms);
        }
        break;
      }
      case "event": {
        this.state.lastEvent = { label: msg.label, tMs: msg.t_ms };
        break;
      }
      case "feedback": {
        const fb = msg as FeedbackMsg;
        const color: FeedbackColor = fb.outcome === "match" ? "green" : "blue";
        this.state.feedback = { color, predicted: fb.predicted, outcome: fb.outcome };
        this.state.score.total += 1;
        if (fb.match) this.state.score.correct += 1;
        break;
      }
      case "calibration_report": {
        break; // not part of the study view; explicitly ignored
      }
    }
    this.emit();
  }
}
