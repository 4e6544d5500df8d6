// Newline-delimited JSON protocol shared with the ringpose session service.
// One JSON object per line; unknown fields are ignored, unknown types rejected.

export const POSES = [
  "index-proximal", "index-middle", "index-distal",
  "middle-proximal", "middle-middle", "middle-distal",
  "ring-proximal", "ring-middle", "ring-distal",
  "little-proximal", "little-middle", "little-distal",
] as const;
export type PoseLabel = (typeof POSES)[number];
export const NO_POSE = "no-pose";

export const MESSAGE_TYPES = [
  "frame", "event", "stimulus", "feedback", "calibration_report", "session_control",
] as const;
export type MessageType = (typeof MESSAGE_TYPES)[number];

export interface FrameMsg {
  type: "frame";
  t_ms: number;
  readings: number[];
  oor: boolean[];
}

export interface EventMsg {
  type: "event";
  label: string;
  t_ms: number;
  tally: Record<string, number>;
}

export interface StimulusMsg {
  type: "stimulus";
  prompt_id: number;
  label: string;
  t_ms: number;
  deadline_ms: number;
}

export interface FeedbackMsg {
  type: "feedback";
  prompt_id: number;
  label: string;
  predicted: string | null;
  match: boolean;
  outcome: "match" | "mismatch" | "no-emission";
  t_ms: number;
}

export interface CalibrationReportMsg {
  type: "calibration_report";
  round: number;
  report: {
    offsets: Record<string, number[]>;
    average_offset_mm: number;
    pass: boolean;
    worst_pose: string;
    worst_sensor: number;
    worst_signed_mm: number;
  };
  hint: string;
  mount: { rotation_deg: number; axial_mm: number; tilt_deg: number };
}

export interface ControlMsg {
  type: "session_control";
  action: string;
  [key: string]: unknown;
}

export type ServerMessage =
  | FrameMsg
  | EventMsg
  | StimulusMsg
  | FeedbackMsg
  | CalibrationReportMsg
  | ControlMsg;

export function encodeLine(msg: object): string {
  return JSON.stringify(msg) + "\n";
}

export function parseMessage(line: string): ServerMessage {
  const obj = JSON.parse(line) as { type?: string };
  if (!obj || typeof obj !== "object" || !MESSAGE_TYPES.includes(obj.type as MessageType)) {
    throw new Error(`unknown message type: ${obj?.type}`);
  }
  return obj as ServerMessage;
}

/** Incremental NDJSON splitter; feeds complete lines to the callback. */
export function createLineParser(onMessage: (msg: ServerMessage) => void, onError?: (err: Error, line: string) => void) {
  let buffer = "";
  return {
    push(chunk: string) {
      buffer += chunk;
      for (;;) {
        const idx = buffer.indexOf("\n");
        if (idx === -1) break;
        const line = buffer.slice(0, idx).trim();
        buffer = buffer.slice(idx + 1);
        if (!line) continue;
        try {
          onMessage(parseMessage(line));
        } catch (err) {
          onError?.(err as Error, line);
        }
      }
    },
  };
}

// Client commands ride in session_control messages.
export const setPoseCmd = (label: string): ControlMsg => ({
  type: "session_control",
  action: "set_pose",
  label,
});
export const releaseCmd = (): ControlMsg => ({ type: "session_control", action: "release" });
export const adjustCmd = (rotation_deg: number, axial_mm: number, tilt_deg = 0): ControlMsg => ({
  type: "session_control",
  action: "adjust",
  rotation_deg,
  axial_mm,
  tilt_deg,
});
export const captureCmd = (frames?: number): ControlMsg =>
  frames === undefined
    ? { type: "session_control", action: "capture" }
    : { type: "session_control", action: "capture", frames };
export const quitCmd = (): ControlMsg => ({ type: "session_control", action: "quit" });
