// Calibration dashboard view model: 18 offset bars against the 0.7 mm line,
// slider-driven mount nudges, one report per capture round.

import type { CalibrationReportMsg, ControlMsg, ServerMessage } from "./protocol.js";
import { adjustCmd, captureCmd } from "./protocol.js";
import type { Transport } from "./transport.js";

export const THRESHOLD_MM = 0.7;
export const MIN_CAPTURE_FRAMES = 10;

export interface CalibrationViewState {
  connected: boolean;
  poses: string[];
  bars: number[]; // 18 values: per calibration pose, per sensor, mirrors the report
  averageMm: number | null;
  passed: boolean;
  banner: "idle" | "adjusting" | "pass";
  hint: string;
  rounds: number;
  mount: { rotationDeg: number; axialMm: number; tiltDeg: number };
  captureFrames: number;
  validationError: string | null;
  error: string | null;
}

const initialState = (): CalibrationViewState => ({
  connected: true,
  poses: [],
  bars: new Array(18).fill(0),
  averageMm: null,
  passed: false,
  banner: "idle",
  hint: "",
  rounds: 0,
  mount: { rotationDeg: 0, axialMm: 0, tiltDeg: 0 },
  captureFrames: 12,
  validationError: null,
  error: null,
});

export class CalibrationController {
  readonly state: CalibrationViewState = initialState();
  readonly reports: CalibrationReportMsg[] = [];
  private listeners: Array<(s: CalibrationViewState) => void> = [];

  constructor(private transport: Transport) {
    transport.onMessage((msg) => this.handleMessage(msg));
    transport.onClose(() => {
      this.state.connected = false;
      this.emit();
    });
  }

  onChange(listener: (s: CalibrationViewState) => void): void {
    this.listeners.push(listener);
  }

  private emit(): void {
    for (const l of this.listeners) l(this.state);
  }

  setCaptureFrames(n: number): void {
    this.state.captureFrames = n;
    this.state.validationError =
      n >= MIN_CAPTURE_FRAMES ? null : `at least ${MIN_CAPTURE_FRAMES} frames per pose are required`;
    this.emit();
  }

  adjust(rotationDeg: number, axialMm: number, tiltDeg = 0): void {
    this.state.mount.rotationDeg += rotationDeg;
    this.state.mount.axialMm += axialMm;
    this.state.mount.tiltDeg += tiltDeg;
    this.transport.send(adjustCmd(rotationDeg, axialMm, tiltDeg));
    this.emit();
  }

  capture(): boolean {
    if (this.state.captureFrames < MIN_CAPTURE_FRAMES) {
      this.state.validationError = `at least ${MIN_CAPTURE_FRAMES} frames per pose are required`;
      this.emit();
      return false;
    }
    this.state.validationError = null;
    this.transport.send(captureCmd(this.state.captureFrames));
    this.emit();
    return true;
  }

  handleMessage(msg: ServerMessage): void {
    switch (msg.type) {
      case "calibration_report": {
        const report = msg as CalibrationReportMsg;
        this.reports.push(report);
        const offsets = report.report.offsets;
        const poses = Object.keys(offsets);
        this.state.poses = poses;
        this.state.bars = poses.flatMap((p) => offsets[p]);
        this.state.averageMm = report.report.average_offset_mm;
        this.state.passed = report.report.pass;
        this.state.banner = report.report.pass ? "pass" : "adjusting";
        this.state.hint = report.hint;
        this.state.rounds = report.round;
        this.state.mount = {
          rotationDeg: report.mount.rotation_deg,
          axialMm: report.mount.axial_mm,
          tiltDeg: report.mount.tilt_deg,
        };
        break;
      }
      case "session_control": {
        const action = (msg as ControlMsg).action;
        if (action === "busy" || action === "error") {
          this.state.error = String(
            (msg as ControlMsg & { reason?: string; error?: string }).reason ??
              (msg as ControlMsg & { error?: string }).error ??
              action,
          );
        }
        break;
      }
      case "frame":
      case "event":
      case "stimulus":
      case "feedback":
        break; // not part of the calibration view; explicitly ignored
    }
    this.emit();
  }
}

// The scripted remount strategy mirrored from the recognizer-side tooling:
// candidate (rotation, axial) corrections tried in order after the as-worn
// check, sized to cover a "medium" remount displacement.
export const REMOUNT_SWEEP_OFFSETS: ReadonlyArray<readonly [number, number]> = [
  [-0.15, -0.4],
  [-0.15, 1.7],
  [2.55, -0.4],
  [-3.8, -0.4],
  [-0.15, -2.55],
  [2.55, 1.7],
  [-3.8, 1.7],
  [2.55, -2.55],
  [-3.8, -2.55],
];
