// DOM rendering: a clickable 12-region hand schematic for the study runner
// and the bar dashboard for calibration. Pure render-from-state; all inputs
// funnel through the controllers.

import type { CalibrationController } from "./calibration.js";
import { MIN_CAPTURE_FRAMES, THRESHOLD_MM } from "./calibration.js";
import { POSES } from "./protocol.js";
import type { SessionController } from "./session.js";

const FINGERS = ["index", "middle", "ring", "little"] as const;
const ROWS = ["distal", "middle", "proximal"] as const;

export function renderHandBoard(root: HTMLElement, controller: SessionController): void {
  root.innerHTML = "";
  const board = document.createElement("div");
  board.className = "hand-board";
  for (const row of ROWS) {
    for (const finger of FINGERS) {
      const label = `${finger}-${row}`;
      const cell = document.createElement("button");
      cell.className = "phalanx";
      cell.dataset.label = label;
      cell.textContent = label.replace("-", "\n");
      cell.addEventListener("click", () => controller.clickPhalanx(label));
      board.appendChild(cell);
    }
  }
  const release = document.createElement("button");
  release.className = "release";
  release.textContent = "release (no-pose)";
  release.addEventListener("click", () => controller.release());
  root.appendChild(board);
  root.appendChild(release);
}

export function renderSession(root: HTMLElement, controller: SessionController): void {
  const statusEl = root.querySelector<HTMLElement>(".status")!;
  const feedbackEl = root.querySelector<HTMLElement>(".feedback")!;
  const scoreEl = root.querySelector<HTMLElement>(".score")!;
  const countdownEl = root.querySelector<HTMLElement>(".countdown")!;
  const sensorsEl = root.querySelector<HTMLElement>(".sensors")!;

  controller.onChange((s) => {
    statusEl.textContent = !s.connected
      ? "disconnected"
      : s.done
        ? "session complete"
        : s.running
          ? "running"
          : "waiting";
    root.classList.toggle("disconnected", !s.connected);

    for (const cell of root.querySelectorAll<HTMLElement>(".phalanx")) {
      const isStimulus = s.stimulus?.label === cell.dataset.label;
      cell.classList.toggle("stimulus", Boolean(isStimulus));
      cell.classList.toggle("held", s.heldPose === cell.dataset.label);
    }

    feedbackEl.className = `feedback ${s.feedback.color}`;
    feedbackEl.textContent =
      s.feedback.outcome === null
        ? ""
        : s.feedback.outcome === "match"
          ? "correct"
          : s.feedback.outcome === "mismatch"
            ? `recognized: ${s.feedback.predicted}`
            : "no pose detected";

    scoreEl.textContent = `${s.score.correct} / ${s.score.total}`;
    countdownEl.textContent = s.countdownMs === null ? "" : `${(s.countdownMs / 1000).toFixed(1)}s`;
    if (s.lastReadings && s.lastOor) {
      sensorsEl.textContent = s.lastReadings
        .map((v, i) => (s.lastOor![i] ? "---" : v.toFixed(0)))
        .join(" ");
    }
  });
}

export function renderCalibration(root: HTMLElement, controller: CalibrationController): void {
  const barsEl = root.querySelector<HTMLElement>(".bars")!;
  const bannerEl = root.querySelector<HTMLElement>(".banner")!;
  const hintEl = root.querySelector<HTMLElement>(".hint")!;
  const avgEl = root.querySelector<HTMLElement>(".average")!;
  const validationEl = root.querySelector<HTMLElement>(".validation")!;
  const framesInput = root.querySelector<HTMLInputElement>(".frames")!;
  framesInput.value = String(controller.state.captureFrames);
  framesInput.min = String(MIN_CAPTURE_FRAMES);
  framesInput.addEventListener("change", () => controller.setCaptureFrames(Number(framesInput.value)));

  root.querySelector<HTMLButtonElement>(".capture")!.addEventListener("click", () => controller.capture());
  for (const [selector, rot, ax] of [
    [".rot-minus", -1, 0],
    [".rot-plus", 1, 0],
    [".ax-minus", 0, -0.5],
    [".ax-plus", 0, 0.5],
  ] as const) {
    root.querySelector<HTMLButtonElement>(selector)!.addEventListener("click", () => controller.adjust(rot, ax));
  }

  const scale = 20; // px per mm; bars clip at 6 mm for readability
  controller.onChange((s) => {
    barsEl.innerHTML = "";
    s.bars.forEach((v, i) => {
      const bar = document.createElement("div");
      bar.className = "bar";
      bar.style.height = `${Math.min(v, 6) * scale}px`;
      bar.title = `${s.poses[Math.floor(i / 9)]} S${(i % 9) + 1}: ${v.toFixed(2)} mm`;
      barsEl.appendChild(bar);
    });
    const line = document.createElement("div");
    line.className = "threshold";
    line.style.bottom = `${THRESHOLD_MM * scale}px`;
    line.title = `${THRESHOLD_MM} mm threshold`;
    barsEl.appendChild(line);

    bannerEl.className = `banner ${s.banner}`;
    bannerEl.textContent =
      s.banner === "pass" ? "calibrated — ring is back in place" : s.banner === "adjusting" ? "adjust and re-capture" : "capture to begin";
    hintEl.textContent = s.hint;
    avgEl.textContent = s.averageMm === null ? "" : `average offset ${s.averageMm.toFixed(2)} mm (round ${s.rounds})`;
    validationEl.textContent = s.validationError ?? "";
    root.classList.toggle("disconnected", !s.connected);
  });
}

export { POSES };
