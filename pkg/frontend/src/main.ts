// Entry point: connect to the bridge, pick the view for the service mode.

import { CalibrationController } from "./calibration.js";
import { SessionController } from "./session.js";
import { WebSocketTransport } from "./transport.js";
import { renderCalibration, renderHandBoard, renderSession } from "./ui.js";

function bridgeUrl(): string {
  const params = new URLSearchParams(window.location.search);
  return params.get("bridge") ?? "ws://127.0.0.1:47310";
}

function main(): void {
  const sessionRoot = document.getElementById("session")!;
  const calibrationRoot = document.getElementById("calibration")!;
  const transport = new WebSocketTransport(bridgeUrl());

  const session = new SessionController(transport);
  const calibration = new CalibrationController(transport);

  renderHandBoard(sessionRoot.querySelector<HTMLElement>(".board")!, session);
  renderSession(sessionRoot, session);
  renderCalibration(calibrationRoot, calibration);

  // The service announces its mode in the start message; show one view.
  session.onChange(() => {
    if (session.state.running || session.state.done) {
      sessionRoot.hidden = false;
      calibrationRoot.hidden = true;
    }
  });
  calibration.onChange((s) => {
    if (s.rounds > 0 || s.banner !== "idle") {
      calibrationRoot.hidden = false;
      sessionRoot.hidden = true;
    }
  });
}

main();
