// Scripted calibration loop: from a medium remount perturbation, following
// the sweep strategy reaches the pass banner within 10 capture rounds.

import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { CalibrationController, REMOUNT_SWEEP_OFFSETS, THRESHOLD_MM } from "../src/calibration.js";
import { startService, waitFor, type LiveService, TcpTransport } from "./helpers.js";

let service: LiveService;

beforeAll(async () => {
  service = await startService(["--mode", "calibration", "--perturb", "medium", "--seed", "11"]);
}, 60000);

afterAll(() => {
  service?.stop();
});

describe("calibration dashboard against the live service", () => {
  it("reaches the pass banner from a medium perturbation within 10 rounds", async () => {
    const transport = await TcpTransport.connect(service.port);
    const controller = new CalibrationController(transport);

    // Scripted user: check as worn, then walk the candidate corrections
    // (absolute offsets from the starting position), re-capturing each time
    // until the banner turns green.
    controller.capture();
    let applied: readonly [number, number] = [0, 0];
    let planIndex = 0;
    let rounds = 0;

    while (rounds < 10) {
      await waitFor(() => controller.state.rounds > rounds, 60000, `report ${rounds + 1}`);
      rounds = controller.state.rounds;
      if (controller.state.passed) break;
      if (planIndex >= REMOUNT_SWEEP_OFFSETS.length) break;
      const target = REMOUNT_SWEEP_OFFSETS[planIndex++];
      controller.adjust(target[0] - applied[0], target[1] - applied[1]);
      applied = target;
      controller.capture();
    }

    expect(controller.state.passed).toBe(true);
    expect(controller.state.banner).toBe("pass");
    expect(controller.state.rounds).toBeLessThanOrEqual(10);
    expect(controller.state.averageMm).not.toBeNull();
    expect(controller.state.averageMm!).toBeLessThanOrEqual(THRESHOLD_MM + 1e-9);

    // The bars mirror the latest report exactly: 2 poses x 9 sensors.
    expect(controller.state.bars.length).toBe(18);
    const last = controller.reports[controller.reports.length - 1];
    const flat = Object.keys(last.report.offsets).flatMap((p) => last.report.offsets[p]);
    expect(controller.state.bars).toEqual(flat);

    transport.close();
  }, 180000);

  it("validates the capture frame count client-side", async () => {
    const transport = await TcpTransport.connect(service.port);
    const controller = new CalibrationController(transport);
    controller.setCaptureFrames(5);
    expect(controller.capture()).toBe(false);
    expect(controller.state.validationError).toMatch(/at least 10/);
    controller.setCaptureFrames(12);
    expect(controller.state.validationError).toBeNull();
    transport.close();
  }, 60000);
});
