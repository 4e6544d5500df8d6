// Scripted full testing session against the live service: correct clicks turn
// green, a wrong click turns blue naming the prediction, silence times out.

import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { SessionController } from "../src/session.js";
import { startService, waitFor, type LiveService, TcpTransport } from "./helpers.js";

let service: LiveService;

beforeAll(async () => {
  // 12 prompts, 5 ms per logical frame; the service self-trains at startup.
  service = await startService([
    "--mode", "study", "--prompts", "12", "--frame-ms", "5",
    "--seed", "7", "--noise-sigma", "0.5", "--dropout", "0.0",
  ]);
}, 180000);

afterAll(() => {
  service?.stop();
});

describe("study runner against the live service", () => {
  it("runs a 12-prompt session with correct green/blue feedback", async () => {
    const transport = await TcpTransport.connect(service.port);
    const controller = new SessionController(transport);

    const wrongPromptId = 4; // scripted incorrect click
    const silentPromptId = 9; // scripted no-click prompt
    const plannedClicks: Array<{ prompt: number; clicked: string | null }> = [];
    const feedback: Array<{ prompt: number; outcome: string; predicted: string | null; color: string }> = [];
    let lastFeedbackCount = 0;

    controller.onChange((s) => {
      const stim = s.stimulus;
      if (stim && !plannedClicks.some((p) => p.prompt === stim.promptId)) {
        if (stim.promptId === silentPromptId) {
          plannedClicks.push({ prompt: stim.promptId, clicked: null });
        } else if (stim.promptId === wrongPromptId) {
          const wrong = stim.label === "ring-middle" ? "index-distal" : "ring-middle";
          plannedClicks.push({ prompt: stim.promptId, clicked: wrong });
          controller.clickPhalanx(wrong);
        } else {
          plannedClicks.push({ prompt: stim.promptId, clicked: stim.label });
          controller.clickPhalanx(stim.label);
        }
      }
      if (s.score.total > lastFeedbackCount) {
        lastFeedbackCount = s.score.total;
        feedback.push({
          prompt: stim ? stim.promptId : -1,
          outcome: s.feedback.outcome!,
          predicted: s.feedback.predicted,
          color: s.feedback.color,
        });
        controller.release();
      }
    });

    await waitFor(() => controller.state.done, 240000, "session end");
    transport.close();

    expect(feedback.length).toBe(12);
    for (const fb of feedback) {
      if (fb.prompt === silentPromptId) {
        expect(fb.outcome).toBe("no-emission");
        expect(fb.color).toBe("blue");
      } else if (fb.prompt === wrongPromptId) {
        expect(fb.outcome).toBe("mismatch");
        expect(fb.color).toBe("blue");
        expect(fb.predicted).not.toBeNull();
      } else {
        expect(fb.outcome).toBe("match");
        expect(fb.color).toBe("green");
      }
    }
    // 10 correct clicks -> 10 green
    expect(controller.state.score.correct).toBe(10);
    expect(controller.state.score.total).toBe(12);

    // The UI never computes recognition locally: every label it showed came
    // from a server message.
    const shownLabels = feedback.filter((f) => f.predicted !== null).map((f) => f.predicted);
    const serverLabels = new Set(
      controller.log
        .filter((e) => e.dir === "in")
        .map((e) => e.msg as { type?: string; predicted?: string | null; label?: string })
        .filter((m) => m.type === "feedback" || m.type === "event")
        .flatMap((m) => [m.predicted, m.label])
        .filter((v): v is string => typeof v === "string"),
    );
    for (const label of shownLabels) {
      expect(serverLabels.has(label!)).toBe(true);
    }
  }, 300000);

  it("refuses a second concurrent session with a busy notice", async () => {
    const first = await TcpTransport.connect(service.port);
    const firstController = new SessionController(first);
    await waitFor(() => firstController.state.running, 30000, "first session start");

    const second = await TcpTransport.connect(service.port);
    const secondController = new SessionController(second);
    await waitFor(() => secondController.state.error !== null, 30000, "busy notice");
    expect(secondController.state.error).toMatch(/busy|another session/);
    second.close();
    first.close();
  }, 120000);
});
