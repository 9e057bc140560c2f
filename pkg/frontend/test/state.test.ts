import { beforeEach, describe, expect, it } from "vitest";

import { Frame } from "../src/protocol.js";
import { SessionClient } from "../src/state.js";

function helloAck(order: [string, string] = ["IDM", "nIDM"]): Frame {
  return {
    type: "hello_ack",
    session_id: "p01-1",
    revision: 0,
    body: {
      session_id: "p01-1",
      version: "v1",
      participant_id: "p01",
      seed: 1,
      condition_order: order,
      phase: "Tutorial",
      edit_step: 0.05,
      grid: { bays_x: 2, bays_z: 1, module_size: 2 },
      bounds: {
        depth_min: 0.06, depth_max: 0.4, width_min: 0.06, width_max: 0.3,
        lam_min: 1, lam_max: 10, offset_max: 0.5,
      },
      graph: {
        nodes: [[0, 0, 0, 0], [1, 2, 0, 0], [2, 4, 0, 0], [3, 0, 0, 2], [4, 2, 0, 2], [5, 4, 0, 2]],
        members: [[0, 0, 1], [1, 1, 2], [2, 3, 4], [3, 4, 5], [4, 0, 3], [5, 1, 4], [6, 2, 5]],
        supports: [0, 1, 2],
        key_points: [3, 4, 5],
      },
      offsets: [],
    },
  };
}

function phaseAck(phase: string, condition: string | null): Frame {
  return { type: "phase_ack", session_id: "p01-1", revision: 0, body: { phase, condition } };
}

function feedback(revision: number, stage: string, labels = ["Improved", "Neutral", "Worsened"]): Frame {
  return {
    type: "feedback",
    session_id: "p01-1",
    revision,
    body: { enc1: labels[0], enc2: labels[1], enc3: labels[2], stage },
  };
}

describe("SessionClient", () => {
  let sent: Frame[];
  let client: SessionClient;

  beforeEach(() => {
    sent = [];
    client = new SessionClient((f) => sent.push(f));
    client.onFrame(helloAck());
  });

  it("applies the hello ack", () => {
    expect(client.connected).toBe(true);
    expect(client.sessionId).toBe("p01-1");
    expect(client.editStep).toBe(0.05);
    expect(client.graph?.nodes.length).toBe(6);
  });

  describe("editing", () => {
    it("scroll with no selection sends nothing", () => {
      expect(client.editSelected(1)).toBeNull();
      expect(sent).toHaveLength(0);
    });

    it("one gesture emits one edit request with the step delta", () => {
      client.selectNode(4);
      const frame = client.editSelected(2);
      expect(frame?.body).toEqual({ node_id: 4, delta: 0.1 });
      expect(sent).toHaveLength(1);
      expect(client.offsets.get(4)).toBeCloseTo(0.1, 12);
    });

    it("support nodes cannot be selected", () => {
      client.selectNode(0);
      expect(client.selectedNode).toBeNull();
    });

    it("unknown nodes cannot be selected", () => {
      client.selectNode(99);
      expect(client.selectedNode).toBeNull();
    });

    it("local offsets mirror the server clamp", () => {
      client.selectNode(4);
      client.editSelected(20); // 1.0 m, beyond offset_max
      expect(client.offsets.get(4)).toBe(0.5);
    });

    it("editing is blocked outside design phases", () => {
      client.onFrame(phaseAck("Survey", null));
      client.selectNode(4);
      expect(client.editSelected(1)).toBeNull();
    });
  });

  describe("badges", () => {
    it("visible in the informed condition, fast then final in place", () => {
      client.onFrame(phaseAck("Task1", "IDM"));
      client.onFrame(feedback(5, "Fast", ["Neutral", "Neutral", "Neutral"]));
      expect(client.badgesVisible).toBe(true);
      expect(client.badges?.stage).toBe("Fast");
      client.onFrame(feedback(5, "Final", ["Improved", "Neutral", "Worsened"]));
      expect(client.badges).toMatchObject({ stage: "Final", revision: 5, enc1: "Improved" });
    });

    it("stale finals are ignored", () => {
      client.onFrame(phaseAck("Task1", "IDM"));
      client.onFrame(feedback(6, "Fast"));
      client.onFrame(feedback(5, "Final", ["Worsened", "Worsened", "Worsened"]));
      expect(client.badges?.revision).toBe(6);
      expect(client.badges?.stage).toBe("Fast");
    });

    it("hidden entirely without feedback access", () => {
      client.onFrame(phaseAck("Task1", "nIDM"));
      client.onFrame(feedback(3, "Final"));
      expect(client.badges).toBeNull();
      expect(client.badgesVisible).toBe(false);
    });

    it("cleared on phase change", () => {
      client.onFrame(phaseAck("Task1", "IDM"));
      client.onFrame(feedback(2, "Final"));
      client.onFrame(phaseAck("Task2", "nIDM"));
      expect(client.badges).toBeNull();
    });
  });

  describe("snap notices", () => {
    it("arrive as passive toasts and re-clamp the named offset", () => {
      client.onFrame(phaseAck("Task1", "IDM"));
      client.selectNode(4);
      client.editSelected(1);
      client.offsets.set(4, 0.9); // pretend the local mirror ran ahead
      client.onFrame({
        type: "snap_notice", session_id: "p01-1", revision: 2,
        body: { changed: ["node_offsets[4]"] },
      });
      expect(client.toasts.at(-1)?.kind).toBe("snap");
      expect(client.offsets.get(4)).toBe(0.5);
    });
  });

  describe("tutorial gating", () => {
    it("complete only after navigate + select + edit", () => {
      expect(client.tutorialComplete).toBe(false);
      client.noteNavigation();
      client.selectNode(3);
      expect(client.tutorialComplete).toBe(false);
      client.editSelected(1);
      expect(client.tutorialComplete).toBe(true);
    });
  });

  describe("survey", () => {
    beforeEach(() => {
      client.onFrame(phaseAck("Survey", null));
    });

    it("rejects missing items", () => {
      client.setSurveyItem(0, 4);
      const result = client.submitSurvey();
      expect(result.ok).toBe(false);
      expect(result.error).toContain("2");
      expect(sent.filter((f) => f.type === "survey_response")).toHaveLength(0);
    });

    it("submits when complete", () => {
      for (let i = 0; i < 10; i += 1) client.setSurveyItem(i, 3);
      expect(client.submitSurvey().ok).toBe(true);
      const frames = sent.filter((f) => f.type === "survey_response");
      expect(frames).toHaveLength(1);
      expect(frames[0].body.items).toEqual(new Array(10).fill(3));
    });
  });

  describe("replay determinism", () => {
    it("two clients fed the same inbound sequence agree exactly", () => {
      const script: Frame[] = [
        helloAck(),
        phaseAck("Task1", "IDM"),
        feedback(2, "Fast", ["Neutral", "Neutral", "Neutral"]),
        feedback(2, "Final", ["Improved", "Improved", "Neutral"]),
        { type: "snap_notice", session_id: "p01-1", revision: 3,
          body: { changed: ["node_offsets[4]"] } },
        feedback(3, "Final", ["Worsened", "Neutral", "Neutral"]),
        phaseAck("Task2", "nIDM"),
        { type: "error", session_id: "p01-1", revision: 0,
          body: { code: "bad_phase", detail: "nope" } },
        phaseAck("Survey", null),
      ];
      const a = new SessionClient(() => {});
      const b = new SessionClient(() => {});
      for (const f of script) a.onFrame(f);
      for (const f of script) b.onFrame(f);
      expect(a.snapshot()).toBe(b.snapshot());
    });
  });
});
