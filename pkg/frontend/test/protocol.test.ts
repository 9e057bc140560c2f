import { describe, expect, it } from "vitest";

import { decodeFrame, encodeFrame, Frame, FrameError, validateOutbound } from "../src/protocol.js";

function frame(type: string, body: Record<string, unknown>, sessionId: string | null = "s-1"): Frame {
  return { type, session_id: sessionId, revision: 0, body };
}

describe("outbound validation", () => {
  it("accepts every client frame the app can produce", () => {
    const ok: Frame[] = [
      frame("hello", { participant_id: "p01", version: "v1", clock: "real" }, null),
      frame("edit_request", { node_id: 5, delta: 0.05 }),
      frame("camera_pose", { position: [1, 5, 2], direction: [0, -1, 0] }),
      frame("overlay_request", { mode: "mesh" }),
      frame("phase_advance", {}),
      frame("final_selection", {}),
      frame("survey_response", { items: [3, 3, 3, 3, 3, 3, 3, 3, 3, 3] }),
    ];
    for (const f of ok) expect(() => validateOutbound(f)).not.toThrow();
  });

  it("rejects out-of-range and malformed bodies", () => {
    const bad: Frame[] = [
      frame("hello", { participant_id: "../evil", version: "v1", clock: "real" }, null),
      frame("hello", { participant_id: "p", version: "v0", clock: "real" }, null),
      frame("edit_request", { node_id: -1, delta: 0.05 }),
      frame("edit_request", { node_id: 1, delta: Number.NaN }),
      frame("edit_request", { node_id: 1, delta: 101 }),
      frame("camera_pose", { position: [0, 0, 0], direction: [0, 0, 0] }),
      frame("survey_response", { items: [3, 3, 3] }),
      frame("survey_response", { items: [3, 3, 3, 3, 3, 3, 3, 3, 3, 6] }),
      frame("feedback", { enc1: "Improved", enc2: "Neutral", enc3: "Neutral", stage: "Fast" }),
    ];
    for (const f of bad) expect(() => validateOutbound(f), f.type).toThrow(FrameError);
  });
});

describe("round trip", () => {
  it("encode then decode of a server-shaped frame", () => {
    // the decoder handles server frames; craft one by hand
    const text = JSON.stringify({
      type: "feedback",
      session_id: "s-1",
      revision: 7,
      body: { enc1: "Improved", enc2: "Neutral", enc3: "Worsened", stage: "Final" },
    });
    const decoded = decodeFrame(text);
    expect(decoded.revision).toBe(7);
    expect(decoded.body.stage).toBe("Final");
  });

  it("client frames serialize to single-line JSON", () => {
    const text = encodeFrame(frame("edit_request", { node_id: 2, delta: -0.1 }));
    expect(text).not.toContain("\n");
    expect(JSON.parse(text).body.delta).toBe(-0.1);
  });

  it("decode rejects junk and client-only types", () => {
    expect(() => decodeFrame("{nope")).toThrow(FrameError);
    expect(() => decodeFrame('"a string"')).toThrow(FrameError);
    expect(() => decodeFrame(JSON.stringify({ type: "edit_request", body: {} }))).toThrow(FrameError);
    expect(() => decodeFrame(JSON.stringify({ type: "hello_ack", body: {}, revision: -1 })))
      .toThrow(FrameError);
  });
});
