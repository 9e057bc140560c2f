/**
 * Wire frames for the facade session protocol, client side.
 *
 * One JSON object per WebSocket text message (the same shape travels as one
 * line over raw TCP). Outbound frames are validated before sending so the
 * client can never emit something the server's data shield would reject.
 */

export const PROTOCOL_VERSION = "v1";

export type Condition = "IDM" | "nIDM";
export type Phase = "Tutorial" | "Task1" | "Task2" | "Survey" | "Done";
export type Label = "Improved" | "Neutral" | "Worsened";
export type Stage = "Fast" | "Final";
export type OverlayMode = "mesh" | "energy";

export const PHASES: Phase[] = ["Tutorial", "Task1", "Task2", "Survey", "Done"];

export interface Frame {
  type: string;
  session_id: string | null;
  revision: number;
  body: Record<string, unknown>;
  client_ms?: number;
}

export interface GridInfo {
  bays_x: number;
  bays_z: number;
  module_size: number;
}

export interface BoundsInfo {
  depth_min: number;
  depth_max: number;
  width_min: number;
  width_max: number;
  lam_min: number;
  lam_max: number;
  offset_max: number;
}

export interface GraphInfo {
  nodes: [number, number, number, number][];
  members: [number, number, number][];
  supports: number[];
  key_points: number[];
}

export interface HelloAck {
  session_id: string;
  version: string;
  participant_id: string;
  seed: number;
  condition_order: [Condition, Condition];
  phase: Phase;
  edit_step: number;
  grid: GridInfo;
  bounds: BoundsInfo;
  graph: GraphInfo;
  offsets: [number, number][];
}

export interface FeedbackBody {
  enc1: Label;
  enc2: Label;
  enc3: Label;
  stage: Stage;
}

const CLIENT_TYPES = new Set([
  "hello",
  "edit_request",
  "camera_pose",
  "overlay_request",
  "phase_advance",
  "final_selection",
  "survey_response",
]);

const SERVER_TYPES = new Set([
  "hello_ack",
  "snap_notice",
  "feedback",
  "overlay_data",
  "phase_ack",
  "error",
]);

export class FrameError extends Error {}

function fail(reason: string): never {
  throw new FrameError(reason);
}

function checkFinite(name: string, value: unknown): number {
  if (typeof value !== "number" || !Number.isFinite(value)) {
    fail(`${name} must be a finite number`);
  }
  return value;
}

/** Validate an outbound (client -> server) frame. */
export function validateOutbound(frame: Frame): Frame {
  if (!CLIENT_TYPES.has(frame.type)) fail(`not a client frame type: ${frame.type}`);
  if (!Number.isInteger(frame.revision) || frame.revision < 0) fail("bad revision");
  const body = frame.body;
  switch (frame.type) {
    case "hello": {
      const pid = body.participant_id;
      if (typeof pid !== "string" || !/^[A-Za-z0-9_-]{1,64}$/.test(pid)) {
        fail("participant_id must be 1-64 letters, digits, '_' or '-'");
      }
      if (body.version !== PROTOCOL_VERSION) fail("version mismatch");
      if (body.clock !== "real" && body.clock !== "virtual") fail("bad clock");
      break;
    }
    case "edit_request": {
      const node = body.node_id;
      if (!Number.isInteger(node) || (node as number) < 0) fail("bad node_id");
      const delta = checkFinite("delta", body.delta);
      if (Math.abs(delta) > 100) fail("delta out of range");
      break;
    }
    case "camera_pose": {
      for (const key of ["position", "direction"] as const) {
        const vec = body[key];
        if (!Array.isArray(vec) || vec.length !== 3) fail(`${key} must be [x, y, z]`);
        vec.forEach((c, i) => checkFinite(`${key}[${i}]`, c));
      }
      const dir = body.direction as number[];
      if (dir.every((c) => c === 0)) fail("direction must be non-zero");
      break;
    }
    case "overlay_request":
      if (body.mode !== "mesh" && body.mode !== "energy") fail("bad overlay mode");
      break;
    case "phase_advance":
    case "final_selection":
      if (Object.keys(body).length) fail("body must be empty");
      break;
    case "survey_response": {
      const items = body.items;
      if (!Array.isArray(items) || items.length !== 10) fail("need 10 items");
      for (const item of items) {
        if (!Number.isInteger(item) || item < 1 || item > 5) fail("item out of 1..5");
      }
      break;
    }
  }
  return frame;
}

export function encodeFrame(frame: Frame): string {
  validateOutbound(frame);
  const payload: Record<string, unknown> = {
    type: frame.type,
    session_id: frame.session_id,
    revision: frame.revision,
    body: frame.body,
  };
  if (frame.client_ms !== undefined) payload.client_ms = frame.client_ms;
  return JSON.stringify(payload);
}

/** Parse and structurally check an inbound (server -> client) frame. */
export function decodeFrame(text: string): Frame {
  let raw: unknown;
  try {
    raw = JSON.parse(text);
  } catch (err) {
    fail(`invalid JSON: ${(err as Error).message}`);
  }
  if (typeof raw !== "object" || raw === null || Array.isArray(raw)) {
    fail("frame must be an object");
  }
  const record = raw as Record<string, unknown>;
  if (typeof record.type !== "string" || !SERVER_TYPES.has(record.type)) {
    fail(`unknown server frame type: ${String(record.type)}`);
  }
  if (typeof record.body !== "object" || record.body === null) fail("body must be an object");
  const revision = record.revision ?? 0;
  if (!Number.isInteger(revision) || (revision as number) < 0) fail("bad revision");
  return {
    type: record.type,
    session_id: (record.session_id as string | null) ?? null,
    revision: revision as number,
    body: record.body as Record<string, unknown>,
  };
}
