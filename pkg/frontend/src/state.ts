/**
 * Client session state machine, free of DOM and network concerns.
 *
 * Interactions produce outbound frames through an injected sender;
 * `onFrame` folds inbound frames into the state. Transitions depend only on
 * the frame sequence, so replaying a recorded inbound log reproduces the
 * exact same state.
 *
 * The participant never sees metric values. Feedback arrives as three
 * domain labels and is rendered only in the informed condition; fast-stage
 * badges are provisional and are replaced in place when the final result
 * for the same revision lands. A final frame older than the newest one seen
 * is stale and ignored.
 */

import {
  BoundsInfo,
  Condition,
  FeedbackBody,
  Frame,
  GraphInfo,
  GridInfo,
  HelloAck,
  Label,
  OverlayMode,
  Phase,
  PHASES,
  PROTOCOL_VERSION,
  Stage,
  validateOutbound,
} from "./protocol.js";

export interface Badges {
  enc1: Label;
  enc2: Label;
  enc3: Label;
  stage: Stage;
  revision: number;
}

export interface Toast {
  kind: "snap" | "error" | "info";
  text: string;
}

export interface OverlayState {
  mode: OverlayMode;
  memberForces: Map<number, number> | null;
  monthly: { heating: number[]; cooling: number[]; solar: number[] } | null;
}

export interface TutorialProgress {
  navigated: boolean;
  selected: boolean;
  edited: boolean;
}

const OFFSET_QUANTUM = 0.001; // mirror of the server's mm lattice

export type Sender = (frame: Frame) => void;

export class SessionClient {
  readonly send: Sender;

  connected = false;
  sessionId: string | null = null;
  participantId = "";
  phase: Phase = "Tutorial";
  conditionOrder: [Condition, Condition] | null = null;
  currentCondition: Condition | null = null;
  editStep = 0.05;
  grid: GridInfo | null = null;
  bounds: BoundsInfo | null = null;
  graph: GraphInfo | null = null;
  offsets = new Map<number, number>();
  selectedNode: number | null = null;
  badges: Badges | null = null;
  overlay: OverlayState | null = null;
  toasts: Toast[] = [];
  surveyItems: (number | null)[] = new Array(10).fill(null);
  surveySubmitted = false;
  tutorial: TutorialProgress = { navigated: false, selected: false, edited: false };
  finalized = false;
  lastError: string | null = null;

  constructor(send: Sender) {
    this.send = send;
  }

  // --- outbound interactions -------------------------------------------

  hello(participantId: string, seed?: number, firstCondition?: Condition): void {
    this.participantId = participantId;
    const body: Record<string, unknown> = {
      participant_id: participantId,
      version: PROTOCOL_VERSION,
      clock: "real",
    };
    if (seed !== undefined) body.seed = seed;
    if (firstCondition !== undefined) body.first_condition = firstCondition;
    this.emit({ type: "hello", session_id: null, revision: 0, body });
  }

  selectNode(id: number | null): void {
    if (id !== null && this.graph && !this.graph.nodes.some((n) => n[0] === id)) {
      return; // a selected node must exist in the current graph
    }
    if (id !== null && this.graph?.supports.includes(id)) {
      this.pushToast({ kind: "info", text: "support nodes are fixed" });
      return;
    }
    this.selectedNode = id;
    if (id !== null) this.tutorial.selected = true;
  }

  get editingAllowed(): boolean {
    return this.phase === "Tutorial" || this.phase === "Task1" || this.phase === "Task2";
  }

  /**
   * One committed push/pull gesture: `ticks` scroll increments (positive =
   * outward). Rapid scrolls are coalesced by the caller into a single call;
   * each call emits exactly one edit_request.
   */
  editSelected(ticks: number): Frame | null {
    if (this.selectedNode === null || !this.editingAllowed || ticks === 0) return null;
    const delta = ticks * this.editStep;
    const frame: Frame = {
      type: "edit_request",
      session_id: this.sessionId,
      revision: 0,
      body: { node_id: this.selectedNode, delta },
    };
    this.emit(frame);
    this.applyLocalEdit(this.selectedNode, delta);
    this.tutorial.edited = true;
    return frame;
  }

  /** Mirror the server's quantize-then-clamp so the render stays truthful. */
  private applyLocalEdit(nodeId: number, delta: number): void {
    const raw = (this.offsets.get(nodeId) ?? 0) + delta;
    let dy = Math.round(raw / OFFSET_QUANTUM) * OFFSET_QUANTUM;
    dy = Math.round(dy * 1e6) / 1e6;
    const cap = this.bounds?.offset_max ?? Infinity;
    dy = Math.max(-cap, Math.min(cap, dy));
    if (dy === 0) {
      this.offsets.delete(nodeId);
    } else {
      this.offsets.set(nodeId, dy);
    }
  }

  noteNavigation(): void {
    this.tutorial.navigated = true;
  }

  requestOverlay(mode: OverlayMode): void {
    this.emit({ type: "overlay_request", session_id: this.sessionId, revision: 0, body: { mode } });
  }

  clearOverlay(): void {
    this.overlay = null;
  }

  advancePhase(): void {
    this.emit({ type: "phase_advance", session_id: this.sessionId, revision: 0, body: {} });
  }

  finalizeDesign(): void {
    if (this.phase !== "Task1" && this.phase !== "Task2") return;
    this.emit({ type: "final_selection", session_id: this.sessionId, revision: 0, body: {} });
    this.finalized = true;
  }

  setSurveyItem(index: number, value: number): void {
    if (index >= 0 && index < 10 && value >= 1 && value <= 5) {
      this.surveyItems[index] = value;
    }
  }

  submitSurvey(): { ok: boolean; error?: string } {
    const missing = this.surveyItems
      .map((v, i) => (v === null ? i + 1 : null))
      .filter((v): v is number => v !== null);
    if (missing.length) {
      return { ok: false, error: `answer item${missing.length > 1 ? "s" : ""} ${missing.join(", ")}` };
    }
    this.emit({
      type: "survey_response",
      session_id: this.sessionId,
      revision: 0,
      body: { items: [...this.surveyItems] },
    });
    this.surveySubmitted = true;
    return { ok: true };
  }

  sendCameraPose(position: [number, number, number], direction: [number, number, number]): void {
    if (!this.sessionId) return;
    this.emit({
      type: "camera_pose",
      session_id: this.sessionId,
      revision: 0,
      body: { position, direction },
    });
  }

  private emit(frame: Frame): void {
    validateOutbound(frame);
    this.send(frame);
  }

  // --- inbound ---------------------------------------------------------

  get tutorialComplete(): boolean {
    return this.tutorial.navigated && this.tutorial.selected && this.tutorial.edited;
  }

  /** Badges exist for the participant only in the informed condition. */
  get badgesVisible(): boolean {
    return (
      this.badges !== null &&
      (this.phase === "Task1" || this.phase === "Task2") &&
      this.currentCondition === "IDM"
    );
  }

  onFrame(frame: Frame): void {
    switch (frame.type) {
      case "hello_ack":
        this.applyHello(frame.body as unknown as HelloAck);
        break;
      case "phase_ack": {
        const phase = frame.body.phase as Phase;
        if (PHASES.includes(phase)) {
          this.phase = phase;
          this.currentCondition = (frame.body.condition as Condition | null) ?? null;
          this.badges = null;
          this.overlay = null;
          this.finalized = false;
          if (phase === "Task1" || phase === "Task2") {
            this.offsets = new Map(); // each task starts from the pristine design
            this.selectedNode = null;
          }
        }
        break;
      }
      case "feedback":
        this.applyFeedback(frame.revision, frame.body as unknown as FeedbackBody);
        break;
      case "snap_notice": {
        const changed = (frame.body.changed as string[]) ?? [];
        // passive, non-blocking notice; also re-clamp the named offsets
        this.pushToast({ kind: "snap", text: `adjusted to nearest valid: ${changed.join(", ")}` });
        this.reclampOffsets(changed);
        break;
      }
      case "overlay_data":
        this.applyOverlay(frame.body);
        break;
      case "error": {
        const code = String(frame.body.code ?? "error");
        const detail = String(frame.body.detail ?? "");
        this.lastError = code;
        this.pushToast({ kind: "error", text: detail ? `${code}: ${detail}` : code });
        break;
      }
      default:
        break; // unknown frames are dropped by the decoder before this point
    }
  }

  private applyHello(ack: HelloAck): void {
    this.connected = true;
    this.sessionId = ack.session_id;
    this.participantId = ack.participant_id;
    this.conditionOrder = ack.condition_order;
    this.phase = ack.phase;
    this.editStep = ack.edit_step;
    this.grid = ack.grid;
    this.bounds = ack.bounds;
    this.graph = ack.graph;
    this.offsets = new Map(ack.offsets);
  }

  private applyFeedback(revision: number, body: FeedbackBody): void {
    if (this.currentCondition !== "IDM") return; // never rendered outside IDM
    if (this.badges && revision < this.badges.revision) {
      return; // stale result for a superseded edit
    }
    // fast badges are provisional; a final for the same revision replaces
    // them in place
    this.badges = {
      enc1: body.enc1,
      enc2: body.enc2,
      enc3: body.enc3,
      stage: body.stage,
      revision,
    };
  }

  private applyOverlay(body: Record<string, unknown>): void {
    const mode = body.mode as OverlayMode;
    const payload = body.payload as Record<string, unknown>;
    if (mode === "mesh") {
      const forces = new Map<number, number>();
      for (const [id, force] of (payload.member_forces as [number, number][]) ?? []) {
        forces.set(id, force);
      }
      this.overlay = { mode, memberForces: forces, monthly: null };
    } else {
      this.overlay = {
        mode,
        memberForces: null,
        monthly: {
          heating: (payload.heating as number[]) ?? [],
          cooling: (payload.cooling as number[]) ?? [],
          solar: (payload.solar as number[]) ?? [],
        },
      };
    }
  }

  private reclampOffsets(changed: string[]): void {
    const cap = this.bounds?.offset_max;
    if (cap === undefined) return;
    for (const name of changed) {
      const match = /^node_offsets\[(\d+)\]$/.exec(name);
      if (!match) continue;
      const nodeId = Number(match[1]);
      const dy = this.offsets.get(nodeId);
      if (dy !== undefined) {
        this.offsets.set(nodeId, Math.max(-cap, Math.min(cap, dy)));
      }
    }
  }

  private pushToast(toast: Toast): void {
    this.toasts.push(toast);
    if (this.toasts.length > 8) this.toasts.shift();
  }

  /** Stable snapshot used by the determinism tests. */
  snapshot(): string {
    return JSON.stringify({
      phase: this.phase,
      condition: this.currentCondition,
      badges: this.badges,
      badgesVisible: this.badgesVisible,
      offsets: [...this.offsets.entries()].sort((a, b) => a[0] - b[0]),
      overlayMode: this.overlay?.mode ?? null,
      toasts: this.toasts,
      finalized: this.finalized,
      surveySubmitted: this.surveySubmitted,
    });
  }
}
