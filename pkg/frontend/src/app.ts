/**
 * Browser entry point: screens, canvas interaction, pose streaming.
 *
 * Flow: connect form -> tutorial (navigate, select, edit) -> Task1 -> Task2
 * -> questionnaire -> done. A "finalize design" action emits
 * final_selection before leaving a task. On disconnect a reconnect screen
 * keeps the session id visible.
 */

import { defaultOrbit, orbitBy, OrbitState, pickNode, viewDirection, cameraPosition, zoomBy } from "./camera.js";
import { Connection } from "./net.js";
import { Frame } from "./protocol.js";
import { drawEnergyOverlay, drawScene, nodePosition } from "./renderer.js";
import { SessionClient } from "./state.js";

const POSE_INTERVAL_MS = 250; // <= 5 Hz outbound pose stream
const WHEEL_COALESCE_MS = 120;

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

class App {
  private client: SessionClient;
  private connection: Connection;
  private orbit: OrbitState = defaultOrbit(6, 4);
  private canvas!: HTMLCanvasElement;
  private energyCanvas!: HTMLCanvasElement;
  private dragging = false;
  private dragLast: [number, number] = [0, 0];
  private wheelTicks = 0;
  private wheelTimer: ReturnType<typeof setTimeout> | null = null;
  private poseDirty = true;
  private lastShownToast = 0;

  constructor() {
    const url = `ws://${location.host}/ws`;
    this.connection = new Connection(
      url,
      (frame) => this.onFrame(frame),
      (up) => this.onStatus(up),
    );
    this.client = new SessionClient((frame) => this.connection.send(frame));
  }

  start(): void {
    this.canvas = el<HTMLCanvasElement>("scene");
    this.energyCanvas = el<HTMLCanvasElement>("energy-overlay");
    this.bindConnectForm();
    this.bindCanvas();
    this.bindPanel();
    this.buildSurveyForm();
    this.connection.open();
    setInterval(() => this.streamPose(), POSE_INTERVAL_MS);
    const draw = () => {
      this.render();
      requestAnimationFrame(draw);
    };
    requestAnimationFrame(draw);
  }

  // --- wiring -------------------------------------------------------------

  private bindConnectForm(): void {
    el<HTMLFormElement>("connect-form").addEventListener("submit", (event) => {
      event.preventDefault();
      const pid = el<HTMLInputElement>("participant-id").value.trim() || "guest";
      const seedRaw = el<HTMLInputElement>("seed").value.trim();
      this.client.hello(pid, seedRaw ? Number(seedRaw) : undefined);
    });
    el<HTMLButtonElement>("reconnect-new").addEventListener("click", () => {
      location.reload();
    });
  }

  private bindCanvas(): void {
    const canvas = this.canvas;
    canvas.addEventListener("mousedown", (event) => {
      this.dragging = true;
      this.dragLast = [event.offsetX, event.offsetY];
    });
    window.addEventListener("mouseup", () => {
      this.dragging = false;
    });
    canvas.addEventListener("mousemove", (event) => {
      if (!this.dragging) return;
      const dx = event.offsetX - this.dragLast[0];
      const dy = event.offsetY - this.dragLast[1];
      this.dragLast = [event.offsetX, event.offsetY];
      this.orbit = orbitBy(this.orbit, -dx * 0.008, dy * 0.006);
      this.client.noteNavigation();
      this.poseDirty = true;
    });
    canvas.addEventListener("click", (event) => {
      if (!this.client.graph) return;
      const nodes = this.client.graph.nodes.map((n) => ({
        id: n[0],
        position: nodePosition(this.client, n[0]),
      }));
      const hit = pickNode(nodes, this.orbit, this.viewport(), {
        x: event.offsetX,
        y: event.offsetY,
      });
      this.client.selectNode(hit);
    });
    canvas.addEventListener(
      "wheel",
      (event) => {
        event.preventDefault();
        if (event.shiftKey || this.client.selectedNode === null) {
          this.orbit = zoomBy(this.orbit, event.deltaY > 0 ? 1.08 : 0.93);
          this.client.noteNavigation();
          this.poseDirty = true;
          return;
        }
        // rapid scrolls coalesce into one discrete edit per quiet window
        this.wheelTicks += event.deltaY < 0 ? 1 : -1;
        if (this.wheelTimer) clearTimeout(this.wheelTimer);
        this.wheelTimer = setTimeout(() => {
          this.client.editSelected(this.wheelTicks);
          this.wheelTicks = 0;
          this.wheelTimer = null;
        }, WHEEL_COALESCE_MS);
      },
      { passive: false },
    );
    window.addEventListener("keydown", (event) => {
      if (event.key === "ArrowUp" || event.key === "+") this.client.editSelected(1);
      if (event.key === "ArrowDown" || event.key === "-") this.client.editSelected(-1);
    });
  }

  private bindPanel(): void {
    el<HTMLButtonElement>("btn-advance").addEventListener("click", () => this.client.advancePhase());
    el<HTMLButtonElement>("btn-finalize").addEventListener("click", () => this.client.finalizeDesign());
    el<HTMLButtonElement>("btn-overlay-mesh").addEventListener("click", () =>
      this.client.requestOverlay("mesh"));
    el<HTMLButtonElement>("btn-overlay-energy").addEventListener("click", () =>
      this.client.requestOverlay("energy"));
    el<HTMLButtonElement>("btn-overlay-off").addEventListener("click", () =>
      this.client.clearOverlay());
    el<HTMLFormElement>("survey-form").addEventListener("submit", (event) => {
      event.preventDefault();
      const result = this.client.submitSurvey();
      el<HTMLDivElement>("survey-error").textContent = result.ok ? "" : result.error ?? "";
      if (result.ok) this.client.advancePhase();
    });
  }

  private buildSurveyForm(): void {
    const STATEMENTS = [
      "I think that I would like to use this system frequently.",
      "I found the system unnecessarily complex.",
      "I thought the system was easy to use.",
      "I think that I would need the support of a technical person to be able to use this system.",
      "I found the various functions in this system were well integrated.",
      "I thought there was too much inconsistency in this system.",
      "I would imagine that most people would learn to use this system very quickly.",
      "I found the system very cumbersome to use.",
      "I felt very confident using the system.",
      "I needed to learn a lot of things before I could get going with this system.",
    ];
    const host = el<HTMLDivElement>("survey-items");
    STATEMENTS.forEach((statement, index) => {
      const row = document.createElement("fieldset");
      const legend = document.createElement("legend");
      legend.textContent = `${index + 1}. ${statement}`;
      row.appendChild(legend);
      for (let score = 1; score <= 5; score += 1) {
        const label = document.createElement("label");
        const input = document.createElement("input");
        input.type = "radio";
        input.name = `q${index + 1}`;
        input.value = String(score);
        input.addEventListener("change", () => this.client.setSurveyItem(index, score));
        label.appendChild(input);
        label.appendChild(document.createTextNode(String(score)));
        row.appendChild(label);
      }
      host.appendChild(row);
    });
  }

  // --- frame/status handling ------------------------------------------------

  private onFrame(frame: Frame): void {
    this.client.onFrame(frame);
    if (frame.type === "hello_ack" && this.client.grid) {
      const { bays_x, bays_z, module_size } = this.client.grid;
      this.orbit = defaultOrbit(bays_x * module_size, bays_z * module_size);
      this.poseDirty = true;
    }
  }

  private onStatus(up: boolean): void {
    if (!up && this.client.connected && this.client.phase !== "Done") {
      el<HTMLSpanElement>("lost-session-id").textContent = this.connection.lastSessionId ?? "?";
      this.show("screen-reconnect");
    }
  }

  private streamPose(): void {
    if (!this.client.connected || !this.poseDirty || this.client.phase === "Done") return;
    this.poseDirty = false;
    const position = cameraPosition(this.orbit);
    const direction = viewDirection(this.orbit);
    this.client.sendCameraPose(position, direction);
  }

  // --- rendering ----------------------------------------------------------

  private viewport() {
    return { width: this.canvas.width, height: this.canvas.height };
  }

  private show(screenId: string): void {
    for (const screen of document.querySelectorAll<HTMLElement>(".screen")) {
      screen.classList.toggle("active", screen.id === screenId);
    }
  }

  private render(): void {
    const client = this.client;
    if (!client.connected) {
      if (!document.getElementById("screen-reconnect")!.classList.contains("active")) {
        this.show("screen-connect");
      }
      return;
    }
    if (client.phase === "Survey") {
      this.show("screen-survey");
      return;
    }
    if (client.phase === "Done") {
      this.show("screen-done");
      return;
    }
    this.show("screen-main");

    drawScene(this.canvas, client, this.orbit);
    this.energyCanvas.style.display = client.overlay?.mode === "energy" ? "block" : "none";
    if (client.overlay?.mode === "energy") drawEnergyOverlay(this.energyCanvas, client);

    el<HTMLSpanElement>("phase-label").textContent =
      client.phase + (client.currentCondition ? ` (${client.currentCondition})` : "");
    el<HTMLDivElement>("tutorial-hint").style.display =
      client.phase === "Tutorial" ? "block" : "none";
    el<HTMLButtonElement>("btn-advance").disabled =
      client.phase === "Tutorial" && !client.tutorialComplete;
    el<HTMLDivElement>("overlay-buttons").style.display = client.badgesVisible ? "flex" : "none";

    const badgeBox = el<HTMLDivElement>("badges");
    badgeBox.style.display = client.badgesVisible ? "flex" : "none";
    if (client.badgesVisible && client.badges) {
      const labels = [client.badges.enc1, client.badges.enc2, client.badges.enc3];
      ["structure", "environment", "fabrication"].forEach((domain, i) => {
        const badge = el<HTMLDivElement>(`badge-${domain}`);
        badge.dataset.label = labels[i];
        badge.classList.toggle("provisional", client.badges!.stage === "Fast");
      });
    }

    const toastBox = el<HTMLDivElement>("toasts");
    while (this.lastShownToast < client.toasts.length) {
      const toast = client.toasts[this.lastShownToast];
      this.lastShownToast += 1;
      const div = document.createElement("div");
      div.className = `toast toast-${toast.kind}`;
      div.textContent = toast.text;
      toastBox.appendChild(div);
      setTimeout(() => div.remove(), 4000);
    }
  }
}

new App().start();
