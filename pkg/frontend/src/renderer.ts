/**
 * Canvas renderer for the facade lattice: members as depth-sorted lines,
 * nodes as discs, with optional member-force coloring and a small bar
 * diagram for the energy overlay. Deliberately numberless: the participant
 * sees geometry and labels, never metric values.
 */

import { OrbitState, Projected, projectPoint, Vec3, Viewport } from "./camera.js";
import { SessionClient } from "./state.js";

const COLOR_MEMBER = "#8a97a8";
const COLOR_SUPPORT = "#2b3440";
const COLOR_NODE = "#3f86d9";
const COLOR_NODE_KEY = "#f2b63c";
const COLOR_SELECTED = "#ef5b5b";
const COLOR_BG = "#10151c";

export function nodePosition(client: SessionClient, id: number): Vec3 {
  const base = client.graph!.nodes.find((n) => n[0] === id)!;
  return [base[1], client.offsets.get(id) ?? base[2], base[3]];
}

function forceColor(force: number, maxAbs: number): string {
  // blue (compression) .. grey .. red (tension), saturation by magnitude
  const t = maxAbs > 0 ? Math.max(-1, Math.min(1, force / maxAbs)) : 0;
  const r = t > 0 ? 90 + 150 * t : 90;
  const b = t < 0 ? 90 - 150 * t : 90;
  return `rgb(${r | 0}, 90, ${b | 0})`;
}

export function drawScene(
  canvas: HTMLCanvasElement,
  client: SessionClient,
  orbit: OrbitState,
): void {
  const ctx = canvas.getContext("2d");
  if (!ctx || !client.graph) return;
  const viewport: Viewport = { width: canvas.width, height: canvas.height };
  ctx.fillStyle = COLOR_BG;
  ctx.fillRect(0, 0, viewport.width, viewport.height);

  const projected = new Map<number, Projected>();
  for (const [id] of client.graph.nodes) {
    const p = projectPoint(nodePosition(client, id), orbit, viewport);
    if (p) projected.set(id, p);
  }

  const forces = client.overlay?.memberForces ?? null;
  let maxForce = 1e-9;
  if (forces) {
    for (const f of forces.values()) maxForce = Math.max(maxForce, Math.abs(f));
  }

  const members = [...client.graph.members].sort((a, b) => {
    const da = (projected.get(a[1])?.depth ?? 0) + (projected.get(a[2])?.depth ?? 0);
    const db = (projected.get(b[1])?.depth ?? 0) + (projected.get(b[2])?.depth ?? 0);
    return db - da; // far first
  });
  for (const [id, a, b] of members) {
    const pa = projected.get(a);
    const pb = projected.get(b);
    if (!pa || !pb) continue;
    ctx.strokeStyle = forces ? forceColor(forces.get(id) ?? 0, maxForce) : COLOR_MEMBER;
    ctx.lineWidth = Math.max(1.2, 8 / ((pa.depth + pb.depth) / 8));
    ctx.beginPath();
    ctx.moveTo(pa.x, pa.y);
    ctx.lineTo(pb.x, pb.y);
    ctx.stroke();
  }

  for (const [id] of client.graph.nodes) {
    const p = projected.get(id);
    if (!p) continue;
    const isSupport = client.graph.supports.includes(id);
    const isKey = client.graph.key_points.includes(id);
    const radius = Math.max(3, 36 / p.depth + 3);
    ctx.beginPath();
    ctx.fillStyle = isSupport ? COLOR_SUPPORT : isKey ? COLOR_NODE_KEY : COLOR_NODE;
    ctx.arc(p.x, p.y, radius, 0, Math.PI * 2);
    ctx.fill();
    if (client.selectedNode === id) {
      ctx.strokeStyle = COLOR_SELECTED;
      ctx.lineWidth = 3;
      ctx.beginPath();
      ctx.arc(p.x, p.y, radius + 4, 0, Math.PI * 2);
      ctx.stroke();
    }
  }
}

/** Relative monthly bars (heating, cooling, solar), no numeric axis. */
export function drawEnergyOverlay(canvas: HTMLCanvasElement, client: SessionClient): void {
  const ctx = canvas.getContext("2d");
  const monthly = client.overlay?.monthly;
  if (!ctx || !monthly) return;
  const { width, height } = canvas;
  ctx.clearRect(0, 0, width, height);
  const series: [number[], string][] = [
    [monthly.heating, "#e2703a"],
    [monthly.cooling, "#3aa0e2"],
    [monthly.solar, "#e2c83a"],
  ];
  const peak = Math.max(...series.flatMap(([s]) => s), 1e-9);
  const bandWidth = width / 12;
  const barWidth = bandWidth / 4;
  for (let month = 0; month < 12; month += 1) {
    series.forEach(([values, color], lane) => {
      const value = values[month] ?? 0;
      const barHeight = (value / peak) * (height - 8);
      ctx.fillStyle = color;
      ctx.fillRect(
        month * bandWidth + lane * barWidth + 2,
        height - barHeight,
        barWidth - 2,
        barHeight,
      );
    });
  }
}
