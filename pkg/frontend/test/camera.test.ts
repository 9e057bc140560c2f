import { describe, expect, it } from "vitest";

import {
  cameraPosition,
  defaultOrbit,
  orbitBy,
  pickNode,
  projectPoint,
  viewDirection,
  zoomBy,
} from "../src/camera.js";

const VIEWPORT = { width: 800, height: 600 };

describe("orbit", () => {
  it("default camera sits outside (+y) looking back at the facade", () => {
    const orbit = defaultOrbit(6, 4);
    expect(cameraPosition(orbit)[1]).toBeGreaterThan(0);
    expect(viewDirection(orbit)[1]).toBeLessThan(0);
  });

  it("orbiting keeps the radius, zooming clamps it", () => {
    let orbit = defaultOrbit(6, 4);
    const r0 = orbit.radius;
    orbit = orbitBy(orbit, 1.3, -0.4);
    const p = cameraPosition(orbit);
    const d = Math.hypot(p[0] - orbit.target[0], p[1] - orbit.target[1], p[2] - orbit.target[2]);
    expect(d).toBeCloseTo(r0, 9);
    for (let i = 0; i < 200; i += 1) orbit = zoomBy(orbit, 0.5);
    expect(orbit.radius).toBeGreaterThan(0.5);
  });

  it("view direction is unit length", () => {
    const d = viewDirection(orbitBy(defaultOrbit(6, 4), 0.7, 0.3));
    expect(Math.hypot(...d)).toBeCloseTo(1.0, 12);
  });
});

describe("projection", () => {
  it("the orbit target lands at the viewport center", () => {
    const orbit = defaultOrbit(6, 4);
    const p = projectPoint(orbit.target, orbit, VIEWPORT)!;
    expect(p.x).toBeCloseTo(VIEWPORT.width / 2, 6);
    expect(p.y).toBeCloseTo(VIEWPORT.height / 2, 6);
  });

  it("points behind the camera are culled", () => {
    const orbit = defaultOrbit(6, 4);
    const behind: [number, number, number] = [3, orbit.radius + 50, 2];
    expect(projectPoint(behind, orbit, VIEWPORT)).toBeNull();
  });

  it("x offsets map to horizontal screen offsets", () => {
    const orbit = { ...defaultOrbit(6, 4), azimuth: 0, elevation: 0 };
    const left = projectPoint([0, 0, 2], orbit, VIEWPORT)!;
    const right = projectPoint([6, 0, 2], orbit, VIEWPORT)!;
    expect(right.x).not.toBeCloseTo(left.x, 3);
    expect(right.y).toBeCloseTo(left.y, 6);
  });
});

describe("picking", () => {
  const nodes = [
    { id: 0, position: [0, 0, 0] as [number, number, number] },
    { id: 1, position: [6, 0, 0] as [number, number, number] },
    { id: 2, position: [0, 0, 4] as [number, number, number] },
  ];

  it("returns the node under the pointer", () => {
    const orbit = defaultOrbit(6, 4);
    const p1 = projectPoint(nodes[1].position, orbit, VIEWPORT)!;
    expect(pickNode(nodes, orbit, VIEWPORT, { x: p1.x + 3, y: p1.y - 2 })).toBe(1);
  });

  it("returns null away from any node", () => {
    const orbit = defaultOrbit(6, 4);
    expect(pickNode(nodes, orbit, VIEWPORT, { x: 2, y: 2 })).toBeNull();
  });
});
