/**
 * Orbit camera and perspective projection for the 3D-lite viewer.
 *
 * World frame: the facade lattice lies in the x-z plane, x across, z up;
 * +y points away from the building (outside). The camera orbits a target
 * point on a sphere; azimuth 0 puts it outside looking back at the facade.
 */

export type Vec3 = [number, number, number];

export interface OrbitState {
  target: Vec3;
  radius: number;
  azimuth: number; // radians around the z axis, 0 = on the +y side
  elevation: number; // radians above the horizontal plane
}

export interface Viewport {
  width: number;
  height: number;
}

export interface Projected {
  x: number;
  y: number;
  depth: number;
}

const MIN_RADIUS = 1.0;
const MAX_RADIUS = 60.0;
const MAX_ELEVATION = Math.PI / 2 - 0.05;
const NEAR_PLANE = 0.05;

export function defaultOrbit(facadeWidth: number, facadeHeight: number): OrbitState {
  return {
    target: [facadeWidth / 2, 0, facadeHeight / 2],
    radius: Math.max(facadeWidth, facadeHeight) * 1.6 + 2,
    azimuth: 0.25,
    elevation: 0.15,
  };
}

export function orbitBy(orbit: OrbitState, dAzimuth: number, dElevation: number): OrbitState {
  return {
    ...orbit,
    azimuth: orbit.azimuth + dAzimuth,
    elevation: Math.max(-MAX_ELEVATION, Math.min(MAX_ELEVATION, orbit.elevation + dElevation)),
  };
}

export function zoomBy(orbit: OrbitState, factor: number): OrbitState {
  return {
    ...orbit,
    radius: Math.max(MIN_RADIUS, Math.min(MAX_RADIUS, orbit.radius * factor)),
  };
}

export function cameraPosition(orbit: OrbitState): Vec3 {
  const horizontal = Math.cos(orbit.elevation) * orbit.radius;
  return [
    orbit.target[0] + horizontal * Math.sin(orbit.azimuth),
    orbit.target[1] + horizontal * Math.cos(orbit.azimuth),
    orbit.target[2] + orbit.radius * Math.sin(orbit.elevation),
  ];
}

function sub(a: Vec3, b: Vec3): Vec3 {
  return [a[0] - b[0], a[1] - b[1], a[2] - b[2]];
}

function cross(a: Vec3, b: Vec3): Vec3 {
  return [
    a[1] * b[2] - a[2] * b[1],
    a[2] * b[0] - a[0] * b[2],
    a[0] * b[1] - a[1] * b[0],
  ];
}

function dot(a: Vec3, b: Vec3): number {
  return a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
}

export function normalize(v: Vec3): Vec3 {
  const n = Math.hypot(v[0], v[1], v[2]);
  return n > 0 ? [v[0] / n, v[1] / n, v[2] / n] : [0, 0, 0];
}

/** Unit vector from the camera toward the orbit target. */
export function viewDirection(orbit: OrbitState): Vec3 {
  return normalize(sub(orbit.target, cameraPosition(orbit)));
}

interface Basis {
  position: Vec3;
  forward: Vec3;
  right: Vec3;
  up: Vec3;
}

function cameraBasis(orbit: OrbitState): Basis {
  const position = cameraPosition(orbit);
  const forward = viewDirection(orbit);
  const right = normalize(cross(forward, [0, 0, 1]));
  const up = cross(right, forward);
  return { position, forward, right, up };
}

/** Perspective projection; null when the point sits behind the near plane. */
export function projectPoint(point: Vec3, orbit: OrbitState, viewport: Viewport): Projected | null {
  const basis = cameraBasis(orbit);
  const v = sub(point, basis.position);
  const depth = dot(v, basis.forward);
  if (depth <= NEAR_PLANE) return null;
  const focal = viewport.height * 1.2;
  return {
    x: viewport.width / 2 + (focal * dot(v, basis.right)) / depth,
    y: viewport.height / 2 - (focal * dot(v, basis.up)) / depth,
    depth,
  };
}

/** Nearest projected node within pickRadius pixels of the pointer. */
export function pickNode(
  nodes: Iterable<{ id: number; position: Vec3 }>,
  orbit: OrbitState,
  viewport: Viewport,
  pointer: { x: number; y: number },
  pickRadius = 14,
): number | null {
  let best: number | null = null;
  let bestDist = pickRadius;
  for (const node of nodes) {
    const projected = projectPoint(node.position, orbit, viewport);
    if (!projected) continue;
    const dist = Math.hypot(projected.x - pointer.x, projected.y - pointer.y);
    if (dist <= bestDist) {
      bestDist = dist;
      best = node.id;
    }
  }
  return best;
}
