"""Parametric exoskeleton facade: grid geometry, node edits, validation, snapping.

The facade is a rectangular lattice in the x-z plane (x across the building
face, z up); y is the facade normal, positive pointing away from the
building. Every grid cell carries its four edges plus both diagonals, so the
lattice reads as a diagrid and stays statically redundant. The bottom node
row is anchored to the foundation. The single user-editable degree of
freedom is the out-of-plane offset dy of a non-support node; offsets live on
a 1 mm lattice so that an edit followed by its inverse restores the exact
configuration (and its hash).
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping, NamedTuple

from .errors import InvalidGrid, SupportNodeImmutable, UnknownNode

# Offsets are quantized to 1 mm. Keeps push/pull edits exactly invertible in
# float arithmetic for any mm-multiple delta.
OFFSET_QUANTUM = 0.001


@dataclass(frozen=True)
class GridParams:
    """Facade module grid: bays_x x bays_z cells of edge length module_size (m)."""

    bays_x: int
    bays_z: int
    module_size: float

    @property
    def facade_width(self) -> float:
        return self.bays_x * self.module_size

    @property
    def facade_height(self) -> float:
        return self.bays_z * self.module_size

    @property
    def facade_area(self) -> float:
        return self.facade_width * self.facade_height

    @property
    def nodes_per_row(self) -> int:
        return self.bays_x + 1

    @property
    def node_count(self) -> int:
        return (self.bays_x + 1) * (self.bays_z + 1)

    def node_id(self, row: int, col: int) -> int:
        return row * self.nodes_per_row + col

    def support_ids(self) -> frozenset[int]:
        """Bottom-row nodes are fixed to the foundation."""
        return frozenset(range(self.nodes_per_row))

    def key_point_ids(self) -> frozenset[int]:
        """Key observation points: the top (endpoint) row plus the row
        nearest mid-height."""
        top = {self.node_id(self.bays_z, c) for c in range(self.nodes_per_row)}
        mid_row = (self.bays_z + 1) // 2
        mid = {self.node_id(mid_row, c) for c in range(self.nodes_per_row)}
        return frozenset(top | mid)

    def check(self) -> None:
        if self.bays_x < 1 or self.bays_z < 1:
            raise InvalidGrid(f"bays must be >= 1, got {self.bays_x}x{self.bays_z}")
        if not (math.isfinite(self.module_size) and self.module_size > 0):
            raise InvalidGrid(f"module_size must be positive, got {self.module_size}")


@dataclass(frozen=True)
class SectionParams:
    """Glulam member cross-section: depth x width (m), built from
    `laminations` glued layers."""

    depth: float
    width: float
    laminations: int

    @property
    def area(self) -> float:
        return self.depth * self.width


@dataclass(frozen=True)
class DesignBounds:
    """Constructibility envelope for section and node-offset parameters."""

    depth_min: float = 0.06
    depth_max: float = 0.40
    width_min: float = 0.06
    width_max: float = 0.30
    lam_min: int = 1
    lam_max: int = 10
    offset_max: float = 0.5

    def check(self) -> None:
        if not (0 < self.depth_min <= self.depth_max):
            raise ValueError("bad depth bounds")
        if not (0 < self.width_min <= self.width_max):
            raise ValueError("bad width bounds")
        if not (1 <= self.lam_min <= self.lam_max):
            raise ValueError("bad lamination bounds")
        if self.offset_max < 0:
            raise ValueError("offset_max must be >= 0")


class Violation(NamedTuple):
    field: str
    bound: tuple
    actual: float


@dataclass(frozen=True)
class ValidationReport:
    valid: bool
    violations: tuple[Violation, ...]


@dataclass(frozen=True)
class DesignConfiguration:
    """One design decision: the grid, the shared member section, and the
    out-of-plane node offsets (m), keyed by node id. Nodes without an entry
    sit at dy = 0; zero offsets are never stored."""

    grid: GridParams
    section: SectionParams
    node_offsets: Mapping[int, float] = field(default_factory=dict)

    def offset(self, node_id: int) -> float:
        return self.node_offsets.get(node_id, 0.0)

    def canonical_dict(self) -> dict:
        return {
            "grid": {
                "bays_x": self.grid.bays_x,
                "bays_z": self.grid.bays_z,
                "module_size": self.grid.module_size,
            },
            "section": {
                "depth": self.section.depth,
                "width": self.section.width,
                "laminations": self.section.laminations,
            },
            "node_offsets": {str(k): self.node_offsets[k] for k in sorted(self.node_offsets)},
        }


def config_hash(config: DesignConfiguration) -> str:
    """Stable 16-hex-digit digest of a configuration."""
    blob = json.dumps(config.canonical_dict(), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()[:16]


class Member(NamedTuple):
    id: int
    node_a: int
    node_b: int


class Node(NamedTuple):
    id: int
    x: float
    y: float
    z: float


@dataclass(frozen=True)
class FacadeGraph:
    """Realized lattice geometry: nodes, members, supports, key points."""

    nodes: tuple[Node, ...]
    members: tuple[Member, ...]
    supports: frozenset[int]
    key_points: frozenset[int]

    def position(self, node_id: int) -> tuple[float, float, float]:
        n = self.nodes[node_id]
        return (n.x, n.y, n.z)

    def member_length(self, member: Member) -> float:
        a = self.nodes[member.node_a]
        b = self.nodes[member.node_b]
        return math.dist((a.x, a.y, a.z), (b.x, b.y, b.z))

    def member_lengths(self) -> list[float]:
        return [self.member_length(m) for m in self.members]

    def total_member_length(self) -> float:
        return sum(self.member_lengths())


def generate_facade(grid: GridParams, config: DesignConfiguration) -> FacadeGraph:
    """Build the diagrid lattice for `grid`, applying `config`'s node offsets.

    Node ids are row-major from the bottom-left corner. Members are listed
    horizontals first (row by row), then verticals (row by row), then the two
    diagonals of each cell; ids follow that order.
    """
    grid.check()
    n_per_row = grid.nodes_per_row
    supports = grid.support_ids()
    node_count = grid.node_count

    for nid in config.node_offsets:
        if not (0 <= nid < node_count):
            raise UnknownNode(f"offset references node {nid} outside the grid")
        if nid in supports:
            raise SupportNodeImmutable(f"support node {nid} cannot carry an offset")

    nodes = []
    for row in range(grid.bays_z + 1):
        for col in range(n_per_row):
            nid = grid.node_id(row, col)
            nodes.append(Node(nid, col * grid.module_size, config.offset(nid), row * grid.module_size))

    members: list[Member] = []

    def add(a: int, b: int) -> None:
        members.append(Member(len(members), a, b))

    for row in range(grid.bays_z + 1):
        for col in range(grid.bays_x):
            add(grid.node_id(row, col), grid.node_id(row, col + 1))
    for row in range(grid.bays_z):
        for col in range(n_per_row):
            add(grid.node_id(row, col), grid.node_id(row + 1, col))
    for row in range(grid.bays_z):
        for col in range(grid.bays_x):
            add(grid.node_id(row, col), grid.node_id(row + 1, col + 1))
            add(grid.node_id(row, col + 1), grid.node_id(row + 1, col))

    return FacadeGraph(
        nodes=tuple(nodes),
        members=tuple(members),
        supports=supports,
        key_points=grid.key_point_ids(),
    )


def validate_config(config: DesignConfiguration, bounds: DesignBounds) -> ValidationReport:
    """Check a configuration against the constructibility envelope."""
    violations: list[Violation] = []
    s = config.section

    def in_range(name: str, value: float, lo: float, hi: float) -> None:
        if not (math.isfinite(value) and lo <= value <= hi):
            violations.append(Violation(name, (lo, hi), value))

    in_range("depth", s.depth, bounds.depth_min, bounds.depth_max)
    in_range("width", s.width, bounds.width_min, bounds.width_max)
    in_range("laminations", s.laminations, bounds.lam_min, bounds.lam_max)
    if isinstance(s.laminations, float) and not float(s.laminations).is_integer():
        violations.append(Violation("laminations", ("integer",), s.laminations))

    supports = config.grid.support_ids()
    node_count = config.grid.node_count
    for nid in sorted(config.node_offsets):
        dy = config.node_offsets[nid]
        if not (0 <= nid < node_count):
            violations.append(Violation(f"node_offsets[{nid}]", ("unknown node",), dy))
            continue
        if nid in supports:
            violations.append(Violation(f"node_offsets[{nid}]", ("support node",), dy))
            continue
        in_range(f"node_offsets[{nid}]", dy, -bounds.offset_max, bounds.offset_max)

    return ValidationReport(valid=not violations, violations=tuple(violations))


def _clamp(value: float, lo: float, hi: float) -> float:
    """Clamp to [lo, hi]; non-finite values fall to the lower bound (ties in
    "nearest" break toward the lower value, and NaN has no nearest)."""
    if not math.isfinite(value):
        return hi if value == math.inf else lo
    return min(max(value, lo), hi)


def _round_half_down(value: float) -> int:
    # nearest integer, exact halves toward the lower value
    return math.ceil(value - 0.5)


def _quantize(dy: float) -> float:
    q = round(dy / OFFSET_QUANTUM) * OFFSET_QUANTUM
    return round(q, 6)


def snap_to_valid(
    config: DesignConfiguration, bounds: DesignBounds
) -> tuple[DesignConfiguration, bool]:
    """Replace an invalid configuration by the nearest valid one.

    Nearest is measured in the normalized parameter space (each field scaled
    by its bound range), which for a box of bounds reduces to clamping each
    field independently; laminations round to the nearest integer in range
    with exact halves going down, and non-finite values fall to the nearer
    bound (NaN to the lower one). Offsets on unknown or support nodes are
    dropped. Total and idempotent: the result always validates, and an
    already-valid configuration comes back unchanged (snapped=False).
    """
    changed = False
    s = config.section

    depth = _clamp(s.depth, bounds.depth_min, bounds.depth_max)
    width = _clamp(s.width, bounds.width_min, bounds.width_max)
    changed |= depth != s.depth or width != s.width

    lam = s.laminations
    if not (math.isfinite(lam) and float(lam).is_integer() and bounds.lam_min <= lam <= bounds.lam_max):
        if math.isfinite(lam):
            lam = min(max(_round_half_down(lam), bounds.lam_min), bounds.lam_max)
        else:
            lam = bounds.lam_max if lam == math.inf else bounds.lam_min
        changed = True
    lam = int(lam)

    supports = config.grid.support_ids()
    node_count = config.grid.node_count
    offsets: dict[int, float] = {}
    for nid in sorted(config.node_offsets):
        dy = config.node_offsets[nid]
        if not (0 <= nid < node_count) or nid in supports:
            changed = True
            continue
        dy2 = _clamp(dy, -bounds.offset_max, bounds.offset_max)
        changed |= dy2 != dy
        offsets[nid] = dy2

    if not changed:
        return config, False
    section = SectionParams(depth=depth, width=width, laminations=lam)
    return DesignConfiguration(grid=config.grid, section=section, node_offsets=offsets), True


def apply_node_edit(
    config: DesignConfiguration, node_id: int, delta_dy: float
) -> DesignConfiguration:
    """Push/pull a node along the facade normal by delta_dy (m).

    Returns a new configuration; the input is untouched. The resulting
    offset is quantized to the 1 mm lattice and zero offsets are dropped, so
    an edit followed by its exact inverse restores the original
    configuration bit for bit.
    """
    grid = config.grid
    if not (0 <= node_id < grid.node_count):
        raise UnknownNode(f"node {node_id} is not on the {grid.bays_x}x{grid.bays_z} grid")
    if node_id in grid.support_ids():
        raise SupportNodeImmutable(f"node {node_id} is a support and cannot move")
    if not math.isfinite(delta_dy):
        raise ValueError(f"delta must be finite, got {delta_dy}")

    offsets = dict(config.node_offsets)
    new_dy = _quantize(offsets.get(node_id, 0.0) + delta_dy)
    if new_dy == 0.0:
        offsets.pop(node_id, None)
    else:
        offsets[node_id] = new_dy
    return replace(config, node_offsets=offsets)


def shading_fraction(config: DesignConfiguration) -> float:
    """Fraction of the facade area shaded by the exoskeleton members.

    Each member contributes a frontal area of length x section width; the sum
    is capped at the full facade area.
    """
    graph = generate_facade(config.grid, config)
    frontal = config.section.width * graph.total_member_length()
    return min(1.0, frontal / config.grid.facade_area)
