"""Linear-elastic 3D truss analysis of the exoskeleton lattice.

Members are axial bars (no bending): each contributes EA/L along its axis to
the global stiffness matrix. Supports are handled by eliminating all three
DOFs of the supported node. Because the as-drawn lattice is planar, free
nodes can carry optional out-of-plane anchor springs that model the tie-back
connections fastening the exoskeleton to the existing building; without
them a flat facade is a mechanism under any out-of-plane load.

The lamination count enters through the effective cross-section area
A_eff = depth * width * (1 - glue_penalty * (laminations - 1)): more glue
lines mean less load-bearing timber, so laminations trade stiffness against
mass.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .errors import NonFinite, SingularSystem, UnknownNode
from .model import DesignConfiguration, FacadeGraph, GridParams, SectionParams, generate_facade

GRAVITY = 9.80665  # m/s^2
DEFAULT_GLUE_PENALTY = 0.01
RESIDUAL_RTOL = 1e-8


@dataclass(frozen=True)
class MaterialSpec:
    """Member material. strength and cost_per_kg are carried in the config
    for completeness but no metric consumes them yet."""

    youngs_modulus: float  # kN/m^2
    density: float  # kg/m^3
    strength: float  # kN/m^2
    embodied_carbon_factor: float  # kg CO2 per kg
    cost_per_kg: float  # CAD/kg

    def check(self) -> None:
        for name in ("youngs_modulus", "density", "strength", "embodied_carbon_factor", "cost_per_kg"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise ValueError(f"material {name} must be strictly positive, got {v}")


@dataclass(frozen=True)
class LoadCase:
    name: str
    nodal_loads: Mapping[int, tuple[float, float, float]]  # kN per node


@dataclass(frozen=True, eq=False)
class DisplacementField:
    load_case: str
    displacements: np.ndarray  # (n_nodes, 3) in m

    def node(self, node_id: int) -> np.ndarray:
        return self.displacements[node_id]


@dataclass(frozen=True)
class StructuralMetrics:
    c1_max_displacement: float  # cm
    c2_elastic_energy: float  # kNm
    c3_mass: float  # kg


def effective_area(section: SectionParams, glue_penalty: float = DEFAULT_GLUE_PENALTY) -> float:
    factor = 1.0 - glue_penalty * (section.laminations - 1)
    if factor <= 0:
        raise ValueError(
            f"glue penalty {glue_penalty} wipes out the section at {section.laminations} laminations"
        )
    return section.depth * section.width * factor


def assemble_stiffness(
    graph: FacadeGraph,
    section: SectionParams,
    material: MaterialSpec,
    glue_penalty: float = DEFAULT_GLUE_PENALTY,
    lateral_anchors: Mapping[int, float] | None = None,
) -> np.ndarray:
    """Global 3n x 3n stiffness matrix (kN/m), supports not yet applied."""
    n = len(graph.nodes)
    pos = np.array([(nd.x, nd.y, nd.z) for nd in graph.nodes], dtype=float)
    ea = material.youngs_modulus * effective_area(section, glue_penalty)
    k = np.zeros((3 * n, 3 * n))
    for m in graph.members:
        d = pos[m.node_b] - pos[m.node_a]
        length = float(np.linalg.norm(d))
        if length <= 0:
            raise SingularSystem(f"member {m.id} has zero length")
        c = d / length
        ke = (ea / length) * np.outer(c, c)
        ia, ib = 3 * m.node_a, 3 * m.node_b
        k[ia : ia + 3, ia : ia + 3] += ke
        k[ib : ib + 3, ib : ib + 3] += ke
        k[ia : ia + 3, ib : ib + 3] -= ke
        k[ib : ib + 3, ia : ia + 3] -= ke
    if lateral_anchors:
        for nid, ky in lateral_anchors.items():
            if not (0 <= nid < n):
                raise UnknownNode(f"anchor on unknown node {nid}")
            k[3 * nid + 1, 3 * nid + 1] += ky
    return k


def tie_back_anchors(
    graph: FacadeGraph,
    grid: GridParams,
    section: SectionParams,
    material: MaterialSpec,
    anchor_ratio: float,
    glue_penalty: float = DEFAULT_GLUE_PENALTY,
) -> dict[int, float]:
    """Out-of-plane tie-back springs at every free node.

    Stiffness is anchor_ratio times a reference member axial stiffness
    EA/module_size, so halving E halves the whole system stiffness and
    linearity in E survives the anchors.
    """
    if anchor_ratio <= 0:
        return {}
    ky = anchor_ratio * material.youngs_modulus * effective_area(section, glue_penalty) / grid.module_size
    return {nd.id: ky for nd in graph.nodes if nd.id not in graph.supports}


def _load_vector(graph: FacadeGraph, load: LoadCase) -> np.ndarray:
    n = len(graph.nodes)
    f = np.zeros(3 * n)
    for nid, (fx, fy, fz) in load.nodal_loads.items():
        if not (0 <= nid < n):
            raise UnknownNode(f"load on unknown node {nid} in case '{load.name}'")
        f[3 * nid : 3 * nid + 3] += (fx, fy, fz)
    return f


def solve_displacements(
    graph: FacadeGraph,
    section: SectionParams,
    material: MaterialSpec,
    load: LoadCase,
    glue_penalty: float = DEFAULT_GLUE_PENALTY,
    lateral_anchors: Mapping[int, float] | None = None,
) -> DisplacementField:
    """Solve K u = f for one load case.

    Free DOFs with no stiffness at all (e.g. the transverse directions of an
    isolated bar) are held fixed provided they carry no load; a loaded
    zero-stiffness DOF is a mechanism and raises SingularSystem. The returned
    field satisfies ||K u - f|| <= 1e-8 ||f|| on the free DOFs.
    """
    if not graph.supports:
        raise SingularSystem("no supports: rigid-body modes unconstrained")
    n = len(graph.nodes)
    k = assemble_stiffness(graph, section, material, glue_penalty, lateral_anchors)
    f = _load_vector(graph, load)

    free = np.ones(3 * n, dtype=bool)
    for nid in graph.supports:
        free[3 * nid : 3 * nid + 3] = False

    diag = np.diag(k)
    scale = max(float(diag.max(initial=0.0)), 1.0)
    dead = free & (np.abs(diag) <= 1e-12 * scale)
    if np.any(dead & (f != 0.0)):
        bad = int(np.nonzero(dead & (f != 0.0))[0][0])
        raise SingularSystem(
            f"mechanism: loaded DOF {bad} (node {bad // 3}, axis {'xyz'[bad % 3]}) has no stiffness"
        )
    free &= ~dead

    u = np.zeros(3 * n)
    idx = np.nonzero(free)[0]
    if idx.size:
        k_red = k[np.ix_(idx, idx)]
        f_red = f[idx]
        try:
            u_red = np.linalg.solve(k_red, f_red)
        except np.linalg.LinAlgError as exc:
            raise SingularSystem(f"stiffness matrix is singular: {exc}") from exc
        if not np.all(np.isfinite(u_red)):
            raise NonFinite(f"non-finite displacements in case '{load.name}'")
        residual = float(np.linalg.norm(k_red @ u_red - f_red))
        f_norm = float(np.linalg.norm(f_red))
        if residual > RESIDUAL_RTOL * f_norm and f_norm > 0:
            raise SingularSystem(
                f"ill-conditioned system: residual {residual:.3e} exceeds {RESIDUAL_RTOL:.0e} * ||f||"
            )
        u[idx] = u_red

    return DisplacementField(load_case=load.name, displacements=u.reshape(n, 3))


def member_forces(
    graph: FacadeGraph,
    section: SectionParams,
    material: MaterialSpec,
    field: DisplacementField,
    glue_penalty: float = DEFAULT_GLUE_PENALTY,
) -> dict[int, float]:
    """Axial member forces (kN, tension positive) for a solved field."""
    pos = np.array([(nd.x, nd.y, nd.z) for nd in graph.nodes], dtype=float)
    ea = material.youngs_modulus * effective_area(section, glue_penalty)
    out: dict[int, float] = {}
    for m in graph.members:
        d = pos[m.node_b] - pos[m.node_a]
        length = float(np.linalg.norm(d))
        c = d / length
        du = field.displacements[m.node_b] - field.displacements[m.node_a]
        out[m.id] = float(ea / length * (du @ c))
    return out


def structure_mass(
    graph: FacadeGraph,
    section: SectionParams,
    material: MaterialSpec,
    glue_penalty: float = DEFAULT_GLUE_PENALTY,
) -> float:
    """Total mass (kg): density x effective area x member length, summed."""
    area = effective_area(section, glue_penalty)
    return material.density * area * graph.total_member_length()


def gravity_load_case(
    graph: FacadeGraph,
    section: SectionParams,
    material: MaterialSpec,
    glue_penalty: float = DEFAULT_GLUE_PENALTY,
    name: str = "gravity",
) -> LoadCase:
    """Member self-weight lumped half-and-half onto end nodes, acting -z.

    Shares landing on support nodes flow straight into the reaction and are
    omitted, keeping loads on free nodes only.
    """
    area = effective_area(section, glue_penalty)
    fz: dict[int, float] = {}
    for m in graph.members:
        w = material.density * area * graph.member_length(m) * GRAVITY / 1000.0  # kN
        for nid in (m.node_a, m.node_b):
            if nid not in graph.supports:
                fz[nid] = fz.get(nid, 0.0) - w / 2.0
    return LoadCase(name=name, nodal_loads={nid: (0.0, 0.0, v) for nid, v in sorted(fz.items())})


def wind_load_case(
    graph: FacadeGraph,
    grid: GridParams,
    pressure: float,
    name: str = "wind",
) -> LoadCase:
    """Uniform +y pressure (kN/m^2) times each free node's tributary area."""
    loads: dict[int, tuple[float, float, float]] = {}
    cell = grid.module_size * grid.module_size
    for nd in graph.nodes:
        if nd.id in graph.supports:
            continue
        row, col = divmod(nd.id, grid.nodes_per_row)
        n_cells_x = (1 if col > 0 else 0) + (1 if col < grid.bays_x else 0)
        n_cells_z = (1 if row > 0 else 0) + (1 if row < grid.bays_z else 0)
        tributary = n_cells_x * n_cells_z * cell / 4.0
        loads[nd.id] = (0.0, pressure * tributary, 0.0)
    return LoadCase(name=name, nodal_loads=loads)


def elastic_energy(graph: FacadeGraph, load: LoadCase, field: DisplacementField) -> float:
    """Work of the applied nodal loads through their displacements (kNm)."""
    f = _load_vector(graph, load)
    return float(f @ field.displacements.reshape(-1))


def evaluate_structure(
    config: DesignConfiguration,
    material: MaterialSpec,
    loads: Sequence[LoadCase],
    glue_penalty: float = DEFAULT_GLUE_PENALTY,
    lateral_anchors: Mapping[int, float] | None = None,
    graph: FacadeGraph | None = None,
) -> StructuralMetrics:
    """Metrics C1-C3 for a snapped, valid configuration.

    C1: worst displacement norm over load cases at the key points, in cm.
    C2: worst work of the applied loads through their displacements, in kNm.
    C3: total structural mass in kg; independent of the load cases.
    """
    if graph is None:
        graph = generate_facade(config.grid, config)
    section = config.section
    c1 = 0.0
    c2 = 0.0
    for load in loads:
        field = solve_displacements(graph, section, material, load, glue_penalty, lateral_anchors)
        for nid in graph.key_points:
            c1 = max(c1, float(np.linalg.norm(field.displacements[nid])))
        c2 = max(c2, elastic_energy(graph, load, field))
    return StructuralMetrics(
        c1_max_displacement=100.0 * c1,
        c2_elastic_energy=c2,
        c3_mass=structure_mass(graph, section, material, glue_penalty),
    )
