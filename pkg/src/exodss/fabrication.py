"""Fabrication complexity: material consumption, machining time, and the
composite index.

Material consumption M is the structural mass C3 (single source of truth).
Machining time T is a synthetic shop model: per-member setup, cross-cutting
both member ends, and per-joint work that grows with the lamination count.
The composite index normalizes both against reference values frozen at the
parameter-space corners, so it stays comparable across a whole session.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

from .errors import NonPositiveReference
from .model import (
    DesignBounds,
    DesignConfiguration,
    FacadeGraph,
    GridParams,
    SectionParams,
    generate_facade,
)
from .structural import DEFAULT_GLUE_PENALTY, MaterialSpec, structure_mass


@dataclass(frozen=True)
class FabricationWeights:
    omega_m: float = 0.5
    omega_t: float = 0.5

    def check(self) -> None:
        if not (0 <= self.omega_m <= 1 and 0 <= self.omega_t <= 1):
            raise ValueError("weights must lie in [0, 1]")
        if abs(self.omega_m + self.omega_t - 1.0) > 1e-12:
            raise ValueError("weights must sum to 1")


@dataclass(frozen=True)
class ReferenceValues:
    m_ref: float  # kg
    t_ref: float  # hours

    def check(self) -> None:
        if self.m_ref <= 0 or self.t_ref <= 0:
            raise NonPositiveReference(f"reference values must be positive, got {self}")


@dataclass(frozen=True)
class FabricationConstants:
    t_setup: float = 0.05  # h per member
    cut_time_per_m2: float = 0.5  # h per m^2 of cut face
    t_joint: float = 0.1  # h per joint at 1 lamination


def machining_time(
    config: DesignConfiguration,
    graph: FacadeGraph,
    constants: FabricationConstants = FabricationConstants(),
) -> float:
    """Shop hours: setup per member, two end cuts through the gross section
    per member, and per-joint work scaled by 1 + 0.1 (laminations - 1).
    Joints are counted one per node."""
    section = config.section
    n_members = len(graph.members)
    n_joints = len(graph.nodes)
    lamination_factor = 1.0 + 0.1 * (section.laminations - 1)
    return (
        n_members * constants.t_setup
        + n_members * constants.cut_time_per_m2 * 2.0 * section.area
        + n_joints * constants.t_joint * lamination_factor
    )


def _corner_offsets(grid: GridParams, offset: float) -> list[dict[int, float]]:
    """Offset patterns probing the extremes of total member length: flat,
    uniformly pushed/pulled, and the two checkerboard alternations."""
    supports = grid.support_ids()
    free = [n for n in range(grid.node_count) if n not in supports]
    patterns: list[dict[int, float]] = [{}]
    if offset > 0:
        patterns.append({n: offset for n in free})
        patterns.append({n: -offset for n in free})
        for parity in (0, 1):
            patterns.append(
                {
                    n: offset if (n // grid.nodes_per_row + n % grid.nodes_per_row) % 2 == parity else -offset
                    for n in free
                }
            )
    return patterns


def compute_reference_values(
    bounds: DesignBounds,
    grid: GridParams,
    material: MaterialSpec,
    constants: FabricationConstants = FabricationConstants(),
    glue_penalty: float = DEFAULT_GLUE_PENALTY,
) -> ReferenceValues:
    """Maximum M and T over the corners of the parameter space.

    Sections are taken at every (depth, width, laminations) bound corner and
    offsets at the length-maximizing extremes; M_ref and T_ref are the
    largest values seen (each maximized independently). Deterministic for a
    given grid and bounds; frozen once per session.
    """
    bounds.check()
    m_ref = 0.0
    t_ref = 0.0
    corners = itertools.product(
        (bounds.depth_min, bounds.depth_max),
        (bounds.width_min, bounds.width_max),
        (bounds.lam_min, bounds.lam_max),
    )
    for depth, width, lam in corners:
        section = SectionParams(depth=depth, width=width, laminations=lam)
        for offsets in _corner_offsets(grid, bounds.offset_max):
            config = DesignConfiguration(grid=grid, section=section, node_offsets=offsets)
            graph = generate_facade(grid, config)
            m_ref = max(m_ref, structure_mass(graph, section, material, glue_penalty))
            t_ref = max(t_ref, machining_time(config, graph, constants))
    refs = ReferenceValues(m_ref=m_ref, t_ref=t_ref)
    refs.check()
    return refs


def fabrication_complexity(
    m: float,
    t: float,
    refs: ReferenceValues,
    weights: FabricationWeights = FabricationWeights(),
) -> float:
    """Composite index omega_m * (M / M_ref) + omega_t * (T / T_ref).

    With weights summing to 1 and inputs below their references the result
    lies in [0, 1]."""
    refs.check()
    return weights.omega_m * (m / refs.m_ref) + weights.omega_t * (t / refs.t_ref)
