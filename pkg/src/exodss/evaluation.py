"""Ties the three evaluators together into the seven-metric vector.

Evaluation is staged: the fast pass covers what is cheap and purely
geometric (mass, machining time, fabrication complexity, shading); the full
pass adds the truss solve and the energy balance. Fabrication reference
values are frozen when the context is built, once per server configuration.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

from .config import LoadCaseSpec, ServerConfig
from .environment import DemandBreakdown, annual_demand, evaluate_environment
from .fabrication import compute_reference_values, fabrication_complexity, machining_time
from .feedback import MetricVector
from .model import DesignConfiguration, FacadeGraph, generate_facade
from .structural import (
    LoadCase,
    elastic_energy,
    gravity_load_case,
    member_forces,
    solve_displacements,
    structure_mass,
    tie_back_anchors,
    wind_load_case,
)


@dataclass(frozen=True)
class FastMetrics:
    c3: float
    c7: float
    shading: float
    machining_hours: float

    def as_dict(self) -> dict[str, float]:
        return {"c3": self.c3, "c7": self.c7, "shading": self.shading}


@dataclass(frozen=True, eq=False)
class FullResult:
    metrics: MetricVector
    shading: float
    demand: DemandBreakdown
    member_forces: dict[int, float]  # worst load case, kN, tension positive
    governing_case: str


class EvaluationContext:
    """Everything needed to score a configuration, frozen per server config."""

    def __init__(self, config: ServerConfig):
        config.check()
        self.config = config
        self.refs = compute_reference_values(
            config.bounds,
            config.grid,
            config.material,
            config.fabrication,
            config.structural.glue_penalty,
        )

    def build_load_cases(self, graph: FacadeGraph, design: DesignConfiguration) -> list[LoadCase]:
        cases: list[LoadCase] = []
        for spec in self.config.load_cases:
            cases.append(self._materialize(spec, graph, design))
        return cases

    def _materialize(self, spec: LoadCaseSpec, graph: FacadeGraph, design: DesignConfiguration) -> LoadCase:
        if spec.kind == "self_weight":
            return gravity_load_case(
                graph, design.section, self.config.material,
                self.config.structural.glue_penalty, name=spec.name,
            )
        if spec.kind == "pressure":
            return wind_load_case(graph, design.grid, spec.pressure, name=spec.name)
        loads = {int(nid): tuple(float(v) for v in vec) for nid, vec in (spec.nodal or {}).items()}
        return LoadCase(name=spec.name, nodal_loads=loads)

    def anchors(self, graph: FacadeGraph, design: DesignConfiguration) -> dict[int, float]:
        return tie_back_anchors(
            graph,
            design.grid,
            design.section,
            self.config.material,
            self.config.structural.anchor_ratio,
            self.config.structural.glue_penalty,
        )

    def evaluate_fast(self, design: DesignConfiguration, graph: FacadeGraph | None = None) -> FastMetrics:
        if graph is None:
            graph = generate_facade(design.grid, design)
        glue = self.config.structural.glue_penalty
        c3 = structure_mass(graph, design.section, self.config.material, glue)
        hours = machining_time(design, graph, self.config.fabrication)
        c7 = fabrication_complexity(c3, hours, self.refs, self.config.fabrication_weights)
        frontal = design.section.width * graph.total_member_length()
        shading = min(1.0, frontal / design.grid.facade_area)
        return FastMetrics(c3=c3, c7=c7, shading=shading, machining_hours=hours)

    def evaluate_full(self, design: DesignConfiguration) -> FullResult:
        cfg = self.config
        graph = generate_facade(design.grid, design)
        fast = self.evaluate_fast(design, graph)
        anchors = self.anchors(graph, design)
        loads = self.build_load_cases(graph, design)

        c1 = 0.0
        c2 = 0.0
        worst_case = ""
        worst_disp = -1.0
        forces: dict[int, float] = {}
        for load in loads:
            field = solve_displacements(
                graph, design.section, cfg.material, load, cfg.structural.glue_penalty, anchors
            )
            peak = max(
                (float((field.displacements[nid] ** 2).sum()) ** 0.5 for nid in graph.key_points),
                default=0.0,
            )
            c1 = max(c1, 100.0 * peak)
            c2 = max(c2, elastic_energy(graph, load, field))
            # member forces of the worst case feed the mesh overlay
            if peak > worst_disp:
                worst_disp = peak
                worst_case = load.name
                forces = member_forces(graph, design.section, cfg.material, field, cfg.structural.glue_penalty)

        demand = annual_demand(
            cfg.building, cfg.climate, fast.shading, cfg.solar_utilization, cfg.overheat_share
        )
        env = evaluate_environment(
            design,
            fast.c3,
            cfg.building,
            cfg.climate,
            cfg.prices,
            cfg.material.embodied_carbon_factor,
            cfg.solar_utilization,
            cfg.overheat_share,
            shading=fast.shading,
            demand=demand,
        )
        metrics = MetricVector(
            c1=c1,
            c2=c2,
            c3=fast.c3,
            c4=env.c4_operational_cost,
            c5=env.c5_carbon,
            c6=env.c6_solar_gain,
            c7=fast.c7,
        )
        return FullResult(
            metrics=metrics,
            shading=fast.shading,
            demand=demand,
            member_forces=forces,
            governing_case=worst_case,
        )
