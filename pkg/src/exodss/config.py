"""Server configuration: one YAML document covering geometry bounds,
materials, load cases, climate, prices, fabrication constants, the feedback
epsilon, and server runtime settings.

`default_config()` returns the shipped desk-scale defaults (synthetic,
heating-dominated climate loosely shaped like Calgary's); every field can be
overridden from a YAML file via `load_config()`. The full effective config
is embedded in each session log so logs replay without the original file.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Mapping

import yaml

from .environment import (
    DEFAULT_OVERHEAT_SHARE,
    DEFAULT_SOLAR_UTILIZATION,
    BuildingSpec,
    ClimateProfile,
    PriceBook,
)
from .fabrication import FabricationConstants, FabricationWeights
from .feedback import DEFAULT_EPSILON
from .model import DesignBounds, DesignConfiguration, GridParams, SectionParams
from .structural import DEFAULT_GLUE_PENALTY, MaterialSpec

# Synthetic heating-dominated climate (K day, K day, kWh/m^2 per month).
# Irradiation is for the vertical facade plane, which at high latitude peaks
# in the cold season when the sun sits low.
DEFAULT_CLIMATE = ClimateProfile(
    heating_degree_days=(750.0, 640.0, 540.0, 330.0, 170.0, 60.0, 10.0, 20.0, 120.0, 320.0, 550.0, 700.0),
    cooling_degree_days=(0.0, 0.0, 0.0, 0.0, 0.0, 25.0, 45.0, 35.0, 0.0, 0.0, 0.0, 0.0),
    facade_irradiation=(110.0, 115.0, 120.0, 105.0, 95.0, 85.0, 90.0, 95.0, 100.0, 105.0, 100.0, 95.0),
)


@dataclass(frozen=True)
class StructuralSettings:
    """Solver-side knobs that are not part of any spec'd domain type.

    The default tie-backs are as stiff as a member (ratio 1.0) and the
    default wind pressure is small: a retrofit exoskeleton sheds most wind
    into the host building through its fasteners, so the lattice's own
    response is gravity-governed. Override both to study a free-standing
    wind-governed lattice instead."""

    glue_penalty: float = DEFAULT_GLUE_PENALTY
    anchor_ratio: float = 1.0  # tie-back spring stiffness as a share of EA/module
    wind_pressure: float = 0.02  # kN/m^2 reaching the lattice itself


@dataclass(frozen=True)
class LoadCaseSpec:
    """Declarative load case; materialized per configuration."""

    name: str
    kind: str  # "self_weight" | "pressure" | "nodal"
    pressure: float | None = None
    nodal: Mapping[str, tuple[float, float, float]] | None = None

    def check(self) -> None:
        if self.kind not in ("self_weight", "pressure", "nodal"):
            raise ValueError(f"unknown load case kind '{self.kind}'")
        if self.kind == "pressure" and (self.pressure is None or self.pressure < 0):
            raise ValueError("pressure load case needs a non-negative pressure")
        if self.kind == "nodal" and not self.nodal:
            raise ValueError("nodal load case needs a loads table")


@dataclass(frozen=True)
class ServerConfig:
    grid: GridParams = field(default_factory=lambda: GridParams(bays_x=3, bays_z=2, module_size=2.0))
    initial_section: SectionParams = field(
        default_factory=lambda: SectionParams(depth=0.18, width=0.12, laminations=2)
    )
    bounds: DesignBounds = field(default_factory=DesignBounds)
    material: MaterialSpec = field(
        default_factory=lambda: MaterialSpec(
            youngs_modulus=1.1e7,  # kN/m^2, glulam
            density=470.0,
            strength=2.4e4,
            embodied_carbon_factor=0.6,
            cost_per_kg=3.5,
        )
    )
    structural: StructuralSettings = field(default_factory=StructuralSettings)
    load_cases: tuple[LoadCaseSpec, ...] = (
        LoadCaseSpec(name="gravity", kind="self_weight"),
        LoadCaseSpec(name="wind", kind="pressure", pressure=0.02),
    )
    building: BuildingSpec = field(
        default_factory=lambda: BuildingSpec(
            facade_area=24.0,  # matches the default 6 m x 4 m grid
            glazing_ratio=0.5,
            u_value_envelope=1.5,  # leaky pre-retrofit envelope
            shgc=0.6,
            heating_efficiency=0.9,
            cooling_cop=3.0,
            annual_electricity_base=50.0,  # facade-attributed share only
            annual_dhw=50.0,
            lifespan_years=50.0,
        )
    )
    climate: ClimateProfile = DEFAULT_CLIMATE
    prices: PriceBook = field(
        default_factory=lambda: PriceBook(
            heat_price=0.14, elec_price=0.13, heat_carbon=0.2, elec_carbon=0.45
        )
    )
    fabrication: FabricationConstants = field(default_factory=FabricationConstants)
    fabrication_weights: FabricationWeights = field(default_factory=FabricationWeights)
    solar_utilization: float = DEFAULT_SOLAR_UTILIZATION
    overheat_share: float = DEFAULT_OVERHEAT_SHARE
    epsilon: float = DEFAULT_EPSILON
    edit_step: float = 0.05  # m per scroll tick, sent to clients in the hello ack
    port: int = 7763
    log_dir: str = "logs"

    def initial_configuration(self) -> DesignConfiguration:
        return DesignConfiguration(grid=self.grid, section=self.initial_section, node_offsets={})

    def check(self) -> None:
        self.grid.check()
        self.bounds.check()
        self.material.check()
        self.building.check()
        self.climate.check()
        self.prices.check()
        self.fabrication_weights.check()
        for lc in self.load_cases:
            lc.check()
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")
        if self.edit_step <= 0:
            raise ValueError("edit_step must be positive")


def config_to_dict(config: ServerConfig) -> dict[str, Any]:
    d = asdict(config)
    d["load_cases"] = [
        {k: v for k, v in asdict(lc).items() if v is not None} for lc in config.load_cases
    ]
    d["climate"] = {
        "heating_degree_days": list(config.climate.heating_degree_days),
        "cooling_degree_days": list(config.climate.cooling_degree_days),
        "facade_irradiation": list(config.climate.facade_irradiation),
    }
    return d


def config_from_dict(d: Mapping[str, Any]) -> ServerConfig:
    base = ServerConfig()

    def section(name: str, cls, default):
        raw = d.get(name)
        if raw is None:
            return default
        return cls(**raw)

    climate_raw = d.get("climate")
    if climate_raw is None:
        climate = base.climate
    else:
        climate = ClimateProfile(
            heating_degree_days=tuple(float(v) for v in climate_raw["heating_degree_days"]),
            cooling_degree_days=tuple(float(v) for v in climate_raw["cooling_degree_days"]),
            facade_irradiation=tuple(float(v) for v in climate_raw["facade_irradiation"]),
        )
    load_cases_raw = d.get("load_cases")
    if load_cases_raw is None:
        load_cases = base.load_cases
    else:
        load_cases = tuple(LoadCaseSpec(**lc) for lc in load_cases_raw)

    config = ServerConfig(
        grid=section("grid", GridParams, base.grid),
        initial_section=section("initial_section", SectionParams, base.initial_section),
        bounds=section("bounds", DesignBounds, base.bounds),
        material=section("material", MaterialSpec, base.material),
        structural=section("structural", StructuralSettings, base.structural),
        load_cases=load_cases,
        building=section("building", BuildingSpec, base.building),
        climate=climate,
        prices=section("prices", PriceBook, base.prices),
        fabrication=section("fabrication", FabricationConstants, base.fabrication),
        fabrication_weights=section("fabrication_weights", FabricationWeights, base.fabrication_weights),
        solar_utilization=float(d.get("solar_utilization", base.solar_utilization)),
        overheat_share=float(d.get("overheat_share", base.overheat_share)),
        epsilon=float(d.get("epsilon", base.epsilon)),
        edit_step=float(d.get("edit_step", base.edit_step)),
        port=int(d.get("port", base.port)),
        log_dir=str(d.get("log_dir", base.log_dir)),
    )
    config.check()
    return config


def default_config() -> ServerConfig:
    config = ServerConfig()
    config.check()
    return config


def load_config(path: str | Path) -> ServerConfig:
    with open(path, "r", encoding="utf-8") as fh:
        raw = yaml.safe_load(fh) or {}
    return config_from_dict(raw)


def dump_config(config: ServerConfig) -> str:
    return yaml.safe_dump(config_to_dict(config), sort_keys=True, default_flow_style=False)
