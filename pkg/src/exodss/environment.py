"""Single-zone monthly degree-day energy model for the retrofitted facade.

The exoskeleton couples into the energy balance in two places: its members
shade the glazing (shading fraction reduces useful solar gain), and its mass
carries embodied carbon that is annualized over the building lifespan.
Everything is monthly and hand-checkable; no hourly simulation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .model import DesignConfiguration, shading_fraction

DEFAULT_SOLAR_UTILIZATION = 0.8
DEFAULT_OVERHEAT_SHARE = 0.3
MONTHS = 12
HOURS_PER_DAY = 24.0


@dataclass(frozen=True)
class ClimateProfile:
    """Monthly climate: heating/cooling degree days (K day) and facade-plane
    irradiation (kWh/m^2)."""

    heating_degree_days: tuple[float, ...]
    cooling_degree_days: tuple[float, ...]
    facade_irradiation: tuple[float, ...]

    def check(self) -> None:
        for name in ("heating_degree_days", "cooling_degree_days", "facade_irradiation"):
            vals = getattr(self, name)
            if len(vals) != MONTHS:
                raise ValueError(f"{name} needs {MONTHS} monthly entries, got {len(vals)}")
            if any(not math.isfinite(v) or v < 0 for v in vals):
                raise ValueError(f"{name} entries must be finite and non-negative")


@dataclass(frozen=True)
class BuildingSpec:
    facade_area: float  # m^2
    glazing_ratio: float  # 0..1
    u_value_envelope: float  # W/m^2K
    shgc: float  # 0..1
    heating_efficiency: float  # (0, 2]
    cooling_cop: float  # > 0
    annual_electricity_base: float  # kWh
    annual_dhw: float  # kWh
    lifespan_years: float  # > 0

    def check(self) -> None:
        if self.facade_area <= 0:
            raise ValueError("facade_area must be positive")
        if not 0 <= self.glazing_ratio <= 1:
            raise ValueError("glazing_ratio must be in [0, 1]")
        if self.u_value_envelope <= 0:
            raise ValueError("u_value_envelope must be positive")
        if not 0 <= self.shgc <= 1:
            raise ValueError("shgc must be in [0, 1]")
        if not 0 < self.heating_efficiency <= 2:
            raise ValueError("heating_efficiency must be in (0, 2]")
        if self.cooling_cop <= 0:
            raise ValueError("cooling_cop must be positive")
        if self.annual_electricity_base < 0 or self.annual_dhw < 0:
            raise ValueError("base loads must be non-negative")
        if self.lifespan_years <= 0:
            raise ValueError("lifespan_years must be positive")


@dataclass(frozen=True)
class PriceBook:
    heat_price: float  # CAD/kWh delivered heat fuel
    elec_price: float  # CAD/kWh
    heat_carbon: float  # kg CO2 per kWh fuel
    elec_carbon: float  # kg CO2 per kWh

    def check(self) -> None:
        for name in ("heat_price", "elec_price", "heat_carbon", "elec_carbon"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")


@dataclass(frozen=True)
class EnvironmentalMetrics:
    c4_operational_cost: float  # CAD/year
    c5_carbon: float  # kg CO2/year
    c6_solar_gain: float  # kWh/year


@dataclass(frozen=True)
class DemandBreakdown:
    """Monthly useful-energy demands (kWh); annual totals are plain sums."""

    heating: tuple[float, ...]
    cooling: tuple[float, ...]
    solar: tuple[float, ...]

    @property
    def annual_heating(self) -> float:
        return sum(self.heating)

    @property
    def annual_cooling(self) -> float:
        return sum(self.cooling)

    @property
    def annual_solar(self) -> float:
        return sum(self.solar)


def annual_demand(
    building: BuildingSpec,
    climate: ClimateProfile,
    shading: float,
    solar_utilization: float = DEFAULT_SOLAR_UTILIZATION,
    overheat_share: float = DEFAULT_OVERHEAT_SHARE,
) -> DemandBreakdown:
    """Monthly heating/cooling demand and solar gain for a given shading.

    Per month m:
        solar_m   = irradiation_m * area * glazing_ratio * shgc * (1 - shading)
        losses_m  = U * area * HDD_m * 24/1000
        heating_m = max(0, losses_m - solar_utilization * solar_m)
        cooling_m = U * area * CDD_m * 24/1000, plus overheat_share * solar_m
                    in months that have any cooling degree days
    """
    heating = []
    cooling = []
    solar = []
    ua = building.u_value_envelope * building.facade_area
    aperture = building.facade_area * building.glazing_ratio * building.shgc * (1.0 - shading)
    for m in range(MONTHS):
        solar_m = climate.facade_irradiation[m] * aperture
        losses_m = ua * climate.heating_degree_days[m] * HOURS_PER_DAY / 1000.0
        heating_m = max(0.0, losses_m - solar_utilization * solar_m)
        cdd = climate.cooling_degree_days[m]
        cooling_m = ua * cdd * HOURS_PER_DAY / 1000.0
        if cdd > 0:
            cooling_m += overheat_share * solar_m
        heating.append(heating_m)
        cooling.append(cooling_m)
        solar.append(solar_m)
    return DemandBreakdown(heating=tuple(heating), cooling=tuple(cooling), solar=tuple(solar))


def evaluate_environment(
    config: DesignConfiguration,
    c3_mass: float,
    building: BuildingSpec,
    climate: ClimateProfile,
    prices: PriceBook,
    embodied_carbon_factor: float,
    solar_utilization: float = DEFAULT_SOLAR_UTILIZATION,
    overheat_share: float = DEFAULT_OVERHEAT_SHARE,
    shading: float | None = None,
    demand: DemandBreakdown | None = None,
) -> EnvironmentalMetrics:
    """Metrics C4-C6.

    C4: operational cost = heating fuel at heat_price plus (cooling
        electricity + base electricity + DHW) at elec_price, CAD/year.
    C5: operational carbon on the same split plus the exoskeleton's embodied
        carbon annualized over the lifespan, kg CO2/year.
    C6: annual solar gain through the (shaded) glazing, kWh/year.

    c3_mass must come from the structural evaluation of the same
    configuration. Precomputed shading/demand can be passed to avoid
    re-deriving them.
    """
    if shading is None:
        shading = shading_fraction(config)
    if demand is None:
        demand = annual_demand(building, climate, shading, solar_utilization, overheat_share)
    heat_fuel = demand.annual_heating / building.heating_efficiency
    elec = demand.annual_cooling / building.cooling_cop + building.annual_electricity_base + building.annual_dhw
    c4 = heat_fuel * prices.heat_price + elec * prices.elec_price
    c5 = (
        heat_fuel * prices.heat_carbon
        + elec * prices.elec_carbon
        + c3_mass * embodied_carbon_factor / building.lifespan_years
    )
    return EnvironmentalMetrics(
        c4_operational_cost=c4,
        c5_carbon=c5,
        c6_solar_gain=demand.annual_solar,
    )
