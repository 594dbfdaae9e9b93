"""Inverter loss totals, FET ranking and battery runtime estimates."""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Sequence, Tuple

from .inverter import FetSpec, PwmConfig, conduction_loss, gate_loss, transition_loss


class NoFetsGiven(ValueError):
    pass


class NoFeasibleFet(ValueError):
    pass


@dataclass(frozen=True)
class MissionProfile:
    i_rms: float = 20.0
    v_bus: float = 16.0
    f_sw: float = 20000.0
    duty_avg: float = 0.5
    p_load: float = 300.0

    def __post_init__(self):
        for name in ("i_rms", "v_bus", "f_sw", "p_load"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")
        if not 0 <= self.duty_avg <= 1:
            raise ValueError("duty_avg must be in [0, 1]")


@dataclass(frozen=True)
class BatterySpec:
    nominal_voltage: float = 16.0
    capacity: float = 5.0
    usable_fraction: float = 0.8

    def __post_init__(self):
        if not self.nominal_voltage > 0 or not self.capacity > 0:
            raise ValueError("battery voltage and capacity must be > 0")
        if not 0 < self.usable_fraction <= 1:
            raise ValueError("usable_fraction must be in (0, 1]")

    @property
    def usable_energy_wh(self) -> float:
        return self.nominal_voltage * self.capacity * self.usable_fraction


@dataclass(frozen=True)
class FetConstraints:
    v_bus_min_rating: float = 16.0
    vgate_available: float = 10.0


@dataclass(frozen=True)
class LossBreakdown:
    conduction: float
    transition: float
    gate: float

    @property
    def total(self) -> float:
        return self.conduction + self.transition + self.gate


def loss_breakdown(fet: FetSpec, profile: MissionProfile) -> LossBreakdown:
    # two switches conduct at any instant, one of them is chopped, all six gates are driven
    return LossBreakdown(
        conduction=2.0 * conduction_loss(profile.i_rms, fet),
        transition=transition_loss(profile.v_bus, profile.i_rms, fet, profile.f_sw),
        gate=6.0 * gate_loss(fet, profile.f_sw),
    )


def total_inverter_loss(fet: FetSpec, profile: MissionProfile) -> float:
    return loss_breakdown(fet, profile).total


def rank_fets(fets: Sequence[FetSpec], profile: MissionProfile,
              constraints: FetConstraints = FetConstraints()) -> List[Tuple[FetSpec, float]]:
    """Feasible parts sorted by total loss, then cost, then part number."""
    if not fets:
        raise NoFetsGiven("no FETs to rank")
    feasible = [f for f in fets
                if f.vds_max >= constraints.v_bus_min_rating
                and f.vgate <= constraints.vgate_available]
    if not feasible:
        raise NoFeasibleFet(
            f"no FET rated for {constraints.v_bus_min_rating} V with gate drive "
            f"<= {constraints.vgate_available} V")
    scored = [(f, total_inverter_loss(f, profile)) for f in feasible]
    scored.sort(key=lambda fl: (fl[1], fl[0].cost, fl[0].part_no))
    return scored


def runtime_estimate(battery: BatterySpec, profile: MissionProfile, fet: FetSpec) -> float:
    """Minutes until the usable battery energy is spent."""
    power = profile.p_load + total_inverter_loss(fet, profile)
    if not power > 0:
        raise ValueError("total power draw must be > 0")
    return 60.0 * battery.usable_energy_wh / power


def pwm_of(profile: MissionProfile) -> PwmConfig:
    return PwmConfig(f_sw=profile.f_sw, duty=profile.duty_avg)
