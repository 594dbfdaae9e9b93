"""Six-step commutation: sector table, open-loop ramp, ZCP scheduling, mode supervisor."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import List, NamedTuple, Optional, Tuple

from .sensing import Direction, Phase, ZcdEvent


class SectorEntry(NamedTuple):
    high: Phase
    low: Phase
    floating: Phase
    direction: Direction


SECTOR_TABLE: Tuple[SectorEntry, ...] = (
    SectorEntry(Phase.A, Phase.B, Phase.C, Direction.FALLING),
    SectorEntry(Phase.A, Phase.C, Phase.B, Direction.RISING),
    SectorEntry(Phase.B, Phase.C, Phase.A, Direction.FALLING),
    SectorEntry(Phase.B, Phase.A, Phase.C, Direction.RISING),
    SectorEntry(Phase.C, Phase.A, Phase.B, Direction.FALLING),
    SectorEntry(Phase.C, Phase.B, Phase.A, Direction.RISING),
)


@dataclass(frozen=True)
class Sector:
    index: int

    def __post_init__(self):
        if int(self.index) != self.index or not 0 <= self.index <= 5:
            raise ValueError(f"sector index must be in 0..5, got {self.index!r}")

    def next(self) -> "Sector":
        return Sector((self.index + 1) % 6)

    @property
    def entry(self) -> SectorEntry:
        return SECTOR_TABLE[self.index]

    @property
    def start_angle_deg(self) -> float:
        # sector 0 spans 60..120 deg electrical
        return (60.0 + 60.0 * self.index) % 360.0


def sector_for(phase: Phase, direction: Direction) -> Sector:
    """The unique sector in which ``phase`` floats with a ``direction`` crossing."""
    for k, row in enumerate(SECTOR_TABLE):
        if row.floating is phase and row.direction is direction:
            return Sector(k)
    raise ValueError(f"no sector floats {phase!r} {direction!r}")


class ControllerMode(enum.Enum):
    OPEN_LOOP_STARTUP = "open_loop_startup"
    CLOSED_LOOP_INTEGRATION = "closed_loop_integration"
    CLOSED_LOOP_ZCD = "closed_loop_zcd"


@dataclass(frozen=True)
class StartupRamp:
    f_start: float = 5.0
    f_end: float = 30.0
    ramp_time: float = 0.15
    duty_start: float = 0.065

    def __post_init__(self):
        if not (0 < self.f_start < self.f_end):
            raise ValueError("ramp requires 0 < f_start < f_end")
        if not self.ramp_time > 0:
            raise ValueError("ramp_time must be > 0")
        if not 0 <= self.duty_start <= 1:
            raise ValueError("duty_start must be in [0, 1]")

    def frequency(self, t: float) -> float:
        if t >= self.ramp_time:
            return self.f_end
        return self.f_start + (self.f_end - self.f_start) * t / self.ramp_time

    def cycles(self, t: float) -> float:
        """Electrical revolutions commanded by time ``t``."""
        if t <= self.ramp_time:
            return self.f_start * t + 0.5 * (self.f_end - self.f_start) * t * t / self.ramp_time
        base = 0.5 * (self.f_start + self.f_end) * self.ramp_time
        return base + self.f_end * (t - self.ramp_time)


@dataclass(frozen=True)
class ModeThresholds:
    v_threshold_high: float = 0.5
    v_threshold_low: float = 0.3

    def __post_init__(self):
        if not self.v_threshold_low < self.v_threshold_high:
            raise ValueError("v_threshold_low must be below v_threshold_high")


@dataclass
class CommutatorDiagnostics:
    discarded_events: int = 0
    transitions: List[Tuple[float, ControllerMode, ControllerMode]] = field(default_factory=list)


def comp_frequency(rpm_max: float, p: float, phi: float) -> float:
    """Commutation events per second at ``rpm_max``: (rpm/60) * P * phi."""
    if rpm_max < 0 or p < 0 or phi < 0:
        raise ValueError("comp_frequency inputs must be >= 0")
    return rpm_max * p * phi / 60.0


def comp_period(freq: float) -> float:
    if not freq > 0:
        raise ValueError(f"period undefined for frequency {freq!r}")
    return 1.0 / freq


def intg_frequency(freq_comp: float) -> float:
    # the integration point sits halfway between commutations
    if freq_comp < 0:
        raise ValueError("freq_comp must be >= 0")
    return 2.0 * freq_comp


def event_matches(event: ZcdEvent, sector: Sector) -> bool:
    row = sector.entry
    return event.phase is row.floating and event.direction is row.direction


def on_zcd_event(event: ZcdEvent, current_sector: Sector, last_interval: float,
                 advance: float = 0.0,
                 diagnostics: Optional[CommutatorDiagnostics] = None) -> Optional[float]:
    """Commutation instant 30 deg electrical after the (delay-corrected) crossing.

    Returns None when the event does not belong to the sector's floating phase
    or has the wrong direction; such events are only counted.
    """
    if not last_interval > 0:
        raise ValueError(f"last_interval must be > 0, got {last_interval!r}")
    if not event_matches(event, current_sector):
        if diagnostics is not None:
            diagnostics.discarded_events += 1
        return None
    t = event.time + 0.5 * last_interval - advance
    return max(t, event.time)


def openloop_step(ramp: StartupRamp, t: float) -> Tuple[Sector, float]:
    if t < 0:
        raise ValueError("t must be >= 0")
    k = int(math.floor(6.0 * ramp.cycles(t) + 1e-9))
    return Sector(k % 6), ramp.duty_start


def mode_supervisor(mode: ControllerMode, est_speed: float, bemf_peak_est: float,
                    config: ModeThresholds, zcp_detected: bool = False) -> ControllerMode:
    """Next controller mode.  ``est_speed`` is informational; decisions use the BEMF peak."""
    if mode is ControllerMode.OPEN_LOOP_STARTUP:
        return ControllerMode.CLOSED_LOOP_INTEGRATION if zcp_detected else mode
    if mode is ControllerMode.CLOSED_LOOP_INTEGRATION:
        if bemf_peak_est > config.v_threshold_high:
            return ControllerMode.CLOSED_LOOP_ZCD
        return mode
    if mode is ControllerMode.CLOSED_LOOP_ZCD:
        if bemf_peak_est < config.v_threshold_low:
            return ControllerMode.CLOSED_LOOP_INTEGRATION
        return mode
    raise ValueError(f"unknown mode {mode!r}")
