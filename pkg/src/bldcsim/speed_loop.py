"""Discrete PI speed loop fed by a commutation-interval speed estimate."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Tuple


@dataclass(frozen=True)
class PiGains:
    kp: float = 1e-3
    ki: float = 2e-2
    output_min: float = 0.02
    output_max: float = 1.0
    anti_windup: bool = True

    def __post_init__(self):
        if not self.output_min < self.output_max:
            raise ValueError("output_min must be below output_max")
        if self.output_min < 0 or self.output_max > 1:
            raise ValueError("output bounds must lie within [0, 1]")


class SpeedSource(enum.Enum):
    COMMUTATION_INTERVAL = "commutation_interval"
    NONE = "none"


@dataclass(frozen=True)
class SpeedEstimate:
    omega_mech_est: float = 0.0
    source: SpeedSource = SpeedSource.NONE


def estimate_speed(commutation_interval: float, pole_pairs: int) -> float:
    """Mechanical rad/s from the time between two commutations (60 deg electrical)."""
    if not commutation_interval > 0:
        raise ValueError(f"commutation_interval must be > 0, got {commutation_interval!r}")
    return (math.pi / 3.0) / commutation_interval / pole_pairs


def rad_s_to_rpm(omega: float) -> float:
    return omega * 60.0 / (2.0 * math.pi)


def rpm_to_rad_s(rpm: float) -> float:
    return rpm * 2.0 * math.pi / 60.0


def pi_update(gains: PiGains, setpoint: float, measured: float, dt: float,
              integral_state: float) -> Tuple[float, float]:
    """One PI step with output clamping and conditional-integration anti-windup.

    Returns ``(duty, new_integral)``.
    """
    if not dt > 0:
        raise ValueError(f"dt must be > 0, got {dt!r}")
    error = setpoint - measured
    integral = integral_state + gains.ki * error * dt
    u = gains.kp * error + integral
    if gains.anti_windup:
        # integrate only as far as the limit, never past it; freezing outright
        # could leave the output parked just short of saturation
        if u > gains.output_max and error > 0:
            integral = max(integral_state, gains.output_max - gains.kp * error)
            u = gains.kp * error + integral
        elif u < gains.output_min and error < 0:
            integral = min(integral_state, gains.output_min - gains.kp * error)
            u = gains.kp * error + integral
        span = gains.output_max - gains.output_min
        integral = min(max(integral, -span), span)
    duty = min(max(u, gains.output_min), gains.output_max)
    return duty, integral
