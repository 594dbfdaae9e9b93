"""Three-phase star-connected BLDC plant with trapezoidal back-EMF.

The electrical subsystem is advanced with backward Euler, the mechanics with
explicit (semi-implicit) Euler.  Everything works on plain floats so the
simulation engine can call :func:`electrical_step` and :func:`mechanical_step`
a million times per simulated second without allocating.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Sequence, Tuple

TWO_PI = 2.0 * math.pi
_SIXTY = math.pi / 3.0
_THIRTY = math.pi / 6.0
_OFFSET_B = 2.0 * math.pi / 3.0
_OFFSET_C = 4.0 * math.pi / 3.0


@dataclass(frozen=True)
class MotorParams:
    phase_resistance: float = 0.1
    phase_inductance: float = 50e-6
    ke: float = 0.01
    pole_pairs: int = 7
    inertia: float = 1e-5
    viscous_friction: float = 1e-6
    load_torque: float = 0.03

    def __post_init__(self):
        if not self.phase_resistance > 0:
            raise ValueError("phase_resistance must be > 0")
        if not self.phase_inductance > 0:
            raise ValueError("phase_inductance must be > 0")
        if not self.inertia > 0:
            raise ValueError("inertia must be > 0")
        if int(self.pole_pairs) != self.pole_pairs or self.pole_pairs < 1:
            raise ValueError("pole_pairs must be an integer >= 1")
        if self.ke < 0:
            raise ValueError("ke must be >= 0")
        if self.viscous_friction < 0:
            raise ValueError("viscous_friction must be >= 0")
        if self.load_torque < 0:
            raise ValueError("load_torque must be >= 0")


@dataclass(frozen=True)
class MotorState:
    theta_mech: float = 0.0
    omega_mech: float = 0.0
    phase_currents: Tuple[float, float, float] = (0.0, 0.0, 0.0)


@dataclass(frozen=True)
class BemfTriple:
    e_a: float
    e_b: float
    e_c: float

    def as_tuple(self) -> Tuple[float, float, float]:
        return (self.e_a, self.e_b, self.e_c)


def wrap_angle(theta: float) -> float:
    """Wrap to [0, 2*pi)."""
    theta = math.fmod(theta, TWO_PI)
    if theta < 0.0:
        theta += TWO_PI
    if theta >= TWO_PI:
        theta = 0.0
    return theta


def electrical_angle(params: MotorParams, state: MotorState) -> float:
    return wrap_angle(params.pole_pairs * state.theta_mech)


def bemf_shape(theta_e: float) -> float:
    """Unit trapezoid: 60 degree ramps, 120 degree flats, zero crossings at 30 and 210 deg."""
    x = theta_e % TWO_PI
    if x < _SIXTY:
        return -1.0 + (x - 0.0) / _THIRTY
    if x < math.pi:
        return 1.0
    if x < math.pi + _SIXTY:
        return 1.0 - (x - math.pi) / _THIRTY
    return -1.0


def shapes(theta_e: float) -> Tuple[float, float, float]:
    # phase b lags a by 120 deg, c lags by 240 deg
    return (bemf_shape(theta_e), bemf_shape(theta_e - _OFFSET_B), bemf_shape(theta_e - _OFFSET_C))


def back_emf(params: MotorParams, state: MotorState) -> BemfTriple:
    theta_e = params.pole_pairs * state.theta_mech
    k = params.ke * state.omega_mech
    sa, sb, sc = shapes(theta_e)
    return BemfTriple(k * sa, k * sb, k * sc)


def electromagnetic_torque(params: MotorParams, theta_e: float,
                           currents: Sequence[float]) -> float:
    # ke * sum(shape * i) is e.i / omega without the 0/0 at standstill
    sa, sb, sc = shapes(theta_e)
    return params.ke * (sa * currents[0] + sb * currents[1] + sc * currents[2])


def electrical_step(r: float, l: float, dt: float,
                    currents: Sequence[float], emfs: Sequence[float],
                    volts: Sequence[float], open_legs: Sequence[bool]):
    """One backward-Euler step of the star-connected windings.

    ``volts`` gives the terminal voltage of every connected leg; entries of open
    legs are ignored and recomputed so that the leg's current is zero at the end
    of the step.  Returns ``(new_currents, v_n, terminal_volts)``.
    """
    a = dt / l
    b = 1.0 + dt * r / l
    n_fixed = 0
    acc = 0.0
    for x in range(3):
        if not open_legs[x]:
            n_fixed += 1
            acc += currents[x] / a + volts[x] - emfs[x]
    if n_fixed:
        v_n = acc / n_fixed
    else:
        v_n = 0.0
    new_i = [0.0, 0.0, 0.0]
    v_out = [0.0, 0.0, 0.0]
    for x in range(3):
        if open_legs[x]:
            v_out[x] = v_n + emfs[x] - currents[x] / a
        else:
            v_out[x] = volts[x]
            if n_fixed > 1:
                new_i[x] = (currents[x] + a * (volts[x] - v_n - emfs[x])) / b
    return new_i, v_n, v_out


def mechanical_step(params: MotorParams, theta_mech: float, omega: float,
                    torque: float, dt: float) -> Tuple[float, float]:
    """Explicit Euler on speed, then angle from the updated speed.

    The external load acts as Coulomb friction: it opposes rotation and cannot
    drive the rotor backwards from standstill.
    """
    j = params.inertia
    drive = torque - params.viscous_friction * omega
    load = params.load_torque
    if omega > 0.0:
        new_omega = omega + dt * (drive - load) / j
        if new_omega < 0.0:
            new_omega = 0.0
    elif omega < 0.0:
        new_omega = omega + dt * (drive + load) / j
        if new_omega > 0.0:
            new_omega = 0.0
    else:
        if drive > load:
            new_omega = dt * (drive - load) / j
        elif drive < -load:
            new_omega = dt * (drive + load) / j
        else:
            new_omega = 0.0
    return wrap_angle(theta_mech + new_omega * dt), new_omega


def step_dynamics(params: MotorParams, state: MotorState,
                  terminal_voltages: Sequence[float], dt: float) -> MotorState:
    """Advance the plant by ``dt`` with all three terminals voltage-driven."""
    if not dt > 0:
        raise ValueError(f"dt must be > 0, got {dt!r}")
    theta_e = params.pole_pairs * state.theta_mech
    sa, sb, sc = shapes(theta_e)
    k = params.ke * state.omega_mech
    emfs = (k * sa, k * sb, k * sc)
    new_i, _, _ = electrical_step(params.phase_resistance, params.phase_inductance, dt,
                                  state.phase_currents, emfs, terminal_voltages,
                                  (False, False, False))
    torque = params.ke * (sa * new_i[0] + sb * new_i[1] + sc * new_i[2])
    theta, omega = mechanical_step(params, state.theta_mech, state.omega_mech, torque, dt)
    return MotorState(theta, omega, (new_i[0], new_i[1], new_i[2]))


def with_speed(state: MotorState, omega_mech: float) -> MotorState:
    return replace(state, omega_mech=omega_mech)
