"""Scenario configuration: dataclasses plus the flat ``key = value`` file format.

Every key, its type and its default::

    dt = 1e-6                       plant step, s
    t_end = 1.5                     simulated time, s
    v_bus = 16.0                    DC link, V
    trace_rate = 10000              trace output rate, Hz (decimates control ticks)
    phi = 6                         commutations per electrical revolution

    motor.phase_resistance = 0.1    ohm
    motor.phase_inductance = 50e-6  H
    motor.ke = 0.01                 V s/rad (mechanical)
    motor.pole_pairs = 7
    motor.inertia = 1e-5            kg m^2
    motor.viscous_friction = 1e-6   N m s/rad
    motor.load_torque = 0.03        N m, opposes rotation

    pwm.f_sw = 20000                Hz; also the control tick rate
    pwm.duty = 0.3                  closed-loop duty when no speed loop runs
    pwm.duty_slew = 2.0             max duty change per second when no speed loop runs

    inverter.fet = TPN4R806PL       part number from the bundled FET database
    inverter.ideal_switches = false

    sensing.cutoff_hz = 100
    sensing.v_threshold_high = 0.5  peak BEMF to enter direct zero-cross detection, V
    sensing.v_threshold_low = 0.3   peak BEMF to fall back to the filtered path, V
    sensing.blanking_fraction = 0.25
    sensing.lut_f_min = 5
    sensing.lut_f_max = 2000
    sensing.lut_n = 64

    ramp.f_start = 5                electrical Hz
    ramp.f_end = 30
    ramp.ramp_time = 0.15           s
    ramp.duty_start = 0.065
    ramp.timeout = 0.5              s after the ramp to find the first crossing

    gains.kp = 1e-3                 duty per rad/s
    gains.ki = 2e-2                 duty per rad
    gains.output_min = 0.02
    gains.output_max = 1.0
    gains.anti_windup = true

    scenario.kind = speed_step      speed_step | constant_speed | startup | duty_sweep
    scenario.from_rpm = 400
    scenario.to_rpm = 2000
    scenario.step_time = 0.4
    scenario.rpm = 2000             constant_speed setpoint
    scenario.duty_start = 0.065     duty_sweep start
    scenario.duty_end = 1.0         duty_sweep end

``#`` starts a comment.  Unknown keys and malformed values are errors.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple, Union

from .commutator import ModeThresholds, StartupRamp
from .inverter import PwmConfig
from .machine import MotorParams
from .speed_loop import PiGains


class ConfigError(ValueError):
    def __init__(self, message: str, line: Optional[int] = None, key: Optional[str] = None):
        self.line = line
        self.key = key
        where = []
        if line is not None:
            where.append(f"line {line}")
        if key is not None:
            where.append(f"key '{key}'")
        super().__init__(f"{', '.join(where)}: {message}" if where else message)


@dataclass(frozen=True)
class SensingConfig:
    cutoff_hz: float = 100.0
    v_threshold_high: float = 0.5
    v_threshold_low: float = 0.3
    blanking_fraction: float = 0.25
    lut_f_min: float = 5.0
    lut_f_max: float = 2000.0
    lut_n: int = 64

    def __post_init__(self):
        if not self.cutoff_hz > 0:
            raise ValueError("cutoff_hz must be > 0")
        if not 0 <= self.blanking_fraction < 0.5:
            raise ValueError("blanking_fraction must be in [0, 0.5)")
        if not 0 < self.lut_f_min < self.lut_f_max:
            raise ValueError("lut_f_min must be > 0 and below lut_f_max")
        if self.lut_n < 2:
            raise ValueError("lut_n must be >= 2")
        ModeThresholds(self.v_threshold_high, self.v_threshold_low)

    @property
    def thresholds(self) -> ModeThresholds:
        return ModeThresholds(self.v_threshold_high, self.v_threshold_low)


@dataclass(frozen=True)
class InverterConfig:
    fet: str = "TPN4R806PL"
    ideal_switches: bool = False


@dataclass(frozen=True)
class RampConfig:
    f_start: float = 5.0
    f_end: float = 30.0
    ramp_time: float = 0.15
    duty_start: float = 0.065
    timeout: float = 0.5

    def __post_init__(self):
        StartupRamp(self.f_start, self.f_end, self.ramp_time, self.duty_start)
        if not self.timeout > 0:
            raise ValueError("timeout must be > 0")

    @property
    def ramp(self) -> StartupRamp:
        return StartupRamp(self.f_start, self.f_end, self.ramp_time, self.duty_start)


@dataclass(frozen=True)
class PwmSettings:
    f_sw: float = 20000.0
    duty: float = 0.3
    duty_slew: float = 2.0

    def __post_init__(self):
        PwmConfig(self.f_sw, self.duty)
        if not self.duty_slew > 0:
            raise ValueError("duty_slew must be > 0")

    @property
    def pwm(self) -> PwmConfig:
        return PwmConfig(self.f_sw, self.duty)


# -- scenarios ---------------------------------------------------------------

@dataclass(frozen=True)
class Startup:
    name = "startup"


@dataclass(frozen=True)
class SpeedStep:
    from_rpm: float = 400.0
    to_rpm: float = 2000.0
    step_time: float = 0.4
    name = "speed_step"


@dataclass(frozen=True)
class ConstantSpeed:
    rpm: float = 2000.0
    name = "constant_speed"


@dataclass(frozen=True)
class DutySweep:
    duty_start: float = 0.065
    duty_end: float = 1.0
    name = "duty_sweep"


Scenario = Union[Startup, SpeedStep, ConstantSpeed, DutySweep]


@dataclass(frozen=True)
class ScenarioConfig:
    kind: str = "speed_step"
    from_rpm: float = 400.0
    to_rpm: float = 2000.0
    step_time: float = 0.4
    rpm: float = 2000.0
    duty_start: float = 0.065
    duty_end: float = 1.0

    def __post_init__(self):
        if self.kind not in ("speed_step", "constant_speed", "startup", "duty_sweep"):
            raise ValueError(f"kind must be speed_step, constant_speed, startup or duty_sweep")
        if self.from_rpm < 0 or self.to_rpm < 0 or self.rpm < 0:
            raise ValueError("rpm setpoints must be >= 0")
        if self.step_time < 0:
            raise ValueError("step_time must be >= 0")
        if not (0 <= self.duty_start <= 1 and 0 <= self.duty_end <= 1):
            raise ValueError("duty_start and duty_end must be in [0, 1]")

    @property
    def scenario(self) -> Scenario:
        if self.kind == "speed_step":
            return SpeedStep(self.from_rpm, self.to_rpm, self.step_time)
        if self.kind == "constant_speed":
            return ConstantSpeed(self.rpm)
        if self.kind == "duty_sweep":
            return DutySweep(self.duty_start, self.duty_end)
        return Startup()


@dataclass(frozen=True)
class SimConfig:
    dt: float = 1e-6
    t_end: float = 1.5
    v_bus: float = 16.0
    trace_rate: float = 10000.0
    phi: int = 6
    motor: MotorParams = field(default_factory=MotorParams)
    pwm: PwmSettings = field(default_factory=PwmSettings)
    inverter: InverterConfig = field(default_factory=InverterConfig)
    sensing: SensingConfig = field(default_factory=SensingConfig)
    ramp: RampConfig = field(default_factory=RampConfig)
    gains: PiGains = field(default_factory=PiGains)
    scenario: ScenarioConfig = field(default_factory=ScenarioConfig)

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be > 0")
        if self.dt > 10e-6:
            raise ValueError("dt must be <= 10e-6")
        if not self.t_end > self.dt:
            raise ValueError("t_end must be greater than dt")
        if not self.v_bus > 0:
            raise ValueError("v_bus must be > 0")
        if not 0 < self.trace_rate <= self.pwm.f_sw:
            raise ValueError("trace_rate must be in (0, pwm.f_sw]")
        if self.phi < 1:
            raise ValueError("phi must be >= 1")

    def replace(self, **changes) -> "SimConfig":
        """Copy with changes; dotted names (``motor__ke``) reach into sections."""
        top = {}
        nested: Dict[str, Dict[str, object]] = {}
        for k, v in changes.items():
            if "__" in k:
                section, name = k.split("__", 1)
                nested.setdefault(section, {})[name] = v
            else:
                top[k] = v
        for section, vals in nested.items():
            top[section] = dataclasses.replace(getattr(self, section), **vals)
        return dataclasses.replace(self, **top)


_SECTIONS = ("motor", "pwm", "inverter", "sensing", "ramp", "gains", "scenario")
_TOP_LEVEL = ("dt", "t_end", "v_bus", "trace_rate", "phi")


def _field_types(cls) -> Dict[str, type]:
    defaults = cls()
    return {f.name: type(getattr(defaults, f.name)) for f in dataclasses.fields(cls)}


_SECTION_CLASSES = {f.name: f.default_factory for f in dataclasses.fields(SimConfig)
                    if f.name in _SECTIONS}
_TOP_TYPES = {name: type(getattr(SimConfig(), name)) for name in _TOP_LEVEL}


def known_keys() -> List[str]:
    keys = list(_TOP_LEVEL)
    for section in _SECTIONS:
        keys += [f"{section}.{name}" for name in _field_types(_SECTION_CLASSES[section])]
    return keys


def _convert(raw: str, typ: type):
    if typ is bool:
        low = raw.lower()
        if low in ("true", "yes", "on", "1"):
            return True
        if low in ("false", "no", "off", "0"):
            return False
        raise ValueError(f"expected a boolean, got {raw!r}")
    if typ is int:
        val = float(raw)
        if not val.is_integer():
            raise ValueError(f"expected an integer, got {raw!r}")
        return int(val)
    if typ is float:
        val = float(raw)
        if not math.isfinite(val):
            raise ValueError(f"expected a finite number, got {raw!r}")
        return val
    return raw


def _mentioned(message: str, names) -> Optional[str]:
    for name in sorted(names, key=len, reverse=True):
        if name in message:
            return name
    return None


def parse_config(text: str) -> SimConfig:
    values: Dict[str, Tuple[object, int]] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ConfigError("expected 'key = value'", line=lineno)
        key, raw = (part.strip() for part in body.split("=", 1))
        if not key:
            raise ConfigError("missing key", line=lineno)
        if key in values:
            raise ConfigError("duplicate key", line=lineno, key=key)
        if "." in key:
            section, name = key.split(".", 1)
            types = _field_types(_SECTION_CLASSES[section]) if section in _SECTIONS else {}
            if name not in types:
                raise ConfigError("unknown key", line=lineno, key=key)
            typ = types[name]
        else:
            if key not in _TOP_TYPES:
                raise ConfigError("unknown key", line=lineno, key=key)
            typ = _TOP_TYPES[key]
        try:
            values[key] = (_convert(raw, typ), lineno)
        except ValueError as exc:
            raise ConfigError(str(exc), line=lineno, key=key) from None

    sections = {}
    for section in _SECTIONS:
        cls = _SECTION_CLASSES[section]
        kwargs = {k.split(".", 1)[1]: v for k, (v, _) in values.items()
                  if k.startswith(section + ".")}
        try:
            sections[section] = cls(**kwargs)
        except ValueError as exc:
            name = _mentioned(str(exc), _field_types(cls))
            key = f"{section}.{name}" if name else section
            line = values.get(key, (None, None))[1]
            raise ConfigError(str(exc), line=line, key=key) from None
    top = {k: v for k, (v, _) in values.items() if "." not in k}
    try:
        return SimConfig(**top, **sections)
    except ValueError as exc:
        name = _mentioned(str(exc), _TOP_LEVEL)
        line = values.get(name, (None, None))[1] if name else None
        raise ConfigError(str(exc), line=line, key=name) from None


def format_config(config: SimConfig) -> str:
    """Render a config back to the file format (every key, explicit values)."""
    lines = [f"{k} = {_render(getattr(config, k))}" for k in _TOP_LEVEL]
    for section in _SECTIONS:
        sub = getattr(config, section)
        for f in dataclasses.fields(sub):
            lines.append(f"{section}.{f.name} = {_render(getattr(sub, f.name))}")
    return "\n".join(lines) + "\n"


def _render(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)
