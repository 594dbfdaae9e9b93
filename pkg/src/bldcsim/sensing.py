"""Back-EMF sensing paths: filtered integrator path and direct on-time comparator."""

from __future__ import annotations

import bisect
import csv
import enum
import io
import math
from dataclasses import dataclass
from pathlib import Path
from typing import List, Sequence, Tuple, Union


class Phase(enum.IntEnum):
    A = 0
    B = 1
    C = 2


class Direction(enum.Enum):
    RISING = "rising"
    FALLING = "falling"


class SensingMode(enum.Enum):
    LOW_SPEED_INTEGRATION = "low_speed_integration"
    HIGH_SPEED_ZCD = "high_speed_zcd"


class PaSource(enum.Enum):
    FILTERED_INTEGRATOR_PATH = "filtered_integrator_path"
    DIRECT_TERMINAL = "direct_terminal"


class RefSource(enum.Enum):
    GROUND = "ground"
    HALF_VBUS = "half_vbus"


@dataclass(frozen=True)
class ZcdEvent:
    time: float
    phase: Phase
    direction: Direction


class LowPassFilter:
    """Single-pole low-pass filter, forward-Euler discretised."""

    def __init__(self, cutoff_hz: float, state: float = 0.0):
        if not cutoff_hz > 0:
            raise ValueError(f"cutoff_hz must be > 0, got {cutoff_hz!r}")
        self.cutoff_hz = cutoff_hz
        self.state = state

    def step(self, x: float, dt: float) -> float:
        if not dt > 0:
            raise ValueError(f"dt must be > 0, got {dt!r}")
        self.state += (2.0 * math.pi * self.cutoff_hz * dt) * (x - self.state)
        return self.state

    def copy(self) -> "LowPassFilter":
        return LowPassFilter(self.cutoff_hz, self.state)

    def __repr__(self):
        return f"LowPassFilter(cutoff_hz={self.cutoff_hz!r}, state={self.state!r})"


def lpf_step(filt: LowPassFilter, x: float, dt: float) -> float:
    return filt.step(x, dt)


def phase_delay(filt: Union[LowPassFilter, float], f_electrical: float) -> float:
    """Time lag of the filter output at ``f_electrical``: atan(f/fc) / (2 pi f)."""
    fc = filt.cutoff_hz if isinstance(filt, LowPassFilter) else float(filt)
    if not f_electrical > 0:
        raise ValueError(f"f_electrical must be > 0, got {f_electrical!r}")
    return math.atan(f_electrical / fc) / (2.0 * math.pi * f_electrical)


@dataclass(frozen=True)
class DelayLut:
    """Timing-advance table indexed by electrical frequency.

    Lookups interpolate linearly in frequency and clamp outside the table.
    """

    entries: Tuple[Tuple[float, float], ...]

    def __post_init__(self):
        if len(self.entries) < 2:
            raise ValueError("DelayLut needs at least 2 entries")
        freqs = [f for f, _ in self.entries]
        adv = [a for _, a in self.entries]
        if any(f2 <= f1 for f1, f2 in zip(freqs, freqs[1:])):
            raise ValueError("DelayLut frequencies must be strictly increasing")
        if any(a <= 0 for a in adv):
            raise ValueError("DelayLut advances must be > 0")
        if any(a2 >= a1 for a1, a2 in zip(adv, adv[1:])):
            raise ValueError("DelayLut advances must decrease with frequency")
        for f, a in self.entries:
            if 2.0 * math.pi * f * a > math.pi / 2:
                raise ValueError(f"advance at {f} Hz exceeds a quarter period")

    @property
    def frequencies(self) -> List[float]:
        return [f for f, _ in self.entries]

    def lookup(self, f_electrical: float) -> float:
        freqs = self.frequencies
        if f_electrical <= freqs[0]:
            return self.entries[0][1]
        if f_electrical >= freqs[-1]:
            return self.entries[-1][1]
        k = bisect.bisect_right(freqs, f_electrical)
        f0, a0 = self.entries[k - 1]
        f1, a1 = self.entries[k]
        w = (f_electrical - f0) / (f1 - f0)
        return a0 + w * (a1 - a0)

    def to_csv(self, path=None) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["f_hz", "advance_s"])
        for f, a in self.entries:
            w.writerow([repr(float(f)), repr(float(a))])
        text = buf.getvalue()
        if path is not None:
            Path(path).write_text(text, encoding="utf-8")
        return text

    @classmethod
    def from_csv(cls, source) -> "DelayLut":
        """Read from a path or an open text stream."""
        if hasattr(source, "read"):
            text = source.read()
        else:
            text = Path(source).read_text(encoding="utf-8")
        rows = list(csv.reader(io.StringIO(text)))
        if not rows or [c.strip() for c in rows[0]] != ["f_hz", "advance_s"]:
            raise ValueError("LUT CSV must start with header 'f_hz,advance_s'")
        entries = tuple((float(r[0]), float(r[1])) for r in rows[1:] if r)
        return cls(entries)


def build_delay_lut(filt: Union[LowPassFilter, float], f_min: float, f_max: float,
                    n: int) -> DelayLut:
    """Log-spaced table of filter phase delays between f_min and f_max."""
    if not (0 < f_min < f_max):
        raise ValueError(f"need 0 < f_min < f_max, got {f_min!r}, {f_max!r}")
    if int(n) != n or n < 2:
        raise ValueError(f"n must be an integer >= 2, got {n!r}")
    n = int(n)
    ratio = math.log(f_max / f_min)
    freqs = [f_min * math.exp(ratio * k / (n - 1)) for k in range(n)]
    freqs[0], freqs[-1] = f_min, f_max
    return DelayLut(tuple((f, phase_delay(filt, f)) for f in freqs))


def integrate_bemf(accumulator: float, sample: float, dt: float,
                   polarity: Direction) -> float:
    """Rectified back-EMF area since the last zero crossing.

    After a rising crossing the back-EMF is positive, after a falling one
    negative; the polarity flips the sample so the area grows either way.
    Samples on the wrong side of zero contribute nothing.
    """
    rect = sample if polarity is Direction.RISING else -sample
    if rect < 0.0:
        rect = 0.0
    return accumulator + rect * dt


def bemf_area_threshold(ke: float, pole_pairs: int) -> float:
    """Area under one back-EMF ramp from its zero crossing to 30 deg electrical.

    The ramp rises to ke*w over 30 deg, which lasts (pi/6)/(P*w) seconds, so the
    triangle area ke*pi/(12*P) does not depend on speed.
    """
    return ke * math.pi / (12.0 * pole_pairs)


def zcd_compare(v_float: float, reference: float, previous_above: bool) -> Tuple[bool, bool]:
    above = v_float > reference
    return above, above != previous_above


def select_mux(mode: SensingMode) -> Tuple[PaSource, RefSource]:
    if mode is SensingMode.LOW_SPEED_INTEGRATION:
        return PaSource.FILTERED_INTEGRATOR_PATH, RefSource.GROUND
    if mode is SensingMode.HIGH_SPEED_ZCD:
        return PaSource.DIRECT_TERMINAL, RefSource.HALF_VBUS
    raise ValueError(f"unknown sensing mode {mode!r}")


def interpolate_crossing(t0: float, s0: float, t1: float, s1: float) -> float:
    """Time at which the straight line through (t0, s0), (t1, s1) crosses zero."""
    if s0 == s1:
        return t1
    w = s0 / (s0 - s1)
    if w < 0.0:
        w = 0.0
    elif w > 1.0:
        w = 1.0
    return t0 + w * (t1 - t0)


def rectified_area(samples: Sequence[Tuple[float, float]], t_start: float,
                   polarity: Direction) -> float:
    """Trapezoidal area of polarity-rectified samples from ``t_start`` on."""
    area = 0.0
    sign = 1.0 if polarity is Direction.RISING else -1.0
    prev = None
    for t, s in samples:
        s = sign * s
        if s < 0.0:
            s = 0.0
        if prev is not None:
            tp, sp = prev
            if t > t_start:
                if tp < t_start:
                    w = (t_start - tp) / (t - tp)
                    sp = sp + w * (s - sp)
                    tp = t_start
                area += 0.5 * (s + sp) * (t - tp)
        prev = (t, s)
    return area
