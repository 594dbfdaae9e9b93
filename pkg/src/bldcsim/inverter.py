"""Six-switch three-phase bridge: leg states, terminal voltages and MOSFET losses.

PWM is applied to the high-side switch only; the low-side switch of the
conducting pair stays on and the chopped leg freewheels through its low-side
body diode (ideal, 0 V drop).  Dead time is not modelled.
"""

from __future__ import annotations

import csv
import enum
import io
from dataclasses import dataclass
from decimal import Decimal
from importlib import resources
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

from .commutator import SECTOR_TABLE, Sector
from .machine import BemfTriple, electrical_step
from .sensing import Phase

FET_DB_COLUMNS = ("part_no", "vds_max_v", "id_max_a", "rds_on_mohm", "rds_test_current_a",
                  "vgate_v", "qgate_nc", "t_rise_ns", "t_fall_ns", "cost")


@dataclass(frozen=True)
class FetSpec:
    part_no: str
    vds_max: float
    id_max: float
    rds_on: float
    rds_test_current: float
    vgate: float
    qgate: float
    t_rise: float = 8e-9
    t_fall: float = 8e-9
    cost: Decimal = Decimal("0")

    def __post_init__(self):
        if not self.rds_on > 0:
            raise ValueError(f"{self.part_no}: rds_on must be > 0")
        if self.qgate < 0 or self.t_rise < 0 or self.t_fall < 0:
            raise ValueError(f"{self.part_no}: qgate and switching times must be >= 0")
        if not self.id_max > 0 or not self.vds_max > 0:
            raise ValueError(f"{self.part_no}: id_max and vds_max must be > 0")


@dataclass(frozen=True)
class PwmConfig:
    f_sw: float = 20000.0
    duty: float = 0.3

    def __post_init__(self):
        if not self.f_sw > 0:
            raise ValueError("f_sw must be > 0")
        if not 0.0 <= self.duty <= 1.0:
            raise ValueError("duty must be in [0, 1]")


class Leg(enum.Enum):
    HIGH_ON = "high_on"
    LOW_ON = "low_on"
    FLOATING = "floating"


class PwmPhase(enum.Enum):
    ON = "on"
    OFF = "off"


@dataclass(frozen=True)
class LegState:
    a: Leg
    b: Leg
    c: Leg

    def __post_init__(self):
        legs = (self.a, self.b, self.c)
        if sorted(l.value for l in legs) != ["floating", "high_on", "low_on"]:
            raise ValueError(f"not a six-step leg state: {legs}")

    def __getitem__(self, phase: int) -> Leg:
        return (self.a, self.b, self.c)[phase]

    def legs(self) -> Tuple[Leg, Leg, Leg]:
        return (self.a, self.b, self.c)

    def index_of(self, leg: Leg) -> int:
        return self.legs().index(leg)


def apply_commutation_step(sector: Sector) -> LegState:
    row = SECTOR_TABLE[sector.index]
    legs = [Leg.FLOATING] * 3
    legs[row.high] = Leg.HIGH_ON
    legs[row.low] = Leg.LOW_ON
    return LegState(*legs)


def _neutral(volts, emfs, connected) -> float:
    n = 0
    acc = 0.0
    for x in range(3):
        if connected[x]:
            n += 1
            acc += volts[x] - emfs[x]
    return acc / n if n else 0.0


def terminal_voltages(leg_state: LegState, pwm_phase: PwmPhase, v_bus: float,
                      bemf: BemfTriple, currents: Sequence[float],
                      fet: Optional[FetSpec]) -> Tuple[Tuple[float, float, float], float]:
    """Instantaneous terminal voltages and star-point voltage.

    ``currents`` flow from the bridge into the motor.  A floating leg that still
    carries current is clamped by its body diodes; one carrying none sits at
    ``v_n + e``.  ``fet=None`` means ideal switches.
    """
    if not isinstance(leg_state, LegState):
        raise TypeError("leg_state must be a LegState")
    rds = fet.rds_on if fet is not None else 0.0
    emfs = bemf.as_tuple()
    volts = [0.0, 0.0, 0.0]
    connected = [False, False, False]
    for x, leg in enumerate(leg_state.legs()):
        i = currents[x]
        switched_on = leg is Leg.LOW_ON or (leg is Leg.HIGH_ON and pwm_phase is PwmPhase.ON)
        if switched_on:
            volts[x] = v_bus - i * rds if leg is Leg.HIGH_ON else -i * rds
            connected[x] = True
        elif i > 0.0:
            volts[x] = 0.0
            connected[x] = True
        elif i < 0.0:
            volts[x] = v_bus
            connected[x] = True
    v_n = _neutral(volts, emfs, connected)
    for x in range(3):
        if not connected[x]:
            v = v_n + emfs[x]
            volts[x] = min(max(v, 0.0), v_bus)
    return (volts[0], volts[1], volts[2]), v_n


def bridge_step(r: float, l: float, dt: float, currents: Sequence[float],
                emfs: Sequence[float], v_bus: float, rds: float,
                high: int, low: int, pwm_on: bool):
    """Advance the winding currents by ``dt`` for one sector/PWM configuration.

    Handles the switch-off transients: a leg with no switch on conducts through
    a body diode while it carries current and goes open once that current
    reaches zero.  Returns ``(new_currents, v_n, terminal_volts)``.
    """
    fixed = [0.0, 0.0, 0.0]
    open_legs = [False, False, False]
    diode = [False, False, False]
    for x in range(3):
        i = currents[x]
        if x == low:
            fixed[x] = -i * rds
        elif x == high and pwm_on:
            fixed[x] = v_bus - i * rds
        elif i > 0.0:
            diode[x] = True
        elif i < 0.0:
            fixed[x] = v_bus
            diode[x] = True
        else:
            open_legs[x] = True

    new_i, v_n, volts = electrical_step(r, l, dt, currents, emfs, fixed, open_legs)
    redo = False
    for x in range(3):
        if diode[x] and new_i[x] * currents[x] <= 0.0:
            # diode current would reverse: the leg opens at zero current
            open_legs[x] = True
            diode[x] = False
            redo = True
    if redo:
        new_i, v_n, volts = electrical_step(r, l, dt, currents, emfs, fixed, open_legs)
    redo = False
    for x in range(3):
        if open_legs[x] and currents[x] == 0.0:
            if volts[x] > v_bus:
                fixed[x] = v_bus
                open_legs[x] = False
                redo = True
            elif volts[x] < 0.0:
                fixed[x] = 0.0
                open_legs[x] = False
                redo = True
    if redo:
        new_i, v_n, volts = electrical_step(r, l, dt, currents, emfs, fixed, open_legs)
    return new_i, v_n, volts


def conduction_loss(i_rms: float, fet: FetSpec) -> float:
    if i_rms < 0:
        raise ValueError("i_rms must be >= 0")
    return i_rms * i_rms * fet.rds_on


def gate_loss(fet: FetSpec, f_sw: float) -> float:
    return fet.qgate * fet.vgate * f_sw


def transition_loss(v_ds: float, i_switched: float, fet: FetSpec, f_sw: float) -> float:
    # triangular V-I overlap during each edge
    return 0.5 * v_ds * i_switched * (fet.t_rise + fet.t_fall) * f_sw


def switching_loss(v_ds: float, i_switched: float, fet: FetSpec, pwm: PwmConfig) -> float:
    """Rise + fall transition loss plus gate-charge loss for one switch."""
    if v_ds < 0 or i_switched < 0:
        raise ValueError("v_ds and i_switched must be >= 0")
    return transition_loss(v_ds, i_switched, fet, pwm.f_sw) + gate_loss(fet, pwm.f_sw)


# -- FET database -----------------------------------------------------------

def _fet_from_row(row: dict) -> FetSpec:
    return FetSpec(
        part_no=row["part_no"].strip(),
        vds_max=float(row["vds_max_v"]),
        id_max=float(row["id_max_a"]),
        rds_on=float(row["rds_on_mohm"]) * 1e-3,
        rds_test_current=float(row["rds_test_current_a"]),
        vgate=float(row["vgate_v"]),
        qgate=float(row["qgate_nc"]) * 1e-9,
        t_rise=float(row["t_rise_ns"]) * 1e-9,
        t_fall=float(row["t_fall_ns"]) * 1e-9,
        cost=Decimal(row["cost"].strip()),
    )


def parse_fet_db(text: str) -> List[FetSpec]:
    """Parse the FET CSV.  Lines starting with '#' before the header are notes."""
    lines = [ln for ln in text.splitlines() if not ln.lstrip().startswith("#")]
    reader = csv.DictReader(io.StringIO("\n".join(lines)))
    if tuple(c.strip() for c in (reader.fieldnames or ())) != FET_DB_COLUMNS:
        raise ValueError(f"FET database header must be {','.join(FET_DB_COLUMNS)}")
    fets = []
    for lineno, row in enumerate(reader, start=2):
        try:
            fets.append(_fet_from_row(row))
        except (ValueError, TypeError, ArithmeticError) as exc:
            raise ValueError(f"FET database row {lineno}: {exc}") from exc
    return fets


def load_fet_db(path=None) -> List[FetSpec]:
    """Load a FET database CSV; without a path, the bundled parts."""
    if path is None:
        text = resources.files("bldcsim").joinpath("data/fets.csv").read_text(encoding="utf-8")
    else:
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as exc:
            raise OSError(f"{path}: {exc.strerror or exc}") from exc
    return parse_fet_db(text)


def fet_by_part(part_no: str, fets: Optional[Sequence[FetSpec]] = None) -> FetSpec:
    for fet in fets if fets is not None else load_fet_db():
        if fet.part_no == part_no:
            return fet
    raise KeyError(part_no)


def fets_to_csv(fets: Sequence[FetSpec]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(FET_DB_COLUMNS)
    for f in fets:
        w.writerow([f.part_no, repr(f.vds_max), repr(f.id_max), repr(f.rds_on * 1e3),
                    repr(f.rds_test_current), repr(f.vgate), repr(f.qgate * 1e9),
                    repr(f.t_rise * 1e9), repr(f.t_fall * 1e9), str(f.cost)])
    return buf.getvalue()
