"""Fixed-step co-simulation of plant, bridge, sensing, commutation and speed loop.

Time is organised in PWM periods.  At the start of each period the controller
runs once (the control tick): it samples the comparators, schedules
commutations, updates the mode and the duty.  The plant is then advanced
across the period in steps of at most ``dt``, split exactly at the PWM
on/off edge and at any scheduled commutation instant.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import asdict, dataclass, field, fields
from typing import List, Optional, Tuple

from .commutator import (SECTOR_TABLE, CommutatorDiagnostics, ControllerMode, Sector,
                         comp_frequency, event_matches, mode_supervisor, on_zcd_event,
                         openloop_step,
                         sector_for)
from .config import ConstantSpeed, DutySweep, SimConfig, SpeedStep, Startup
from .inverter import PwmConfig, bridge_step, conduction_loss, fet_by_part, switching_loss
from .machine import mechanical_step, shapes, wrap_angle
from .sensing import (Direction, Phase, ZcdEvent, bemf_area_threshold, build_delay_lut,
                      interpolate_crossing, rectified_area, zcd_compare)
from .speed_loop import estimate_speed, pi_update, rad_s_to_rpm, rpm_to_rad_s

_MODE_NAMES = {
    ControllerMode.OPEN_LOOP_STARTUP: "open_loop",
    ControllerMode.CLOSED_LOOP_INTEGRATION: "integration",
    ControllerMode.CLOSED_LOOP_ZCD: "zcd",
}


class SimulationError(RuntimeError):
    pass


class StartupFailure(SimulationError):
    pass


class NonFiniteState(SimulationError):
    def __init__(self, t: float, what: str):
        self.t = t
        super().__init__(f"non-finite {what} at t = {t!r} s")


@dataclass
class TraceRecord:
    t: float
    theta_e: float
    rpm_true: float
    rpm_est: float
    i_a: float
    i_b: float
    i_c: float
    e_a: float
    e_b: float
    e_c: float
    v_a: float
    v_b: float
    v_c: float
    v_n: float
    sector: int
    mode: str
    duty: float
    zcd_a: bool
    zcd_b: bool
    zcd_c: bool
    p_cond: float
    p_sw: float


TRACE_FIELDS = tuple(f.name for f in fields(TraceRecord))


@dataclass(frozen=True)
class CommutationRecord:
    t: float
    sector: int             # sector entered
    mode: str               # mode that produced the commutation
    trigger: str            # open_loop | resync | timer | area | forced
    angle_error_deg: float  # true rotor angle minus ideal sector boundary
    event: Optional[ZcdEvent] = None


@dataclass
class SummaryReport:
    scenario: str
    t_end: float
    commutations: int = 0
    closed_loop_commutations: int = 0
    discarded_events: int = 0
    missed_commutations: int = 0
    handover_time: Optional[float] = None
    mode_transitions: List[Tuple[float, str, str]] = field(default_factory=list)
    target_rpm: Optional[float] = None
    settling_time: Optional[float] = None
    final_rpm_est: float = 0.0
    steady_state_error_pct: Optional[float] = None
    angle_error_mean_deg: dict = field(default_factory=dict)
    angle_error_max_deg: dict = field(default_factory=dict)
    max_rpm_true: float = 0.0
    max_commutation_rate_hz: float = 0.0
    comp_budget_hz: float = 0.0
    mean_p_cond: float = 0.0
    mean_p_sw: float = 0.0
    commutation_log: List[CommutationRecord] = field(default_factory=list, repr=False)

    def to_dict(self) -> dict:
        d = asdict(self)
        d.pop("commutation_log")
        d["mode_transitions"] = [list(x) for x in self.mode_transitions]
        return d

    def to_text(self) -> str:
        lines = [f"scenario               {self.scenario}",
                 f"simulated time         {self.t_end:.6g} s",
                 f"commutations           {self.commutations} "
                 f"({self.closed_loop_commutations} closed loop)",
                 f"missed commutations    {self.missed_commutations}",
                 f"discarded ZCD events   {self.discarded_events}"]
        if self.handover_time is not None:
            lines.append(f"closed loop from       {self.handover_time:.6g} s")
        for t, a, b in self.mode_transitions:
            lines.append(f"mode change            {t:.6g} s  {a} -> {b}")
        if self.target_rpm is not None:
            lines.append(f"target                 {self.target_rpm:.6g} rpm")
            settle = "never" if self.settling_time is None else f"{self.settling_time:.4g} s"
            lines.append(f"settling time (2 %)    {settle}")
        lines.append(f"final speed estimate   {self.final_rpm_est:.6g} rpm")
        if self.steady_state_error_pct is not None:
            lines.append(f"steady-state error     {self.steady_state_error_pct:.3g} %")
        for mode in sorted(self.angle_error_mean_deg):
            lines.append(f"angle error [{mode}]".ljust(23) +
                         f"mean {self.angle_error_mean_deg[mode]:.3g} deg, "
                         f"max {self.angle_error_max_deg[mode]:.3g} deg")
        lines.append(f"max commutation rate   {self.max_commutation_rate_hz:.6g} Hz "
                     f"(budget {self.comp_budget_hz:.6g} Hz)")
        lines.append(f"mean losses            cond {self.mean_p_cond:.4g} W, "
                     f"sw {self.mean_p_sw:.4g} W")
        return "\n".join(lines)


def _setpoint_rpm(scenario, t: float) -> Optional[float]:
    if isinstance(scenario, SpeedStep):
        return scenario.to_rpm if t >= scenario.step_time else scenario.from_rpm
    if isinstance(scenario, ConstantSpeed):
        return scenario.rpm
    return None


class Simulation:
    """One scenario run.  Create, call :meth:`run`, read ``trace`` and ``summary``.

    The low-speed sensing path filters a reconstructed back-EMF per phase:
    the floating phase is measured as ``v_f - (v_high + v_low) / 2`` during
    PWM on-time, the two driven phases are modelled as the +/- flat top at the
    estimated speed.  The result is referenced to the mean of the three.
    """

    def __init__(self, config: SimConfig):
        self.cfg = config
        self.scenario = config.scenario.scenario
        self.params = config.motor
        self.fet = None
        if not config.inverter.ideal_switches:
            try:
                self.fet = fet_by_part(config.inverter.fet)
            except KeyError:
                raise ValueError(f"inverter.fet: unknown part {config.inverter.fet!r}") from None
        self.lut = build_delay_lut(config.sensing.cutoff_hz, config.sensing.lut_f_min,
                                   config.sensing.lut_f_max, config.sensing.lut_n)
        self.ramp = config.ramp.ramp
        self.thresholds = config.sensing.thresholds
        self.area_threshold = bemf_area_threshold(self.params.ke, self.params.pole_pairs)
        self.t_pwm = 1.0 / config.pwm.f_sw
        self.trace: List[TraceRecord] = []
        self.diag = CommutatorDiagnostics()
        self.summary = SummaryReport(scenario=self.scenario.name, t_end=config.t_end)

        # plant
        self.theta = 0.0
        self.omega = 0.0
        self.cur = [0.0, 0.0, 0.0]

        # sensing
        self.filt = [0.0, 0.0, 0.0]
        self.held = 0.0          # last valid floating-phase measurement
        # (time, sector, v_float - v_bus/2, bemf estimate) taken at the end of the on-time
        self.on_sample: Optional[Tuple[float, int, float, float]] = None
        self.prev_sample: Optional[Tuple[float, float]] = None

        # controller
        self.mode = ControllerMode.OPEN_LOOP_STARTUP
        self.sector = 0
        self.duty = self.ramp.duty_start
        self.pi_integral = self.ramp.duty_start
        self.omega_est = 0.0
        self.intervals: deque = deque(maxlen=6)
        self.last_comm = 0.0
        self.last_interval = 1.0 / (6.0 * self.ramp.f_start)
        self.blank_until = 0.0
        self.pending: Optional[float] = None
        self.pending_trigger = "timer"
        self.sector_event: Optional[ZcdEvent] = None
        self.raw_event: Optional[ZcdEvent] = None   # crossing seen by the area integrator
        self.area = 0.0
        self.samples: List[Tuple[float, float]] = []
        self.closed_loop_start: Optional[float] = None

    # -- helpers -------------------------------------------------------------

    def _emfs(self):
        sa, sb, sc = shapes(self.params.pole_pairs * self.theta)
        k = self.params.ke * self.omega
        return (k * sa, k * sb, k * sc)

    def _sense(self, v_bus: float):
        """Terminal and star-point voltages seen at the start of the on-time."""
        row = SECTOR_TABLE[self.sector]
        emfs = self._emfs()
        rds = self.fet.rds_on if self.fet is not None else 0.0
        pwm_on = self.duty > 0.0
        volts = [0.0, 0.0, 0.0]
        conn = [False, False, False]
        for x in range(3):
            i = self.cur[x]
            if x == row.low:
                volts[x] = -i * rds
                conn[x] = True
            elif x == row.high and pwm_on:
                volts[x] = v_bus - i * rds
                conn[x] = True
            elif i > 0.0:
                volts[x] = 0.0
                conn[x] = True
            elif i < 0.0:
                volts[x] = v_bus
                conn[x] = True
        n = sum(conn)
        v_n = sum(volts[x] - emfs[x] for x in range(3) if conn[x]) / n if n else 0.0
        for x in range(3):
            if not conn[x]:
                volts[x] = min(max(v_n + emfs[x], 0.0), v_bus)
        return volts, v_n, emfs

    def _model_omega(self, t: float) -> float:
        if self.mode is ControllerMode.OPEN_LOOP_STARTUP:
            return 2.0 * math.pi * self.ramp.frequency(t) / self.params.pole_pairs
        return self.omega_est

    def _theta_e_deg(self) -> float:
        return math.degrees(wrap_angle(self.params.pole_pairs * self.theta))

    def _log_commutation(self, t: float, trigger: str, event=None):
        ideal = Sector(self.sector).start_angle_deg
        err = (self._theta_e_deg() - ideal + 180.0) % 360.0 - 180.0
        self.summary.commutation_log.append(
            CommutationRecord(t, self.sector, _MODE_NAMES[self.mode], trigger, err, event))

    def _new_interval(self, t: float):
        interval = t - self.last_comm
        if interval > 0.0:
            self.last_interval = interval
            if self.mode is not ControllerMode.OPEN_LOOP_STARTUP:
                # average over one electrical revolution: rising and falling
                # sectors are not detected with the same bias
                self.intervals.append(interval)
                mean = sum(self.intervals) / len(self.intervals)
                self.omega_est = estimate_speed(mean, self.params.pole_pairs)
        self.last_comm = t

    def _enter_sector(self, t: float, sector: int):
        prev = SECTOR_TABLE[self.sector]
        self.sector = sector
        # the phase that just went floating was driven: start it from its flat top
        k = self.params.ke * self._model_omega(t)
        self.held = k if SECTOR_TABLE[sector].floating == prev.high else -k
        # the filtered path holds its input while the terminal is clamped, so
        # blanking only matters for the closed-loop comparators
        self.blank_until = t
        if self.mode is not ControllerMode.OPEN_LOOP_STARTUP:
            self.blank_until += self.cfg.sensing.blanking_fraction * self.last_interval
        self.pending = None
        self.pending_trigger = "timer"
        self.sector_event = None
        self.raw_event = None
        self.area = 0.0
        self.samples = []
        self.prev_sample = None

    def _commutate(self, t: float, trigger: str):
        event = self.sector_event
        if event is None and trigger == "area":
            event = self.raw_event
        self._new_interval(t)
        self._enter_sector(t, (self.sector + 1) % 6)
        self._log_commutation(t, trigger, event)

    def _set_mode(self, t: float, new_mode: ControllerMode):
        if new_mode is not self.mode:
            self.diag.transitions.append((t, self.mode, new_mode))
            self.mode = new_mode
            self.prev_sample = None

    def _advance_lut(self) -> float:
        f_e = self.omega_est * self.params.pole_pairs / (2.0 * math.pi)
        return self.lut.lookup(f_e)

    def _filtered_crossing(self, t: float) -> Optional[ZcdEvent]:
        """Zero crossing of the floating channel's filter output since the last tick."""
        row = SECTOR_TABLE[self.sector]
        s = self.filt[row.floating]
        event = None
        if self.prev_sample is not None:
            tp, sp = self.prev_sample
            above, crossed = zcd_compare(s, 0.0, sp > 0.0)
            if crossed:
                tc = interpolate_crossing(tp, sp, t, s)
                if tc >= self.blank_until:
                    event = ZcdEvent(tc, row.floating,
                                     Direction.RISING if above else Direction.FALLING)
        self.prev_sample = (t, s)
        return event

    # -- control tick ----------------------------------------------------------

    def _open_loop_tick(self, t: float):
        sec, duty = openloop_step(self.ramp, t)
        if sec.index != self.sector:
            self._new_interval(t)
            self._enter_sector(t, sec.index)
            self._log_commutation(t, "open_loop")
        self.duty = duty
        event = self._filtered_crossing(t)
        if t < self.ramp.ramp_time:
            return
        if t > self.ramp.ramp_time + self.cfg.ramp.timeout:
            raise StartupFailure(
                f"no back-EMF zero crossing found within {self.cfg.ramp.timeout} s "
                f"after the open-loop ramp (t = {t:.6g} s)")
        if event is None or not event_matches(event, Sector(self.sector)):
            return
        self.summary.handover_time = t
        self.closed_loop_start = t
        self.omega_est = 2.0 * math.pi * self.ramp.f_end / self.params.pole_pairs
        self.last_interval = 1.0 / (6.0 * self.ramp.f_end)
        self.intervals.clear()
        self.intervals.append(self.last_interval)
        self._set_mode(t, mode_supervisor(self.mode, self.omega_est,
                                          self.params.ke * self.omega_est,
                                          self.thresholds, zcp_detected=True))
        self.prev_sample = (t, self.filt[SECTOR_TABLE[self.sector].floating])
        advance = self._advance_lut()
        self.sector_event = event
        self.pending = on_zcd_event(event, Sector(self.sector), self.last_interval, advance)
        # the previous commutation is taken to sit half an interval before the ZCP
        self.last_comm = event.time - advance - 0.5 * self.last_interval
        self.pi_integral = self.duty

    def _closed_loop_tick(self, t: float):
        row = SECTOR_TABLE[self.sector]
        integrating = self.mode is ControllerMode.CLOSED_LOOP_INTEGRATION
        # on-time sample of the floating terminal, if the last period produced a clean one
        sample = self.on_sample
        self.on_sample = None
        if sample is not None and sample[1] != self.sector:
            sample = None

        if integrating:
            if sample is not None and sample[0] >= self.blank_until:
                self.samples.append((sample[0], sample[3]))
            event = self._filtered_crossing(t)
        else:
            event = self._direct_crossing(sample, row)

        if event is not None and self.sector_event is None:
            advance = self._advance_lut() if integrating else 0.0
            when = on_zcd_event(event, Sector(self.sector), self.last_interval,
                                advance, self.diag)
            if when is not None and (self.pending is None or when < self.pending):
                self.sector_event = event
                self.pending = when
                self.pending_trigger = "timer"
            elif when is not None:
                self.sector_event = event

        if integrating:
            self._area_trigger(t, row)

        if self.pending is None and t - self.last_comm > 2.0 * self.last_interval:
            self.summary.missed_commutations += 1
            self._commutate(t, "forced")
        elif self.pending is not None and self.pending <= t:
            self._commutate(t, self.pending_trigger)

        bemf_peak = self.params.ke * self.omega_est
        self._set_mode(t, mode_supervisor(self.mode, self.omega_est, bemf_peak,
                                          self.thresholds))

    def _direct_crossing(self, sample, row) -> Optional[ZcdEvent]:
        """Floating terminal against v_bus/2, sampled at the end of the on-time.

        Rail-clamped samples never get here, so samples inside the blanking
        window still serve as the interpolation reference; a crossing found
        inside the window is dated at its end.  If the first sample after
        blanking is already past the crossing, the ZCP was early and the event
        is dated at that sample.
        """
        if sample is None:
            return None
        ts, s = sample[0], sample[2]
        event = None
        if self.prev_sample is not None:
            tp, sp = self.prev_sample
            above, crossed = zcd_compare(s, 0.0, sp > 0.0)
            if crossed and ts >= self.blank_until:
                tc = max(interpolate_crossing(tp, sp, ts, s), self.blank_until)
                event = ZcdEvent(tc, row.floating,
                                 Direction.RISING if above else Direction.FALLING)
        elif ts >= self.blank_until and (s > 0.0) == (row.direction is Direction.RISING):
            event = ZcdEvent(ts, row.floating, row.direction)
        self.prev_sample = (ts, s)
        return event

    def _area_trigger(self, t: float, row):
        """Commutate where the rectified floating-phase BEMF area reaches the threshold.

        Rectification keeps the area at zero until the back-EMF has crossed
        zero, so the integral effectively starts at the ZCP even when the
        crossing itself fell inside the blanking window.
        """
        if len(self.samples) < 2 or self.samples[-1][0] > t or self.samples[-1][0] <= t - self.t_pwm:
            return
        sign = 1.0 if row.direction is Direction.RISING else -1.0
        (t0, s0), (t1, s1) = self.samples[-2], self.samples[-1]
        r0, r1 = max(sign * s0, 0.0), max(sign * s1, 0.0)
        if self.raw_event is None and r1 > 0.0:
            tc = interpolate_crossing(t0, sign * s0, t1, sign * s1) if r0 == 0.0 else t0
            self.raw_event = ZcdEvent(tc, row.floating, row.direction)
        self.area += 0.5 * (r0 + r1) * (t1 - t0)
        remaining = self.area_threshold - self.area
        if remaining <= 0.0:
            when = t
        else:
            # extrapolate the last slope: area ahead is r1*tau + slope*tau^2/2
            slope = (r1 - r0) / (t1 - t0) if t1 > t0 else 0.0
            if slope > 0.0:
                tau = (-r1 + math.sqrt(r1 * r1 + 2.0 * slope * remaining)) / slope
            elif r1 > 0.0:
                tau = remaining / r1
            else:
                return
            if tau > self.t_pwm:
                return
            when = t + tau
        if self.pending is None or when < self.pending:
            self.pending = when
            self.pending_trigger = "area"

    def _duty_command(self, t: float) -> float:
        cfg = self.cfg
        step = cfg.pwm.duty_slew * self.t_pwm
        lo, hi = self.duty - step, self.duty + step
        setpoint = _setpoint_rpm(self.scenario, t)
        if setpoint is not None:
            sp = rpm_to_rad_s(setpoint)
            duty, integral = pi_update(cfg.gains, sp, self.omega_est, self.t_pwm,
                                       self.pi_integral)
            # the slew limit counts as saturation for the anti-windup rule
            if duty > hi:
                duty = hi
                if sp > self.omega_est:
                    integral = self.pi_integral
            elif duty < lo:
                duty = lo
                if sp < self.omega_est:
                    integral = self.pi_integral
            self.pi_integral = integral
            return duty
        if isinstance(self.scenario, DutySweep):
            span = max(cfg.t_end - self.closed_loop_start, self.t_pwm)
            w = min(max((t - self.closed_loop_start) / span, 0.0), 1.0)
            target = self.scenario.duty_start + w * (self.scenario.duty_end
                                                     - self.scenario.duty_start)
        else:
            target = cfg.pwm.duty
        return min(max(target, lo), hi)

    # -- main loop -------------------------------------------------------------

    def run(self):
        cfg = self.cfg
        p = self.params
        r, l = p.phase_resistance, p.phase_inductance
        ke, pp = p.ke, p.pole_pairs
        v_bus = cfg.v_bus
        rds = self.fet.rds_on if self.fet is not None else 0.0
        dt = cfg.dt
        t_pwm = self.t_pwm
        alpha_per_s = 2.0 * math.pi * cfg.sensing.cutoff_hz
        n_periods = int(math.ceil(cfg.t_end / t_pwm - 1e-9))
        decimate = max(1, int(round(cfg.pwm.f_sw / cfg.trace_rate)))
        pwm_cfg = PwmConfig(cfg.pwm.f_sw, 0.5)
        filt = self.filt
        cur = self.cur

        for k in range(n_periods):
            t = k * t_pwm
            if self.mode is ControllerMode.OPEN_LOOP_STARTUP:
                self._open_loop_tick(t)
            else:
                self._closed_loop_tick(t)
            if self.mode is not ControllerMode.OPEN_LOOP_STARTUP:
                self.duty = self._duty_command(t)
            volts, v_n, emfs = self._sense(v_bus)

            if k % decimate == 0:
                self._record(t, volts, v_n, emfs, v_bus, pwm_cfg)

            # plant and sensing filter across one PWM period
            t_on = self.duty * t_pwm
            k_model = ke * self._model_omega(t)
            offset = 0.0
            while offset < t_pwm:
                seg_end = t_on if offset < t_on else t_pwm
                pwm_on = offset < t_on
                comm_due = False
                if self.pending is not None:
                    rel = self.pending - t
                    if offset < rel < seg_end:
                        seg_end = rel
                        comm_due = True
                    elif rel <= offset:
                        self._commutate(t + offset, self.pending_trigger)
                        continue
                row = SECTOR_TABLE[self.sector]
                hi_x, lo_x, fl_x = row.high, row.low, row.floating
                while offset < seg_end:
                    h = seg_end - offset
                    if h > dt:
                        h = dt
                        nxt = offset + dt
                    else:
                        nxt = seg_end
                    sa, sb, sc = shapes(pp * self.theta)
                    kw = ke * self.omega
                    e = (kw * sa, kw * sb, kw * sc)
                    new_i, _, vt = bridge_step(r, l, h, cur, e, v_bus, rds,
                                               hi_x, lo_x, pwm_on)
                    cur[0], cur[1], cur[2] = new_i
                    torque = ke * (sa * new_i[0] + sb * new_i[1] + sc * new_i[2])
                    self.theta, self.omega = mechanical_step(p, self.theta, self.omega,
                                                             torque, h)
                    if pwm_on and 0.0 < vt[fl_x] < v_bus:
                        self.held = vt[fl_x] - 0.5 * (vt[hi_x] + vt[lo_x])
                    rec = [0.0, 0.0, 0.0]
                    rec[hi_x] = k_model
                    rec[lo_x] = -k_model
                    rec[fl_x] = self.held
                    mean = (rec[0] + rec[1] + rec[2]) / 3.0
                    a = alpha_per_s * h
                    filt[0] += a * (rec[0] - mean - filt[0])
                    filt[1] += a * (rec[1] - mean - filt[1])
                    filt[2] += a * (rec[2] - mean - filt[2])
                    offset = nxt
                if pwm_on and offset >= t_on and 0.0 < vt[fl_x] < v_bus:
                    self.on_sample = (t + offset, self.sector, vt[fl_x] - 0.5 * v_bus,
                                      vt[fl_x] - 0.5 * (vt[hi_x] + vt[lo_x]))
                if comm_due and self.pending is not None and offset >= self.pending - t:
                    self._commutate(t + offset, self.pending_trigger)
            if not (math.isfinite(self.omega) and math.isfinite(cur[0])
                    and math.isfinite(cur[1]) and math.isfinite(cur[2])):
                raise NonFiniteState(t + t_pwm, "plant state")

        self._finish()
        return self.trace, self.summary

    def _record(self, t, volts, v_n, emfs, v_bus, pwm_cfg):
        row = SECTOR_TABLE[self.sector]
        if self.mode is ControllerMode.CLOSED_LOOP_ZCD:
            flags = [v > 0.5 * v_bus for v in volts]
        else:
            flags = [y > 0.0 for y in self.filt]
        if self.fet is not None:
            i_cond = abs(self.cur[row.high])
            p_cond = 2.0 * conduction_loss(i_cond, self.fet)
            p_sw = (switching_loss(v_bus, i_cond, self.fet, pwm_cfg)
                    if 0.0 < self.duty < 1.0 else 0.0)
        else:
            p_cond = p_sw = 0.0
        self.trace.append(TraceRecord(
            t=t, theta_e=self._theta_e_deg(),
            rpm_true=rad_s_to_rpm(self.omega), rpm_est=rad_s_to_rpm(self.omega_est),
            i_a=self.cur[0], i_b=self.cur[1], i_c=self.cur[2],
            e_a=emfs[0], e_b=emfs[1], e_c=emfs[2],
            v_a=volts[0], v_b=volts[1], v_c=volts[2], v_n=v_n,
            sector=self.sector, mode=_MODE_NAMES[self.mode], duty=self.duty,
            zcd_a=flags[0], zcd_b=flags[1], zcd_c=flags[2],
            p_cond=p_cond, p_sw=p_sw))

    def _finish(self):
        s = self.summary
        log = s.commutation_log
        s.commutations = len(log)
        closed = [c for c in log if c.trigger in ("timer", "area", "forced")]
        s.closed_loop_commutations = len(closed)
        s.discarded_events = self.diag.discarded_events
        s.mode_transitions = [(t, _MODE_NAMES[a], _MODE_NAMES[b])
                              for t, a, b in self.diag.transitions]
        for mode in ("integration", "zcd"):
            errs = [abs(c.angle_error_deg) for c in closed if c.mode == mode]
            if errs:
                s.angle_error_mean_deg[mode] = sum(errs) / len(errs)
                s.angle_error_max_deg[mode] = max(errs)
        # rate over one electrical revolution, matching events-per-second budgets
        spans = [b.t - a.t for a, b in zip(closed, closed[6:]) if b.t > a.t]
        if spans:
            s.max_commutation_rate_hz = 6.0 / min(spans)
        if self.trace:
            s.max_rpm_true = max(rec.rpm_true for rec in self.trace)
            s.mean_p_cond = sum(rec.p_cond for rec in self.trace) / len(self.trace)
            s.mean_p_sw = sum(rec.p_sw for rec in self.trace) / len(self.trace)
        s.comp_budget_hz = comp_frequency(max(s.max_rpm_true, 0.0), self.params.pole_pairs,
                                          self.cfg.phi)
        target = None
        t_ref = 0.0
        if isinstance(self.scenario, SpeedStep):
            target, t_ref = self.scenario.to_rpm, self.scenario.step_time
        elif isinstance(self.scenario, ConstantSpeed):
            target, t_ref = self.scenario.rpm, (s.handover_time or 0.0)
        if self.trace:
            tail = self.trace[int(0.8 * len(self.trace)):]
            s.final_rpm_est = sum(rec.rpm_est for rec in tail) / len(tail)
        if target is not None and self.trace:
            s.target_rpm = target
            s.settling_time = settling_time(self.trace, target, t_ref, 0.02)
            if target > 0:
                s.steady_state_error_pct = 100.0 * (s.final_rpm_est - target) / target


def settling_time(trace, target: float, t_ref: float, band: float) -> Optional[float]:
    """Time after ``t_ref`` from which rpm_est stays within ``band`` of ``target``."""
    last_out = None
    seen = False
    for rec in trace:
        if rec.t < t_ref:
            continue
        seen = True
        if abs(rec.rpm_est - target) > band * target:
            last_out = rec.t
    if not seen:
        return None
    if last_out is None:
        return 0.0
    if last_out >= trace[-1].t:
        return None
    return last_out - t_ref


def run_scenario(config: SimConfig):
    """Run one scenario; returns ``(trace, summary)``."""
    sim = Simulation(config)
    return sim.run()
