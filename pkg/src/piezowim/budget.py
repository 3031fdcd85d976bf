"""Energy budget: rectifier idealization, state-of-charge ledger, verdict.

The harvesting chain is reduced to its accounting skeleton. A full bridge
plus series diode conducts only while the rectified source voltage clears
three diode drops and the battery voltage; the battery is a constant-voltage
sink over one trace, so charging power is battery voltage times charging
current, with the current limited by the source impedance of the
piezoelectric stack. The duty-cycle simulator is a coulomb-counting ledger
over alternating charging and monitoring segments, piecewise linear in time
and split exactly at saturation crossings, so its books close to roundoff.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "RectifierSpec",
    "BatterySpec",
    "DutyCycleSpec",
    "SoCTrace",
    "DutyCycleResult",
    "capacitive_source_impedance",
    "rectified_current",
    "rectify_trace",
    "simulate_duty_cycle",
    "break_even_rate",
]

SECONDS_PER_DAY = 86400.0


@dataclass(frozen=True)
class RectifierSpec:
    """Diode bookkeeping for the full-bridge-plus-series-diode path."""

    diode_drop: float = 0.7  # V per conducting diode
    bridge_diodes: int = 2  # diodes conducting at any instant in the bridge
    series_diode: int = 1

    def __post_init__(self):
        if self.diode_drop < 0.0:
            raise ValueError(f"diode_drop must be >= 0, got {self.diode_drop!r}")
        if self.bridge_diodes < 0 or self.series_diode < 0:
            raise ValueError("diode counts must be >= 0")

    @property
    def total_drop(self) -> float:
        """Voltage headroom eaten by diodes on the conduction path."""
        return (self.bridge_diodes + self.series_diode) * self.diode_drop


@dataclass(frozen=True)
class BatterySpec:
    """Storage pack with an affine state-of-charge to voltage map."""

    capacity: float = 2.0  # A h
    nominal_V: float = 4.8
    v_full: float = 5.0
    v_empty: float = 4.6
    charge_eff: float = 0.85

    def __post_init__(self):
        if self.capacity <= 0.0:
            raise ValueError(f"capacity must be positive, got {self.capacity!r}")
        if not (self.v_full > self.v_empty):
            raise ValueError("v_full must exceed v_empty")
        if not (0.0 < self.charge_eff <= 1.0):
            raise ValueError(f"charge_eff must lie in (0, 1], got {self.charge_eff!r}")

    @property
    def capacity_J(self) -> float:
        return self.capacity * 3600.0 * self.nominal_V

    def voltage(self, soc):
        """Terminal voltage at state of charge `soc` (affine map)."""
        return self.v_empty + np.asarray(soc, dtype=float) * (self.v_full - self.v_empty)


@dataclass(frozen=True)
class DutyCycleSpec:
    """Power draw of the two operating modes and the daily event rate."""

    monitor_power: float = 0.125  # W while the DAQ records
    monitor_duration: float = 10.0  # s per trigger
    sleep_power: float = 0.03e-3  # W in standby (trigger sensor folded in)
    events_per_day: float = 0.0

    def __post_init__(self):
        if min(self.monitor_power, self.monitor_duration, self.sleep_power, self.events_per_day) < 0.0:
            raise ValueError("duty-cycle parameters must be non-negative")
        if not (self.monitor_power > self.sleep_power):
            raise ValueError("monitor_power must exceed sleep_power")


def capacitive_source_impedance(f: float, C: float) -> float:
    """|Z| = 1/(2 pi f C) of a capacitive source at frequency f."""
    if f <= 0.0 or C <= 0.0:
        raise ValueError("frequency and capacitance must be positive")
    return 1.0 / (2.0 * math.pi * f * C)


def rectified_current(v_p, rect: RectifierSpec, v_batt: float, r_source: float):
    """Instantaneous charging current into the battery.

    The source conducts only while |v_p| clears the diode drops plus the
    battery voltage; the excess drives current through the source impedance:
    i = max(0, |v_p| - total_drop - v_batt) / r_source.
    """
    if v_batt < 0.0:
        raise ValueError("battery voltage must be >= 0")
    if r_source <= 0.0:
        raise ValueError("source impedance must be positive")
    v_p = np.asarray(v_p, dtype=float)
    headroom = np.abs(v_p) - rect.total_drop - v_batt
    return np.maximum(0.0, headroom) / r_source


def rectify_trace(v_p, rect: RectifierSpec, v_batt: float, r_source: float):
    """Instantaneous battery charging power series p(t) = v_batt * i(t).

    v_batt must be positive here: the constant-voltage sink absorbs energy
    only at a nonzero terminal voltage.
    """
    if v_batt <= 0.0:
        raise ValueError(f"v_batt must be positive, got {v_batt!r}")
    return v_batt * rectified_current(v_p, rect, v_batt, r_source)


@dataclass(eq=False)
class SoCTrace:
    """Breakpoint samples of the ledger: piecewise linear between rows."""

    t: np.ndarray
    soc: np.ndarray
    v_batt: np.ndarray
    mode: list[str]


@dataclass(eq=False)
class DutyCycleResult:
    trace: SoCTrace
    self_sustaining: bool
    soc_start: float
    soc_end: float
    harvested_J: float  # post-efficiency energy offered to the battery
    consumed_J: float
    spilled_J: float  # charge rejected while the battery sat full
    unmet_J: float  # load not served while the battery sat empty
    brownout_t: float | None
    segments: list[tuple[float, float, str]] = field(default_factory=list)


def _validate_triggers(triggers, duty: DutyCycleSpec, horizon: float):
    triggers = sorted(float(t) for t in triggers)
    for t in triggers:
        if t < 0.0 or t + duty.monitor_duration > horizon:
            raise ValueError(
                f"trigger at {t:g} s leaves no room for a {duty.monitor_duration:g} s "
                f"monitoring window within the {horizon:g} s horizon"
            )
    for a, b in zip(triggers, triggers[1:]):
        if b - a < duty.monitor_duration:
            raise ValueError(
                f"triggers at {a:g} s and {b:g} s overlap (separation must be >= "
                f"{duty.monitor_duration:g} s)"
            )
    return triggers


def simulate_duty_cycle(
    duty: DutyCycleSpec,
    harvest_power: float,
    batt: BatterySpec,
    horizon: float,
    trigger_times,
    soc0: float = 0.5,
) -> DutyCycleResult:
    """Run the charging/monitoring ledger over `horizon` seconds.

    Each trigger opens a monitoring window of duty.monitor_duration that
    drains monitor_power with harvesting cut off; all remaining time charges
    at harvest_power * charge_eff minus sleep_power. State of charge is
    clamped to [0, 1] with the overflow and shortfall booked separately
    (spilled_J, unmet_J), so

        harvested - consumed - spilled + unmet = (soc_end - soc_start) * capacity_J

    holds to roundoff on every run. The first touch of soc = 0 is flagged as
    a brownout with its timestamp; the verdict is self-sustaining iff the
    final state of charge is no lower than the initial one.
    """
    if horizon <= 0.0:
        raise ValueError("horizon must be positive")
    if harvest_power < 0.0:
        raise ValueError("harvest_power must be >= 0")
    if not (0.0 <= soc0 <= 1.0):
        raise ValueError(f"soc0 must lie in [0, 1], got {soc0!r}")
    triggers = _validate_triggers(trigger_times, duty, horizon)

    # assemble alternating segments; zero-length charging gaps are dropped
    segments: list[tuple[float, float, str]] = []
    cursor = 0.0
    for trig in triggers:
        if trig > cursor:
            segments.append((cursor, trig, "charging"))
        segments.append((trig, trig + duty.monitor_duration, "monitoring"))
        cursor = trig + duty.monitor_duration
    if horizon > cursor:
        segments.append((cursor, horizon, "charging"))

    cap_J = batt.capacity_J
    soc = float(soc0)
    harvested = consumed = spilled = unmet = 0.0
    brownout_t: float | None = None
    ts = [0.0]
    socs = [soc]
    modes = [segments[0][2] if segments else "charging"]

    for t0, t1, mode in segments:
        if mode == "monitoring":
            p_in, p_out = 0.0, duty.monitor_power
        else:
            p_in, p_out = harvest_power * batt.charge_eff, duty.sleep_power
        p_net = p_in - p_out
        t_cur = t0
        while t_cur < t1:
            span = t1 - t_cur
            if p_net > 0.0 and soc < 1.0:
                t_hit = (1.0 - soc) * cap_J / p_net
                step = min(span, t_hit)
                soc_new = min(1.0, soc + p_net * step / cap_J)
            elif p_net < 0.0 and soc > 0.0:
                t_hit = soc * cap_J / (-p_net)
                step = min(span, t_hit)
                soc_new = max(0.0, soc + p_net * step / cap_J)
            else:
                # saturated (or exactly balanced): state holds, flux spills
                step = span
                soc_new = soc
                if p_net > 0.0:
                    spilled += p_net * step
                elif p_net < 0.0:
                    unmet += -p_net * step
            harvested += p_in * step
            consumed += p_out * step
            t_cur = t1 if step == span else t_cur + step
            soc = soc_new
            if soc <= 0.0 and brownout_t is None:
                brownout_t = t_cur
            ts.append(t_cur)
            socs.append(soc)
            modes.append(mode)

    t_arr = np.asarray(ts)
    soc_arr = np.asarray(socs)
    trace = SoCTrace(t=t_arr, soc=soc_arr, v_batt=np.asarray(batt.voltage(soc_arr)), mode=modes)
    return DutyCycleResult(
        trace=trace,
        self_sustaining=soc >= soc0 - 1e-12,
        soc_start=float(soc0),
        soc_end=soc,
        harvested_J=harvested,
        consumed_J=consumed,
        spilled_J=spilled,
        unmet_J=unmet,
        brownout_t=brownout_t,
        segments=segments,
    )


def break_even_rate(duty: DutyCycleSpec, harvest_power: float) -> float:
    """Daily event rate at which the energy books balance.

    N* = (harvest - sleep) * 86400 / (D * (monitor - harvest + sleep)) with D
    the monitoring duration: the daily standby surplus divided by the net
    cost of one monitoring window. Continuous-valued; floor it for the
    largest sustainable integer count. Returns 0.0 when standby alone runs a
    deficit (harvest <= sleep, the system never sustains itself) and inf when
    harvesting outpowers monitoring outright.
    """
    if harvest_power < 0.0:
        raise ValueError("harvest_power must be >= 0")
    if harvest_power <= duty.sleep_power:
        return 0.0
    net_cost = duty.monitor_duration * (duty.monitor_power - harvest_power + duty.sleep_power)
    if net_cost <= 0.0:
        return math.inf
    return (harvest_power - duty.sleep_power) * SECONDS_PER_DAY / net_cost
