"""Piezoresistive pavement sensing: strain to resistance to divider readout.

The conductive slab acts as a strain gauge: the fractional resistance change
is dR/R = lambda * eps1 with a single empirical gauge factor lambda (1956 for
the slab material, 3133 for cylindrical samples). Readout is a DC divider
against a shunt R_k; the slab resistance follows from the two divider
voltages as R = R_k * V_p / V_k. Synthetic traces add first-order
viscoelastic transitions, a slow residual tail, and Gaussian readout noise,
which is enough to exercise the regression and trigger paths end to end.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.ndimage import median_filter

__all__ = [
    "PavementSpec",
    "SensingCircuit",
    "LoadEvent",
    "reference_pavement",
    "dRR_from_strain",
    "dRR_decomposition",
    "divider_forward",
    "resistance_from_readout",
    "WimTrace",
    "synthesize_wim_trace",
    "fit_gauge_factor",
    "detect_events",
]

LINEAR_STRAIN_LIMIT = 5e-3


@dataclass(frozen=True)
class PavementSpec:
    """Electrical baseline and gauge behaviour of one sensing slab.

    e_spacing and area are calibration bookkeeping (they are folded into R0
    and never enter a computation here).
    """

    R0: float = 20e3  # ohm, inter-electrode baseline
    gauge_factor: float = 1956.0
    nu: float = 0.3
    e_spacing: float | None = None  # m
    area: float | None = None  # m^2

    def __post_init__(self):
        if self.R0 <= 0.0:
            raise ValueError(f"baseline resistance must be positive, got {self.R0!r}")
        if not (0.0 < self.nu < 0.5):
            raise ValueError(f"Poisson ratio must lie in (0, 0.5), got {self.nu!r}")


@dataclass(frozen=True)
class SensingCircuit:
    """DC divider readout: supply, shunt, and the DAQ sampling window."""

    V_supply: float = 5.0
    R_k: float = 10e3
    fs: float = 10.0
    record_len: int = 100

    def __post_init__(self):
        if self.V_supply <= 0.0 or self.R_k <= 0.0 or self.fs <= 0.0:
            raise ValueError("V_supply, R_k and fs must all be positive")
        if self.record_len < 2:
            raise ValueError(f"record_len must be >= 2, got {self.record_len!r}")

    @property
    def record_span(self) -> float:
        return self.record_len / self.fs


@dataclass(frozen=True)
class LoadEvent:
    """One load application window with its plateau strain."""

    t_start: float
    t_end: float
    peak_strain: float
    label: str = ""

    def __post_init__(self):
        if not (self.t_end > self.t_start):
            raise ValueError(f"event must have t_end > t_start, got [{self.t_start!r}, {self.t_end!r}]")
        if abs(self.peak_strain) >= LINEAR_STRAIN_LIMIT:
            warnings.warn(
                f"peak strain {self.peak_strain:g} outside the linear range "
                f"(|eps| < {LINEAR_STRAIN_LIMIT:g})",
                RuntimeWarning,
                stacklevel=2,
            )

    @property
    def duration(self) -> float:
        return self.t_end - self.t_start


def reference_pavement() -> PavementSpec:
    """Slab defaults: 20 kOhm baseline, gauge factor 1956, nu = 0.3."""
    return PavementSpec()


def dRR_from_strain(eps1, spec: PavementSpec):
    """Fractional resistance change for axial strain eps1: dR/R = lambda * eps1.

    Accepts scalars or arrays; warns (once per call) when any strain leaves
    the linear range.
    """
    eps1 = np.asarray(eps1, dtype=float)
    if np.any(np.abs(eps1) >= LINEAR_STRAIN_LIMIT):
        warnings.warn(
            f"strain outside the linear range (|eps| < {LINEAR_STRAIN_LIMIT:g}); "
            "the gauge relation is extrapolated",
            RuntimeWarning,
            stacklevel=2,
        )
    out = spec.gauge_factor * eps1
    return float(out) if out.ndim == 0 else out


def dRR_decomposition(eps1, spec: PavementSpec):
    """Split dR/R into its geometric and piezoresistive parts.

    Parameters
    ----------
    eps1 : scalar or array
        Axial strain.
    spec : PavementSpec

    Returns
    -------
    (geometric, piezoresistive)
        geometric = -eps1 / nu (the dimensional-change share, transverse
        contraction included), piezoresistive = (lambda + 1/nu) * eps1 (the
        resistivity share). The two sum to lambda * eps1 identically, so the
        split is exact by construction.
    """
    eps1 = np.asarray(eps1, dtype=float)
    geometric = -eps1 / spec.nu
    piezo = (spec.gauge_factor + 1.0 / spec.nu) * eps1
    if eps1.ndim == 0:
        return float(geometric), float(piezo)
    return geometric, piezo


def divider_forward(R, circuit: SensingCircuit):
    """Divider voltages for slab resistance R.

    Returns (V_p, V_k): the drop across the slab and across the shunt,
    V_k = V_supply * R_k / (R + R_k), V_p = V_supply - V_k.
    """
    R = np.asarray(R, dtype=float)
    if np.any(R <= 0.0):
        raise ValueError("slab resistance must be positive")
    V_k = circuit.V_supply * circuit.R_k / (R + circuit.R_k)
    V_p = circuit.V_supply - V_k
    if R.ndim == 0:
        return float(V_p), float(V_k)
    return V_p, V_k


def resistance_from_readout(V_p, V_k, R_k: float, noise_floor: float = 0.0):
    """Slab resistance from the two divider voltages: R = R_k * V_p / V_k.

    Algebraic inverse of divider_forward. Shunt readings at or below
    `noise_floor` are unresolvable and rejected.
    """
    V_p = np.asarray(V_p, dtype=float)
    V_k = np.asarray(V_k, dtype=float)
    if np.any(V_k <= noise_floor):
        raise ValueError(
            f"shunt voltage at or below the noise floor ({noise_floor:g} V); resistance unresolvable"
        )
    R = R_k * V_p / V_k
    return float(R) if R.ndim == 0 else R


@dataclass(eq=False)
class WimTrace:
    """One synthesized DAQ record.

    strain and dRR_true are the noiseless forward model; V_k carries the
    readout noise, and R / dRR are what the divider inversion recovers from
    it (the columns a real logger would produce).
    """

    t: np.ndarray
    strain: np.ndarray
    dRR_true: np.ndarray
    V_k: np.ndarray
    R: np.ndarray
    dRR: np.ndarray
    events: list[LoadEvent] = field(default_factory=list)


def _strain_history(t: np.ndarray, events: list[LoadEvent], tau: float, residual_frac: float) -> np.ndarray:
    eps = np.zeros_like(t)
    for ev in events:
        if tau > 0.0:
            rising = (t >= ev.t_start) & (t < ev.t_end)
            eps[rising] += ev.peak_strain * (1.0 - np.exp(-(t[rising] - ev.t_start) / tau))
            level = ev.peak_strain * (1.0 - np.exp(-ev.duration / tau))
            after = t >= ev.t_end
            dt_off = t[after] - ev.t_end
            eps[after] += level * (
                (1.0 - residual_frac) * np.exp(-dt_off / tau)
                + residual_frac * np.exp(-dt_off / (50.0 * tau))
            )
        else:
            # instantaneous limit: clean rectangular pulse, no residual
            eps[(t >= ev.t_start) & (t < ev.t_end)] += ev.peak_strain
    return eps


def synthesize_wim_trace(
    events: list[LoadEvent],
    spec: PavementSpec,
    circuit: SensingCircuit,
    noise_rms: float = 0.0,
    visco_tau: float = 2.0,
    residual_frac: float = 0.05,
    rng=None,
) -> WimTrace:
    """Generate one synthetic weigh-in-motion record.

    Each event ramps toward its plateau strain with time constant visco_tau
    and relaxes after release, keeping a slow residual tail (fraction
    `residual_frac` decaying 50x slower). visco_tau <= 0 degenerates to clean
    rectangular pulses. The strain history maps through the gauge relation
    and the divider; Gaussian noise of `noise_rms` volts lands on the shunt
    voltage only, and the reported R / dR/R columns are recovered from that
    noisy reading exactly the way a logger would.

    Events must be non-overlapping and lie within the record span.
    """
    if noise_rms < 0.0:
        raise ValueError("noise_rms must be >= 0")
    ordered = sorted(events, key=lambda ev: ev.t_start)
    for prev, nxt in zip(ordered, ordered[1:]):
        if nxt.t_start < prev.t_end:
            raise ValueError(
                f"overlapping events: [{prev.t_start:g}, {prev.t_end:g}] and "
                f"[{nxt.t_start:g}, {nxt.t_end:g}]"
            )
    span = circuit.record_span
    for ev in ordered:
        if ev.t_start < 0.0 or ev.t_end > span:
            raise ValueError(f"event [{ev.t_start:g}, {ev.t_end:g}] outside the record span [0, {span:g}]")

    t = np.arange(circuit.record_len) / circuit.fs
    eps = _strain_history(t, ordered, visco_tau, residual_frac)
    drr_true = dRR_from_strain(eps, spec)
    R_true = spec.R0 * (1.0 + drr_true)
    _, V_k = divider_forward(R_true, circuit)
    if noise_rms > 0.0:
        rng = np.random.default_rng(rng)
        V_k = V_k + rng.normal(0.0, noise_rms, size=V_k.shape)
    V_p = circuit.V_supply - V_k
    R_meas = resistance_from_readout(V_p, V_k, circuit.R_k)
    drr_meas = (R_meas - spec.R0) / spec.R0
    return WimTrace(
        t=t, strain=eps, dRR_true=drr_true, V_k=V_k, R=R_meas, dRR=drr_meas, events=ordered
    )


def fit_gauge_factor(strain, dRR):
    """Least-squares gauge factor from paired strain / dR/R samples.

    Returns (lambda_hat, intercept, r_squared). The slope is the gauge
    factor estimate; the intercept is fitted so a DC offset in the trace
    does not bias it. Needs at least 3 points and nonconstant strain.
    """
    strain = np.asarray(strain, dtype=float)
    dRR = np.asarray(dRR, dtype=float)
    if strain.shape != dRR.shape or strain.ndim != 1:
        raise ValueError("strain and dRR must be 1-d arrays of equal length")
    if strain.size < 3:
        raise ValueError("need at least 3 samples to fit a slope")
    if np.ptp(strain) == 0.0:
        raise ValueError("strain series is constant; slope is undefined")
    A = np.column_stack([strain, np.ones_like(strain)])
    coef, *_ = np.linalg.lstsq(A, dRR, rcond=None)
    slope, intercept = float(coef[0]), float(coef[1])
    resid = dRR - A @ coef
    ss_res = float(resid @ resid)
    ss_tot = float(np.sum((dRR - dRR.mean()) ** 2))
    r2 = 1.0 if ss_tot == 0.0 else 1.0 - ss_res / ss_tot
    return slope, intercept, r2


def detect_events(
    t,
    dRR,
    spec: PavementSpec,
    threshold: float,
    min_gap: float = 1.0,
    baseline_window: float = 10.0,
) -> list[LoadEvent]:
    """Hysteresis trigger on |dR/R| excursions over a rolling-median baseline.

    An event opens when the excursion exceeds `threshold` and closes when it
    falls back under threshold/2; events separated by less than `min_gap`
    seconds are merged. Peak excursions map back to strain through the gauge
    factor, so the returned LoadEvents are directly comparable to the ones a
    synthesizer injected.
    """
    t = np.asarray(t, dtype=float)
    dRR = np.asarray(dRR, dtype=float)
    if t.shape != dRR.shape or t.ndim != 1 or t.size < 2:
        raise ValueError("t and dRR must be matching 1-d arrays with >= 2 samples")
    dt = np.diff(t)
    if np.max(np.abs(dt - dt[0])) > 1e-6 * dt[0]:
        raise ValueError("detection requires uniform sampling")
    if threshold <= 0.0:
        raise ValueError("threshold must be positive")

    n_base = max(3, int(round(baseline_window / dt[0])) | 1)  # odd window
    baseline = median_filter(dRR, size=n_base, mode="nearest")
    exc = np.abs(dRR - baseline)

    intervals: list[tuple[int, int]] = []
    open_at = None
    for i, e in enumerate(exc):
        if open_at is None:
            if e > threshold:
                open_at = i
        elif e < 0.5 * threshold:
            intervals.append((open_at, i))
            open_at = None
    if open_at is not None:
        intervals.append((open_at, len(exc) - 1))

    merged: list[list[int]] = []
    for i0, i1 in intervals:
        if merged and t[i0] - t[merged[-1][1]] < min_gap:
            merged[-1][1] = i1
        else:
            merged.append([i0, i1])

    out = []
    for i0, i1 in merged:
        peak = float(np.max(exc[i0 : i1 + 1]))
        out.append(
            LoadEvent(
                t_start=float(t[i0]),
                t_end=float(t[i1]),
                peak_strain=peak / spec.gauge_factor,
                label="detected",
            )
        )
    return out
