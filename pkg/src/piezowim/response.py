"""Frequency- and time-domain response of the harvester under base excitation.

Conventions. Base acceleration enters as w_g''(t) = a*cos(omega*t), complex
phasors as e^{i*omega*t}; every FRF is response per unit base acceleration
amplitude a (SI). With a short-circuit modal basis (theta_r = Theta^T phi_r,
p_r = phi_r^T M Lvec, Delta_r = w_r^2 - w^2 + 2i*zeta_r*w_r*w) the voltage FRF
across a resistive load R_l is

    H_v(w) = [sum_r i*w*theta_r*p_r/Delta_r]
             / [1/R_l + i*w*Cp + sum_r i*w*theta_r^2/Delta_r]

and the tip-velocity FRF relative to the base is
i*w*sum_r phi_tip,r*(theta_r*H_v - p_r)/Delta_r; the absolute one adds the
base velocity term 1/(i*w).

Time integration treats both physics monolithically: Newmark constant-average
acceleration on the mechanical rows, trapezoidal rule on the circuit row, one
constant (n+1) x (n+1) factorization for the whole run. For the undamped
open-circuit case this combination is an exact isometry of the energy metric,
so free vibration conserves mechanical-plus-capacitive energy to roundoff.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import trapezoid
from scipy.linalg import eigh, lu_factor, lu_solve
from scipy.signal import csd, welch

from .harvester import AssembledSystem, HarvesterSpec, TipMass, assemble

__all__ = [
    "G_ACCEL",
    "HarmonicExcitation",
    "SampledExcitation",
    "ChirpExcitation",
    "FrfResult",
    "TimeSimResult",
    "voltage_frf",
    "tip_velocity_frf",
    "time_integrate",
    "average_power",
    "series_chain",
    "tune_tip_mass",
    "h1_frf",
]

G_ACCEL = 9.81  # m/s^2, used for per-g reporting and g-specified amplitudes


@dataclass(frozen=True)
class HarmonicExcitation:
    """Steady sine drive: w_g'' = amplitude * cos(2*pi*frequency*t)."""

    frequency: float  # Hz
    amplitude: float  # m/s^2

    def __post_init__(self):
        if self.frequency <= 0.0:
            raise ValueError(f"drive frequency must be positive, got {self.frequency!r}")

    def accel(self, t):
        return self.amplitude * np.cos(2.0 * np.pi * self.frequency * t)

    @property
    def duration(self):
        return None


@dataclass(eq=False)
class SampledExcitation:
    """Recorded base acceleration on a uniform time grid."""

    t: np.ndarray  # s
    a: np.ndarray  # m/s^2

    def __post_init__(self):
        t = np.asarray(self.t, dtype=float)
        a = np.asarray(self.a, dtype=float)
        if t.ndim != 1 or t.shape != a.shape or t.size < 2:
            raise ValueError("sampled excitation needs matching 1-d arrays with >= 2 samples")
        dt = np.diff(t)
        if np.any(dt <= 0.0):
            raise ValueError("sample times must be strictly increasing")
        if np.max(np.abs(dt - dt[0])) > 1e-6 * dt[0]:
            raise ValueError("sample spacing is not uniform")
        if not (np.all(np.isfinite(t)) and np.all(np.isfinite(a))):
            raise ValueError("sampled excitation contains non-finite values")
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "a", a)

    @property
    def fs(self) -> float:
        return 1.0 / (self.t[1] - self.t[0])

    @property
    def duration(self) -> float:
        return float(self.t[-1] - self.t[0])

    def accel(self, t):
        return np.interp(t, self.t, self.a, left=0.0, right=0.0)


@dataclass(frozen=True)
class ChirpExcitation:
    """Linear sweep from f0 to f1 over `duration`, zero afterwards."""

    f0: float
    f1: float
    duration: float
    amplitude: float  # m/s^2

    def __post_init__(self):
        if self.f0 <= 0.0 or self.f1 <= 0.0 or self.duration <= 0.0:
            raise ValueError("chirp needs positive f0, f1 and duration")

    def accel(self, t):
        t = np.asarray(t, dtype=float)
        rate = (self.f1 - self.f0) / self.duration
        phase = 2.0 * np.pi * (self.f0 * t + 0.5 * rate * t * t)
        out = self.amplitude * np.cos(phase)
        return np.where((t >= 0.0) & (t <= self.duration), out, 0.0)


Excitation = HarmonicExcitation | SampledExcitation | ChirpExcitation


@dataclass(eq=False)
class FrfResult:
    """Complex response per unit base acceleration on a frequency grid.

    H_v is the load voltage FRF (V per m/s^2); H_vel, when present, the
    absolute tip-velocity FRF. Multiply magnitudes by G_ACCEL for the per-g
    numbers used in reports.
    """

    grid: np.ndarray  # Hz
    H_v: np.ndarray
    H_vel: np.ndarray | None
    R_l: float


@dataclass(eq=False)
class TimeSimResult:
    """Sampled output of one coupled time integration."""

    t: np.ndarray
    v_p: np.ndarray
    tip_disp: np.ndarray
    tip_vel: np.ndarray
    power: np.ndarray  # instantaneous v_p^2 / R_l, zero for an open circuit
    R_l: float
    energy: np.ndarray | None = None  # total mechanical + capacitive, if requested


def _check_load(R_l: float) -> float:
    if not (R_l > 0.0):
        raise ValueError(f"load resistance must be positive (np.inf for open), got {R_l!r}")
    return float(R_l)


def _modal_ingredients(sys_: AssembledSystem, basis):
    if basis.circuit != "short":
        raise ValueError("FRF evaluation expects the short-circuit modal basis")
    theta = basis.shapes.T @ sys_.Theta
    p = basis.shapes.T @ (sys_.M @ sys_.Lvec)
    phi_tip = basis.shapes[sys_.dof_map.tip_w, :]
    return theta, p, phi_tip


def _voltage_frf_arrays(sys_, basis, R_l, grid, zeta):
    om = 2.0 * np.pi * np.asarray(grid, dtype=float)
    wr = basis.omegas
    theta, p, phi_tip = _modal_ingredients(sys_, basis)
    D = wr[:, None] ** 2 - om[None, :] ** 2 + 2j * zeta * wr[:, None] * om[None, :]
    num = 1j * om * np.sum((theta * p)[:, None] / D, axis=0)
    g_load = 0.0 if math.isinf(R_l) else 1.0 / R_l
    den = g_load + 1j * om * sys_.Cp + 1j * om * np.sum((theta**2)[:, None] / D, axis=0)
    H_v = num / den
    return om, D, theta, p, phi_tip, H_v


def voltage_frf(sys_: AssembledSystem, basis, R_l: float, grid, zeta: float | None = None) -> FrfResult:
    """Voltage-across-the-load FRF per unit base acceleration.

    `basis` must be the mass-normalized short-circuit basis; `zeta` defaults
    to the device's uniform modal damping ratio (sys_.spec.zeta).
    """
    R_l = _check_load(R_l)
    zeta = sys_.spec.zeta if zeta is None else float(zeta)
    grid = np.asarray(grid, dtype=float)
    *_, H_v = _voltage_frf_arrays(sys_, basis, R_l, grid, zeta)
    return FrfResult(grid=grid, H_v=H_v, H_vel=None, R_l=R_l)


def tip_velocity_frf(sys_: AssembledSystem, basis, R_l: float, grid, zeta: float | None = None) -> FrfResult:
    """Absolute tip-velocity FRF (and the voltage FRF it rides on).

    The relative-motion FRF follows from modal superposition with the voltage
    feedback term; adding the base velocity 1/(i*w) per unit base acceleration
    turns it into the fixed-frame velocity. A grid containing 0 Hz is
    rejected, the base-velocity term diverges there.
    """
    R_l = _check_load(R_l)
    zeta = sys_.spec.zeta if zeta is None else float(zeta)
    grid = np.asarray(grid, dtype=float)
    if np.any(grid <= 0.0):
        raise ValueError("velocity FRF grid must be strictly positive (0 Hz is singular)")
    om, D, theta, p, phi_tip, H_v = _voltage_frf_arrays(sys_, basis, R_l, grid, zeta)
    H_rel = 1j * om * np.sum(phi_tip[:, None] * (theta[:, None] * H_v[None, :] - p[:, None]) / D, axis=0)
    H_abs = H_rel + 1.0 / (1j * om)
    return FrfResult(grid=grid, H_v=H_v, H_vel=H_abs, R_l=R_l)


def time_integrate(
    sys_: AssembledSystem,
    R_l: float,
    excitation: Excitation,
    dt: float | None = None,
    T: float | None = None,
    d0: np.ndarray | None = None,
    v0: np.ndarray | None = None,
    vp0: float = 0.0,
    store_energy: bool = False,
) -> TimeSimResult:
    """Monolithic implicit integration of the coupled governing equations.

    Mechanical rows advance by Newmark constant-average acceleration
    (beta 1/4, gamma 1/2), the circuit row Theta^T d' + Cp v' + v/R_l = 0 by
    the trapezoidal rule; each step solves one constant factorized system in
    (acceleration, voltage). Unconditionally stable and second order.

    dt defaults to 1/(40*f1); T defaults to the excitation's duration when it
    has one. Initial conditions default to rest. A divergence watchdog aborts
    on non-finite state with the step and time in the message.
    """
    R_l = _check_load(R_l)
    f1 = sys_.omega_anchors[0] / (2.0 * np.pi)
    if dt is None:
        dt = 1.0 / (40.0 * f1)
    if T is None:
        T = excitation.duration
        if T is None:
            raise ValueError("T is required for excitations without an intrinsic duration")
    if dt <= 0.0 or T <= 0.0:
        raise ValueError("dt and T must be positive")

    n = sys_.n_dof
    M, C, K, Theta, Lvec = sys_.M, sys_.C, sys_.K, sys_.Theta, sys_.Lvec
    Cp = sys_.Cp
    g_load = 0.0 if math.isinf(R_l) else 1.0 / R_l
    h = float(dt)
    nsteps = int(round(T / h))

    A = np.zeros((n + 1, n + 1))
    A[:n, :n] = M + 0.5 * h * C + 0.25 * h * h * K
    A[:n, n] = -Theta
    A[n, :n] = 0.25 * h * Theta
    A[n, n] = Cp / h + 0.5 * g_load
    lu = lu_factor(A)

    d = np.zeros(n) if d0 is None else np.array(d0, dtype=float)
    v = np.zeros(n) if v0 is None else np.array(v0, dtype=float)
    vp = float(vp0)
    if d.shape != (n,) or v.shape != (n,):
        raise ValueError(f"initial conditions must have shape ({n},)")

    t_grid = h * np.arange(nsteps + 1)
    accel = np.asarray(excitation.accel(t_grid), dtype=float)

    # consistent initial acceleration from the governing equation at t = 0
    a_curr = np.linalg.solve(M, -(M @ Lvec) * accel[0] + Theta * vp - C @ v - K @ d)

    vp_out = np.empty(nsteps + 1)
    tip_d = np.empty(nsteps + 1)
    tip_v = np.empty(nsteps + 1)
    iw = sys_.dof_map.tip_w
    vp_out[0], tip_d[0], tip_v[0] = vp, d[iw], v[iw]
    E_out = None
    if store_energy:
        E_out = np.empty(nsteps + 1)
        E_out[0] = 0.5 * v @ (M @ v) + 0.5 * d @ (K @ d) + 0.5 * Cp * vp * vp

    rhs = np.empty(n + 1)
    MLvec = M @ Lvec
    for k in range(1, nsteps + 1):
        d_pred = d + h * v + 0.25 * h * h * a_curr
        v_pred = v + 0.5 * h * a_curr
        rhs[:n] = -MLvec * accel[k] - C @ v_pred - K @ d_pred
        rhs[n] = -Theta @ v - 0.25 * h * (Theta @ a_curr) + (Cp / h - 0.5 * g_load) * vp
        sol = lu_solve(lu, rhs)
        a_curr = sol[:n]
        vp = sol[n]
        d = d_pred + 0.25 * h * h * a_curr
        v = v_pred + 0.5 * h * a_curr

        vp_out[k] = vp
        tip_d[k] = d[iw]
        tip_v[k] = v[iw]
        if store_energy:
            E_out[k] = 0.5 * v @ (M @ v) + 0.5 * d @ (K @ d) + 0.5 * Cp * vp * vp
        if k % 256 == 0 and not (np.isfinite(vp) and np.isfinite(d[iw])):
            raise RuntimeError(
                f"time integration diverged at step {k} (t = {k * h:.6g} s); "
                f"v_p = {vp!r}, tip w = {d[iw]!r}"
            )

    if not (np.all(np.isfinite(vp_out)) and np.all(np.isfinite(tip_d))):
        raise RuntimeError("time integration produced non-finite output")

    power = vp_out**2 * g_load
    return TimeSimResult(
        t=t_grid, v_p=vp_out, tip_disp=tip_d, tip_vel=tip_v, power=power, R_l=R_l, energy=E_out
    )


def average_power(sim: TimeSimResult, window: tuple[float, float]) -> float:
    """Time-averaged instantaneous power over [t0, t1] (trapezoidal mean)."""
    t0, t1 = window
    if not (t0 < t1):
        raise ValueError(f"empty averaging window ({t0!r}, {t1!r})")
    if t0 < sim.t[0] - 1e-12 or t1 > sim.t[-1] + 1e-12:
        raise ValueError("averaging window extends beyond the simulated span")
    mask = (sim.t >= t0) & (sim.t <= t1)
    if np.count_nonzero(mask) < 2:
        raise ValueError("averaging window contains fewer than two samples")
    ts = sim.t[mask]
    return float(trapezoid(sim.power[mask], ts) / (ts[-1] - ts[0]))


def series_chain(unit, n_units: int):
    """Scale one unit's output to a chain of identical series-wired units.

    Identical units under identical base motion produce identical currents,
    so the chain voltage is n times the unit voltage while the source
    capacitance drops to Cp/n (an idealization: no mismatch between units).
    Accepts an FrfResult or a TimeSimResult and returns the same type.
    """
    if int(n_units) != n_units or n_units < 1:
        raise ValueError(f"n_units must be an integer >= 1, got {n_units!r}")
    n = int(n_units)
    if isinstance(unit, FrfResult):
        return FrfResult(
            grid=unit.grid.copy(),
            H_v=n * unit.H_v,
            H_vel=None if unit.H_vel is None else unit.H_vel.copy(),
            R_l=unit.R_l,
        )
    if isinstance(unit, TimeSimResult):
        return TimeSimResult(
            t=unit.t.copy(),
            v_p=n * unit.v_p,
            tip_disp=unit.tip_disp.copy(),
            tip_vel=unit.tip_vel.copy(),
            power=(n * n) * unit.power,
            R_l=unit.R_l,
            energy=None if unit.energy is None else unit.energy.copy(),
        )
    raise TypeError(f"series_chain expects FrfResult or TimeSimResult, got {type(unit)!r}")


def _fundamental(spec: HarvesterSpec, tip: TipMass | None) -> float:
    sys_ = assemble(spec, tip)
    return sys_.omega_anchors[0] / (2.0 * np.pi)


def tune_tip_mass(
    spec: HarvesterSpec,
    target_f: float,
    mass_bounds: tuple[float, float],
    l_a: float = 14e-3,
    l_b: float = 2e-3,
    tol_hz: float = 0.01,
    max_iter: int = 200,
) -> tuple[TipMass, float]:
    """Bisect the proof mass until the fundamental frequency hits target_f.

    The fundamental decreases monotonically with added mass, so the target
    must be bracketed by the frequencies at the two mass bounds; otherwise a
    "not bracketed" ValueError is raised. Returns the tuned TipMass (fixed
    block dimensions l_a, l_b) and the achieved frequency.
    """
    if target_f <= 0.0:
        raise ValueError("target frequency must be positive")
    lo, hi = float(mass_bounds[0]), float(mass_bounds[1])
    if not (0.0 <= lo < hi):
        raise ValueError(f"mass bounds must satisfy 0 <= lo < hi, got {mass_bounds!r}")

    def f_of(m: float) -> float:
        tip = TipMass(M_t=m, l_a=l_a, l_b=l_b) if m > 0.0 else None
        return _fundamental(spec, tip)

    f_lo, f_hi = f_of(lo), f_of(hi)
    if abs(f_lo - target_f) < tol_hz:
        return TipMass(M_t=lo, l_a=l_a, l_b=l_b), f_lo
    if abs(f_hi - target_f) < tol_hz:
        return TipMass(M_t=hi, l_a=l_a, l_b=l_b), f_hi
    if not (f_hi < target_f < f_lo):
        raise ValueError(
            f"target {target_f} Hz not bracketed: f({lo * 1e3:.3g} g) = {f_lo:.3f} Hz, "
            f"f({hi * 1e3:.3g} g) = {f_hi:.3f} Hz"
        )

    mid, f_mid = lo, f_lo
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        f_mid = f_of(mid)
        if abs(f_mid - target_f) < tol_hz:
            return TipMass(M_t=mid, l_a=l_a, l_b=l_b), f_mid
        if f_mid > target_f:
            lo = mid
        else:
            hi = mid
    raise RuntimeError(
        f"tip-mass bisection did not reach |f - target| < {tol_hz} Hz in {max_iter} "
        f"iterations (last f = {f_mid:.4f} Hz at {mid * 1e3:.4f} g)"
    )


def h1_frf(x: np.ndarray, y: np.ndarray, fs: float, nperseg: int = 1024, overlap: float = 0.5):
    """H1 spectral estimate of the FRF from input x to output y.

    Windowed cross-spectral division Pxy/Pxx (Hann windows, `overlap`
    fraction), the standard choice when the output carries the noise. Returns
    (frequencies, H1).
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("x and y must be 1-d arrays of equal length")
    noverlap = int(nperseg * overlap)
    f, Pxy = csd(x, y, fs=fs, window="hann", nperseg=nperseg, noverlap=noverlap)
    _, Pxx = welch(x, fs=fs, window="hann", nperseg=nperseg, noverlap=noverlap)
    return f, Pxy / Pxx
