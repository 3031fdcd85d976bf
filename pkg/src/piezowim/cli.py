"""Command-line surface: one subcommand per analysis, CSV out, SI in.

Every subcommand reads the shared config (--config), writes fixed-name CSV
files into --out, and exits nonzero on any validation problem without
leaving partial files behind. Data files are deterministic; run parameters
go to a .meta.json sidecar next to each CSV.
"""

from __future__ import annotations

import argparse
import math
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .budget import BatterySpec, DutyCycleSpec, break_even_rate, simulate_duty_cycle
from .harvester import TipMass, assemble
from .io import (
    ConfigError,
    RunConfig,
    emit_csv,
    load_acceleration_csv,
    load_config,
    load_events_csv,
    load_column_csv,
    parse_config,
    stft_spectrogram,
    write_metadata,
)
from .modal import open_circuit_modes, short_circuit_modes
from .pavement import LoadEvent, fit_gauge_factor, synthesize_wim_trace
from .response import (
    G_ACCEL,
    HarmonicExcitation,
    time_integrate,
    tip_velocity_frf,
    tune_tip_mass,
)

_DEG = 180.0 / math.pi


def _load_cfg(args) -> RunConfig:
    if args.config:
        return load_config(args.config, strict=args.strict)
    return parse_config("", strict=args.strict)


def _tip_from(args, cfg: RunConfig) -> TipMass | None:
    """CLI --tip-mass-g overrides the config; 0 means no tip mass."""
    if getattr(args, "tip_mass_g", None) is None:
        return cfg.tip
    if args.tip_mass_g == 0.0:
        return None
    la = cfg.tip.l_a if cfg.tip is not None else TipMass.__dataclass_fields__["l_a"].default
    lb = cfg.tip.l_b if cfg.tip is not None else TipMass.__dataclass_fields__["l_b"].default
    return TipMass(M_t=args.tip_mass_g * 1e-3, l_a=la, l_b=lb)


def _outdir(args, cfg: RunConfig) -> Path:
    out = Path(args.out) if args.out else Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _cmd_modal(args) -> int:
    cfg = _load_cfg(args)
    tip = _tip_from(args, cfg)
    sys_ = assemble(cfg.harvester, tip)
    sc = short_circuit_modes(sys_, n_modes=args.n_modes)
    oc = open_circuit_modes(sys_, n_modes=args.n_modes)
    tip_w = sys_.dof_map.tip_w
    rows = [
        (r + 1, sc.frequencies[r], oc.frequencies[r], sc.shapes[tip_w, r])
        for r in range(args.n_modes)
    ]
    out = _outdir(args, cfg)
    emit_csv(out / "modal.csv", ["mode", "f_sc_Hz", "f_oc_Hz", "tip_defl"], rows)
    write_metadata(
        out / "modal.meta.json",
        {
            "command": "modal",
            "version": __version__,
            "n_modes": args.n_modes,
            "n_elements": cfg.harvester.n_elements,
            "tip_mass_g": None if tip is None else tip.M_t * 1e3,
        },
    )
    for r in rows:
        print(f"mode {r[0]}: f_sc = {r[1]:.4f} Hz, f_oc = {r[2]:.4f} Hz")
    return 0


def _cmd_frf(args) -> int:
    cfg = _load_cfg(args)
    if not (args.fmax > args.fmin > 0.0):
        raise ValueError("need 0 < fmin < fmax")
    if args.points < 2:
        raise ValueError("need at least 2 grid points")
    sys_ = assemble(cfg.harvester, _tip_from(args, cfg))
    basis = short_circuit_modes(sys_, n_modes=args.n_modes)
    grid = np.linspace(args.fmin, args.fmax, args.points)
    res = tip_velocity_frf(sys_, basis, args.rl_ohm, grid)
    rows = zip(
        grid,
        np.abs(res.H_v) * G_ACCEL,
        np.angle(res.H_v) * _DEG,
        np.abs(res.H_vel) * G_ACCEL,
        np.angle(res.H_vel) * _DEG,
    )
    out = _outdir(args, cfg)
    emit_csv(
        out / "frf.csv",
        ["f_Hz", "absHv_per_g", "argHv_deg", "absHvel_per_g", "argHvel_deg"],
        rows,
    )
    write_metadata(
        out / "frf.meta.json",
        {
            "command": "frf",
            "version": __version__,
            "rl_ohm": args.rl_ohm,
            "fmin": args.fmin,
            "fmax": args.fmax,
            "points": args.points,
            "n_modes": args.n_modes,
        },
    )
    print(f"frf: {args.points} points on [{args.fmin}, {args.fmax}] Hz at R_l = {args.rl_ohm} ohm")
    return 0


def _parse_harmonic(text: str) -> HarmonicExcitation:
    try:
        f_str, a_str = text.split(",")
        return HarmonicExcitation(frequency=float(f_str), amplitude=float(a_str) * G_ACCEL)
    except ValueError:
        raise ValueError(f"--harmonic expects 'freq_hz,amplitude_g', got {text!r}") from None


def _cmd_timesim(args) -> int:
    cfg = _load_cfg(args)
    sys_ = assemble(cfg.harvester, _tip_from(args, cfg))
    if args.harmonic:
        exc = _parse_harmonic(args.harmonic)
        if args.duration is None:
            raise ValueError("--duration is required with --harmonic")
    else:
        exc = load_acceleration_csv(args.excitation)
    sim = time_integrate(sys_, args.rl_ohm, exc, dt=args.dt, T=args.duration)
    out = _outdir(args, cfg)
    emit_csv(
        out / "timesim.csv",
        ["t_s", "vp_V", "tipvel_mps", "power_W"],
        zip(sim.t, sim.v_p, sim.tip_vel, sim.power),
    )
    write_metadata(
        out / "timesim.meta.json",
        {
            "command": "timesim",
            "version": __version__,
            "rl_ohm": args.rl_ohm,
            "dt": args.dt,
            "duration": args.duration,
            "excitation": args.harmonic or str(args.excitation),
        },
    )
    print(f"timesim: {sim.t.size} samples, peak |v_p| = {np.max(np.abs(sim.v_p)):.4g} V")
    return 0


def _cmd_tune_mass(args) -> int:
    cfg = _load_cfg(args)
    tip, f1 = tune_tip_mass(
        cfg.harvester,
        args.target_hz,
        (args.mass_min_g * 1e-3, args.mass_max_g * 1e-3),
        tol_hz=args.tol_hz,
    )
    print(f"tip mass {tip.M_t * 1e3:.3f} g gives f1 = {f1:.4f} Hz (target {args.target_hz} Hz)")
    return 0


_DEMO_EVENTS = [
    LoadEvent(2.0, 8.0, 0.7e-4, label="step-A"),
    LoadEvent(12.0, 18.0, 1.05e-4, label="step-B"),
    LoadEvent(22.0, 28.0, 1.1e-4, label="step-C"),
]


def _cmd_wim_sim(args) -> int:
    cfg = _load_cfg(args)
    circuit = cfg.circuit
    record_s = args.record_s
    if record_s is None and not args.events:
        record_s = 30.0  # the built-in demo events need a 30 s span
    if record_s is not None:
        if record_s <= 0.0:
            raise ValueError("--record-s must be positive")
        circuit = replace(circuit, record_len=int(round(record_s * circuit.fs)))
    events = load_events_csv(args.events) if args.events else list(_DEMO_EVENTS)
    trace = synthesize_wim_trace(
        events,
        cfg.pavement,
        circuit,
        noise_rms=args.noise_rms,
        visco_tau=args.visco_tau,
        rng=args.seed,
    )
    out = _outdir(args, cfg)
    emit_csv(
        out / "wim_trace.csv",
        ["t_s", "Vk_V", "R_ohm", "dRR"],
        zip(trace.t, trace.V_k, trace.R, trace.dRR),
    )
    if args.strain_out:
        emit_csv(out / args.strain_out, ["t_s", "strain"], zip(trace.t, trace.strain))
    write_metadata(
        out / "wim_trace.meta.json",
        {
            "command": "wim-sim",
            "version": __version__,
            "seed": args.seed,
            "noise_rms": args.noise_rms,
            "visco_tau": args.visco_tau,
            "n_events": len(events),
            "events_file": str(args.events) if args.events else None,
        },
    )
    print(f"wim-sim: {trace.t.size} samples, {len(events)} events, noise_rms = {args.noise_rms} V")
    return 0


def _cmd_fit_gf(args) -> int:
    strain = load_column_csv(args.strain, "strain")
    drr = load_column_csv(args.drr, "dRR")
    lam, intercept, r2 = fit_gauge_factor(strain, drr)
    print(f"gauge_factor = {lam:.6g}")
    print(f"intercept = {intercept:.6g}")
    print(f"r_squared = {r2:.6g}")
    return 0


def _cmd_budget(args) -> int:
    cfg = _load_cfg(args)
    duty = cfg.duty
    if args.monitor_mw is not None:
        duty = replace(duty, monitor_power=args.monitor_mw * 1e-3)
    if args.monitor_s is not None:
        duty = replace(duty, monitor_duration=args.monitor_s)
    if args.sleep_mw is not None:
        duty = replace(duty, sleep_power=args.sleep_mw * 1e-3)
    harvest = args.harvest_mw * 1e-3
    horizon = args.horizon_h * 3600.0

    if args.triggers:
        triggers = [ev.t_start for ev in load_events_csv(args.triggers)]
    else:
        rate = args.events_per_day if args.events_per_day is not None else duty.events_per_day
        n = int(round(rate * horizon / 86400.0))
        spacing = horizon / n if n else 0.0
        triggers = [(i + 0.5) * spacing for i in range(n)]

    rate_star = break_even_rate(duty, harvest)
    result = simulate_duty_cycle(duty, harvest, cfg.battery, horizon, triggers, soc0=args.soc0)
    out = _outdir(args, cfg)
    emit_csv(
        out / "soc.csv",
        ["t_s", "soc", "v_batt_V", "mode"],
        zip(result.trace.t, result.trace.soc, result.trace.v_batt, result.trace.mode),
    )
    write_metadata(
        out / "soc.meta.json",
        {
            "command": "budget",
            "version": __version__,
            "harvest_mw": args.harvest_mw,
            "monitor_mw": duty.monitor_power * 1e3,
            "monitor_s": duty.monitor_duration,
            "sleep_mw": duty.sleep_power * 1e3,
            "horizon_h": args.horizon_h,
            "n_triggers": len(triggers),
            "soc0": args.soc0,
        },
    )
    if rate_star == 0.0:
        print("break-even rate: none (harvest does not cover standby; never self-sustaining)")
    elif math.isinf(rate_star):
        print("break-even rate: unlimited (harvest exceeds monitoring draw)")
    else:
        print(f"break-even rate: {rate_star:.2f} events/day (largest sustainable count: {math.floor(rate_star)})")
    n_mon = sum(1 for s in result.segments if s[2] == "monitoring")
    n_chg = sum(1 for s in result.segments if s[2] == "charging")
    print(f"segments: {n_mon} monitoring, {n_chg} charging")
    print(f"SoC: {result.soc_start:.4f} -> {result.soc_end:.6f}")
    if result.brownout_t is not None:
        print(f"brownout at t = {result.brownout_t:.1f} s")
    print(f"verdict: {'self-sustaining' if result.self_sustaining else 'not self-sustaining'}")
    return 0


def _cmd_spectrogram(args) -> int:
    cfg = _load_cfg(args)
    exc = load_acceleration_csv(args.input)
    window_len = int(round(args.window_s * exc.fs))
    spec = stft_spectrogram(exc.a, exc.fs, window_len, overlap=args.overlap)
    out = _outdir(args, cfg)
    nt, nf = spec.magnitude.shape
    rows = zip(
        np.repeat(spec.t_centers, nf),
        np.tile(spec.f_bins, nt),
        spec.magnitude.reshape(-1),
    )
    emit_csv(out / "spectrogram.csv", ["t_s", "f_Hz", "power"], rows)
    write_metadata(
        out / "spectrogram.meta.json",
        {
            "command": "spectrogram",
            "version": __version__,
            "input": str(args.input),
            "window_s": args.window_s,
            "overlap": args.overlap,
            "fs_hz": exc.fs,
        },
    )
    print(f"spectrogram: {nt} frames x {nf} bins (window {window_len} samples)")
    return 0


def _add_global_flags(p: argparse.ArgumentParser, suppress: bool) -> None:
    # the same flags exist on the main parser and on every subcommand; the
    # subcommand copies default to SUPPRESS so they only override when typed
    d = argparse.SUPPRESS if suppress else None
    p.add_argument("--config", default=d, help="INI config file (defaults apply when omitted)")
    p.add_argument("--out", default=d, help="output directory (default: config output_dir or '.')")
    p.add_argument(
        "--seed",
        type=int,
        default=argparse.SUPPRESS if suppress else 0,
        help="seed for stochastic operations",
    )
    p.add_argument(
        "--strict",
        action="store_true",
        default=argparse.SUPPRESS if suppress else False,
        help="reject unknown config keys",
    )


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="piezowim",
        description="Desk-scale simulation of a self-powered weigh-in-motion sensing node.",
    )
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    _add_global_flags(p, suppress=False)
    shared = argparse.ArgumentParser(add_help=False)
    _add_global_flags(shared, suppress=True)
    sub = p.add_subparsers(dest="command", required=True, parser_class=argparse.ArgumentParser)

    sp = sub.add_parser("modal", parents=[shared], help="short- and open-circuit natural frequencies")
    sp.add_argument("--n-modes", type=int, default=5)
    sp.add_argument("--tip-mass-g", type=float, help="override config tip mass (0 removes it)")
    sp.set_defaults(func=_cmd_modal)

    sp = sub.add_parser("frf", parents=[shared], help="voltage and tip-velocity FRFs vs frequency")
    sp.add_argument("--rl-ohm", type=float, default=100.0, help="load resistance (inf allowed)")
    sp.add_argument("--fmin", type=float, default=40.0)
    sp.add_argument("--fmax", type=float, default=120.0)
    sp.add_argument("--points", type=int, default=801)
    sp.add_argument("--n-modes", type=int, default=5)
    sp.add_argument("--tip-mass-g", type=float)
    sp.set_defaults(func=_cmd_frf)

    sp = sub.add_parser("timesim", parents=[shared], help="coupled time integration under base excitation")
    group = sp.add_mutually_exclusive_group(required=True)
    group.add_argument("--excitation", help="acceleration CSV (t_s, a_mps2)")
    group.add_argument("--harmonic", help="'freq_hz,amplitude_g' steady sine")
    sp.add_argument("--rl-ohm", type=float, default=100.0)
    sp.add_argument("--dt", type=float, help="time step (default: 1/(40 f1))")
    sp.add_argument("--duration", type=float, help="simulated span in s")
    sp.add_argument("--tip-mass-g", type=float)
    sp.set_defaults(func=_cmd_timesim)

    sp = sub.add_parser("tune-mass", parents=[shared], help="find the tip mass that hits a target f1")
    sp.add_argument("--target-hz", type=float, required=True)
    sp.add_argument("--mass-min-g", type=float, default=1.0)
    sp.add_argument("--mass-max-g", type=float, default=200.0)
    sp.add_argument("--tol-hz", type=float, default=0.01)
    sp.set_defaults(func=_cmd_tune_mass)

    sp = sub.add_parser("wim-sim", parents=[shared], help="synthesize a pavement readout trace")
    sp.add_argument("--events", help="events CSV (t_start_s, t_end_s, peak_strain)")
    sp.add_argument("--noise-rms", type=float, default=0.015, help="readout noise on V_k (V)")
    sp.add_argument("--visco-tau", type=float, default=2.0, help="relaxation time constant (s)")
    sp.add_argument("--record-s", type=float, help="override record span in seconds")
    sp.add_argument("--strain-out", help="also write the true strain series to this CSV name")
    sp.set_defaults(func=_cmd_wim_sim)

    sp = sub.add_parser("fit-gf", parents=[shared], help="regress gauge factor from strain / dR/R series")
    sp.add_argument("--strain", required=True, help="CSV with a 'strain' column")
    sp.add_argument("--drr", required=True, help="CSV with a 'dRR' column")
    sp.set_defaults(func=_cmd_fit_gf)

    sp = sub.add_parser("budget", parents=[shared], help="duty-cycle energy ledger and verdict")
    sp.add_argument("--harvest-mw", type=float, required=True)
    sp.add_argument("--monitor-mw", type=float)
    sp.add_argument("--monitor-s", type=float)
    sp.add_argument("--sleep-mw", type=float)
    group = sp.add_mutually_exclusive_group()
    group.add_argument("--events-per-day", type=float)
    group.add_argument("--triggers", help="events CSV; t_start_s column provides triggers")
    sp.add_argument("--horizon-h", type=float, default=24.0)
    sp.add_argument("--soc0", type=float, default=0.5)
    sp.set_defaults(func=_cmd_budget)

    sp = sub.add_parser("spectrogram", parents=[shared], help="STFT of an acceleration record")
    sp.add_argument("--input", required=True, help="acceleration CSV (t_s, a_mps2)")
    sp.add_argument("--window-s", type=float, default=2.0)
    sp.add_argument("--overlap", type=float, default=0.5)
    sp.set_defaults(func=_cmd_spectrogram)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, ValueError, RuntimeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def run() -> None:
    sys.exit(main())
