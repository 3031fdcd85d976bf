"""Config parsing, CSV ingestion/emission, and spectrogram export.

Configs are INI-style key=value text with explicit unit suffixes in the key
names (length_mm, Ys_GPa, monitor_mW, ...), converted to strict SI on
ingest. A file without section headers is read as the [harvester] section.
The raw strings of every accepted key are kept, so serializing a parsed
config reproduces it without any float round-trip drift.

CSV output is RFC-4180 style with '.' decimals, '\\n' line endings, floats at
17 significant digits, written atomically (temp file + rename) so a failed
run never leaves a partial file. Data files carry no timestamps; run
metadata goes to a separate .meta.json sidecar.
"""

from __future__ import annotations

import configparser
import csv
import json
import math
import os
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .budget import BatterySpec, DutyCycleSpec
from .harvester import HarvesterSpec, TipMass, reference_bimorph
from .pavement import LoadEvent, PavementSpec, SensingCircuit
from .response import SampledExcitation

__all__ = [
    "ConfigError",
    "RunConfig",
    "parse_config",
    "load_config",
    "serialize_config",
    "load_acceleration_csv",
    "load_events_csv",
    "load_column_csv",
    "emit_csv",
    "write_metadata",
    "export_system_matrices",
    "Spectrogram",
    "stft_spectrogram",
]


class ConfigError(ValueError):
    """Raised for malformed, unknown, or out-of-range config content."""


# key -> (spec attribute, multiplier to SI, integer-valued?)
_HARVESTER_KEYS = {
    "length_mm": ("L", 1e-3, False),
    "width_mm": ("b", 1e-3, False),
    "h_s_mm": ("h_s", 1e-3, False),
    "h_p_mm": ("h_p", 1e-3, False),
    "Ys_GPa": ("Y_s", 1e9, False),
    "c11_GPa": ("c11", 1e9, False),
    "rho_s": ("rho_s", 1.0, False),
    "rho_p": ("rho_p", 1.0, False),
    "e31": ("e31", 1.0, False),
    "eps33_nF_per_m": ("eps33", 1e-9, False),
    "zeta": ("zeta", 1.0, False),
    "n_elements": ("n_elements", 1.0, True),
}
_TIP_KEYS = {
    "tip_mass_g": ("M_t", 1e-3, False),
    "tip_la_mm": ("l_a", 1e-3, False),
    "tip_lb_mm": ("l_b", 1e-3, False),
}
_PAVEMENT_KEYS = {
    "R0_ohm": ("R0", 1.0, False),
    "gauge_factor": ("gauge_factor", 1.0, False),
    "nu": ("nu", 1.0, False),
}
_CIRCUIT_KEYS = {
    "V_supply": ("V_supply", 1.0, False),
    "Rk_ohm": ("R_k", 1.0, False),
    "fs_hz": ("fs", 1.0, False),
    "record_len": ("record_len", 1.0, True),
}
_BATTERY_KEYS = {
    "capacity_Ah": ("capacity", 1.0, False),
    "nominal_V": ("nominal_V", 1.0, False),
    "v_full": ("v_full", 1.0, False),
    "v_empty": ("v_empty", 1.0, False),
    "charge_eff": ("charge_eff", 1.0, False),
}
_DUTY_KEYS = {
    "monitor_mW": ("monitor_power", 1e-3, False),
    "monitor_s": ("monitor_duration", 1.0, False),
    "sleep_mW": ("sleep_power", 1e-3, False),
    "events_per_day": ("events_per_day", 1.0, False),
}
_SECTION_KEYS = {
    "harvester": {**_HARVESTER_KEYS, **_TIP_KEYS},
    "pavement": _PAVEMENT_KEYS,
    "circuit": _CIRCUIT_KEYS,
    "battery": _BATTERY_KEYS,
    "duty": _DUTY_KEYS,
    "run": {"output_dir": None},
}
_SECTION_ORDER = ["harvester", "pavement", "circuit", "battery", "duty", "run"]


@dataclass(frozen=True)
class RunConfig:
    """Typed view of one run configuration.

    `raw` keeps the accepted key=value strings per section; it is excluded
    from equality so two configs compare by what they mean, not how they
    were spelled.
    """

    harvester: HarvesterSpec
    tip: TipMass | None
    pavement: PavementSpec
    circuit: SensingCircuit
    battery: BatterySpec
    duty: DutyCycleSpec
    output_dir: str = "."
    raw: dict = field(default_factory=dict, compare=False, repr=False)


def _coerce(section: str, key: str, value: str, si_factor: float, integer: bool):
    try:
        v = float(value)
    except ValueError:
        raise ConfigError(f"[{section}] {key}: not a number: {value!r}") from None
    if not math.isfinite(v):
        raise ConfigError(f"[{section}] {key}: non-finite value {value!r}")
    v *= si_factor
    if integer:
        if not float(v).is_integer():
            raise ConfigError(f"[{section}] {key}: expected an integer, got {value!r}")
        return int(v)
    return v


def parse_config(text: str, strict: bool = False) -> RunConfig:
    """Parse INI-style config text into a RunConfig.

    Unknown keys raise ConfigError in strict mode and warn otherwise.
    Missing sections or keys fall back to the reference defaults.
    """
    has_section = any(line.lstrip().startswith("[") for line in text.splitlines())
    if not has_section:
        text = "[harvester]\n" + text
    cp = configparser.ConfigParser(interpolation=None)
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"config syntax: {exc}") from None

    raw: dict[str, dict[str, str]] = {}
    values: dict[str, dict[str, float | int]] = {s: {} for s in _SECTION_KEYS}
    output_dir = "."
    for section in cp.sections():
        if section not in _SECTION_KEYS:
            msg = f"unknown config section [{section}]"
            if strict:
                raise ConfigError(msg)
            warnings.warn(msg, RuntimeWarning, stacklevel=2)
            continue
        known = _SECTION_KEYS[section]
        raw[section] = {}
        for key, value in cp.items(section):
            # configparser lowercases by default; recover exact spelling
            if key not in {k.lower() for k in known}:
                msg = f"unknown key {key!r} in [{section}]"
                if strict:
                    raise ConfigError(msg)
                warnings.warn(msg, RuntimeWarning, stacklevel=2)
                continue
            canonical = next(k for k in known if k.lower() == key)
            raw[section][canonical] = value
            if section == "run":
                output_dir = value
                continue
            attr, si, integer = known[canonical]
            values[section][attr] = _coerce(section, canonical, value, si, integer)

    try:
        harv_over = {k: v for k, v in values["harvester"].items() if k not in ("M_t", "l_a", "l_b")}
        harvester = reference_bimorph(**harv_over)
        tip_vals = {k: v for k, v in values["harvester"].items() if k in ("M_t", "l_a", "l_b")}
        tip = None
        if tip_vals.get("M_t", 0.0) > 0.0:
            tip = TipMass(**tip_vals)
        pavement = PavementSpec(**values["pavement"])
        circuit = SensingCircuit(**values["circuit"])
        battery = BatterySpec(**values["battery"])
        duty = DutyCycleSpec(**values["duty"])
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None
    return RunConfig(
        harvester=harvester,
        tip=tip,
        pavement=pavement,
        circuit=circuit,
        battery=battery,
        duty=duty,
        output_dir=output_dir,
        raw=raw,
    )


def load_config(path, strict: bool = False) -> RunConfig:
    return parse_config(Path(path).read_text(), strict=strict)


def serialize_config(cfg: RunConfig) -> str:
    """Render a parsed config back to INI text.

    Emits exactly the keys that were accepted at parse time, with their
    original value strings, so parse -> serialize -> parse is the identity
    on the typed structure.
    """
    lines = []
    for section in _SECTION_ORDER:
        if section not in cfg.raw or not cfg.raw[section]:
            continue
        lines.append(f"[{section}]")
        for key, value in cfg.raw[section].items():
            lines.append(f"{key} = {value}")
        lines.append("")
    return "\n".join(lines)


def _parse_error(path, line_no: int, msg: str) -> ValueError:
    return ValueError(f"{path}:{line_no}: {msg}")


def load_acceleration_csv(path) -> SampledExcitation:
    """Read a two-column acceleration record (t_s, a_mps2) with header.

    Enforces strictly increasing time and uniform spacing within 1e-6
    relative; all failures name the offending line.
    """
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise _parse_error(path, 1, "empty file") from None
        if [h.strip() for h in header[:2]] != ["t_s", "a_mps2"]:
            raise _parse_error(path, 1, f"expected header t_s,a_mps2, got {','.join(header)!r}")
        t, a = [], []
        for line_no, row in enumerate(reader, start=2):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) < 2:
                raise _parse_error(path, line_no, f"expected 2 columns, got {len(row)}")
            try:
                ti, ai = float(row[0]), float(row[1])
            except ValueError:
                raise _parse_error(path, line_no, f"not numeric: {','.join(row)!r}") from None
            if not (math.isfinite(ti) and math.isfinite(ai)):
                raise _parse_error(path, line_no, "non-finite sample")
            if t and ti <= t[-1]:
                raise _parse_error(path, line_no, f"time not strictly increasing ({t[-1]!r} -> {ti!r})")
            t.append(ti)
            a.append(ai)
    if len(t) < 2:
        raise _parse_error(path, len(t) + 1, "insufficient samples (need at least 2 rows)")
    t_arr = np.asarray(t)
    dt = np.diff(t_arr)
    bad = np.nonzero(np.abs(dt - dt[0]) > 1e-6 * dt[0])[0]
    if bad.size:
        raise _parse_error(
            path, int(bad[0]) + 3, f"non-uniform sampling (dt {dt[bad[0]]!r} vs {dt[0]!r})"
        )
    return SampledExcitation(t=t_arr, a=np.asarray(a))


def load_events_csv(path) -> list[LoadEvent]:
    """Read load events (t_start_s, t_end_s, peak_strain) with header."""
    path = Path(path)
    events = []
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise _parse_error(path, 1, "empty file") from None
        if [h.strip() for h in header[:3]] != ["t_start_s", "t_end_s", "peak_strain"]:
            raise _parse_error(
                path, 1, f"expected header t_start_s,t_end_s,peak_strain, got {','.join(header)!r}"
            )
        for line_no, row in enumerate(reader, start=2):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) < 3:
                raise _parse_error(path, line_no, f"expected 3 columns, got {len(row)}")
            try:
                ev = LoadEvent(float(row[0]), float(row[1]), float(row[2]))
            except ValueError as exc:
                raise _parse_error(path, line_no, str(exc)) from None
            events.append(ev)
    return events


def load_column_csv(path, column: str) -> np.ndarray:
    """Read one named column from a headered CSV into a float array."""
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise _parse_error(path, 1, "empty file") from None
        if column not in header:
            raise _parse_error(path, 1, f"no column {column!r} in header {header!r}")
        idx = header.index(column)
        out = []
        for line_no, row in enumerate(reader, start=2):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            try:
                out.append(float(row[idx]))
            except (IndexError, ValueError):
                raise _parse_error(path, line_no, f"bad value in column {column!r}") from None
    return np.asarray(out)


def _format_cell(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    return str(v)


def emit_csv(path, header, rows) -> None:
    """Write a rectangular table atomically as deterministic CSV.

    Floats render at 17 significant digits; the file appears only after a
    complete write (temp file then rename), so consumers never see partial
    output.
    """
    header = list(header)
    if not header or any(not str(h) for h in header):
        raise ValueError("header names must be non-empty")
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    try:
        with tmp.open("w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(header)
            for row in rows:
                cells = [_format_cell(v) for v in row]
                if len(cells) != len(header):
                    raise ValueError(f"row width {len(cells)} does not match header width {len(header)}")
                writer.writerow(cells)
        os.replace(tmp, path)
    finally:
        tmp.unlink(missing_ok=True)


def export_system_matrices(sys_, directory) -> None:
    """Dump the assembled M, C, K, Theta operators as row-major debug CSVs.

    One file per operator (M.csv, C.csv, K.csv, Theta.csv) with generic
    column headers; meant for inspecting an assembly, not as a data format.
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    n = sys_.n_dof
    header = [f"c{j}" for j in range(n)]
    for name, mat in (("M", sys_.M), ("C", sys_.C), ("K", sys_.K)):
        emit_csv(directory / f"{name}.csv", header, mat)
    emit_csv(directory / "Theta.csv", ["theta"], ((v,) for v in sys_.Theta))


def write_metadata(path, payload: dict) -> None:
    """Sidecar JSON with run parameters. Deliberately no timestamps."""
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    try:
        tmp.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
        os.replace(tmp, path)
    finally:
        tmp.unlink(missing_ok=True)


@dataclass(eq=False)
class Spectrogram:
    """One-sided short-time power spectra.

    magnitude[i, k] is the scaled |X_k|^2 of frame i such that a row sums to
    that frame's windowed energy (doubled interior bins, single DC/Nyquist),
    which is what makes the Parseval check in the tests a pure identity.
    """

    t_centers: np.ndarray  # s
    f_bins: np.ndarray  # Hz
    magnitude: np.ndarray  # (n_frames, n_bins)


def stft_spectrogram(x, fs: float, window_len: int, overlap: float = 0.5) -> Spectrogram:
    """Hann-windowed short-time Fourier magnitude of a sampled series.

    window_len is in samples; overlap is the fractional window overlap
    (default 50%). Raises when the window does not fit in the signal.
    """
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise ValueError("signal must be 1-d")
    if fs <= 0.0:
        raise ValueError("sampling rate must be positive")
    window_len = int(window_len)
    if window_len < 2:
        raise ValueError("window_len must be at least 2 samples")
    if window_len > x.size:
        raise ValueError(f"window ({window_len} samples) longer than the signal ({x.size})")
    if not (0.0 <= overlap < 1.0):
        raise ValueError(f"overlap must lie in [0, 1), got {overlap!r}")

    hop = max(1, int(round(window_len * (1.0 - overlap))))
    w = np.hanning(window_len)
    n_frames = 1 + (x.size - window_len) // hop
    n_bins = window_len // 2 + 1
    mag = np.empty((n_frames, n_bins))
    scale = np.full(n_bins, 2.0 / window_len)
    scale[0] = 1.0 / window_len
    if window_len % 2 == 0:
        scale[-1] = 1.0 / window_len
    for i in range(n_frames):
        frame = x[i * hop : i * hop + window_len] * w
        mag[i] = scale * np.abs(np.fft.rfft(frame)) ** 2
    t_centers = (np.arange(n_frames) * hop + 0.5 * window_len) / fs
    f_bins = np.fft.rfftfreq(window_len, d=1.0 / fs)
    return Spectrogram(t_centers=t_centers, f_bins=f_bins, magnitude=mag)
