"""piezowim: simulation toolkit for a self-powered weigh-in-motion node.

Covers the full chain: bimorph cantilever harvester finite elements and
modal analysis, coupled electromechanical frequency/time response,
piezoresistive pavement readout, and the battery duty-cycle energy budget,
plus a CLI that binds them together.
"""

from .budget import (
    BatterySpec,
    DutyCycleResult,
    DutyCycleSpec,
    RectifierSpec,
    SoCTrace,
    break_even_rate,
    capacitive_source_impedance,
    rectified_current,
    rectify_trace,
    simulate_duty_cycle,
)
from .harvester import (
    AssembledSystem,
    HarvesterSpec,
    SectionProperties,
    TipMass,
    assemble,
    element_matrices,
    homogenized_section,
    reference_bimorph,
    tip_mass_inertia,
)
from .io import (
    ConfigError,
    RunConfig,
    Spectrogram,
    emit_csv,
    export_system_matrices,
    load_acceleration_csv,
    load_column_csv,
    load_config,
    load_events_csv,
    parse_config,
    serialize_config,
    stft_spectrogram,
    write_metadata,
)
from .modal import ModalBasis, open_circuit_modes, short_circuit_modes
from .pavement import (
    LoadEvent,
    PavementSpec,
    SensingCircuit,
    WimTrace,
    detect_events,
    divider_forward,
    dRR_decomposition,
    dRR_from_strain,
    fit_gauge_factor,
    reference_pavement,
    resistance_from_readout,
    synthesize_wim_trace,
)
from .response import (
    G_ACCEL,
    ChirpExcitation,
    FrfResult,
    HarmonicExcitation,
    SampledExcitation,
    TimeSimResult,
    average_power,
    h1_frf,
    series_chain,
    time_integrate,
    tip_velocity_frf,
    tune_tip_mass,
    voltage_frf,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    # harvester
    "HarvesterSpec",
    "TipMass",
    "SectionProperties",
    "AssembledSystem",
    "reference_bimorph",
    "homogenized_section",
    "element_matrices",
    "tip_mass_inertia",
    "assemble",
    # modal
    "ModalBasis",
    "short_circuit_modes",
    "open_circuit_modes",
    # response
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
    # pavement
    "PavementSpec",
    "SensingCircuit",
    "LoadEvent",
    "WimTrace",
    "reference_pavement",
    "dRR_from_strain",
    "dRR_decomposition",
    "divider_forward",
    "resistance_from_readout",
    "synthesize_wim_trace",
    "fit_gauge_factor",
    "detect_events",
    # budget
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
    # io
    "ConfigError",
    "RunConfig",
    "Spectrogram",
    "parse_config",
    "load_config",
    "serialize_config",
    "load_acceleration_csv",
    "load_events_csv",
    "load_column_csv",
    "emit_csv",
    "export_system_matrices",
    "write_metadata",
    "stft_spectrogram",
]
