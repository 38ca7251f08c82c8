"""Software model of a programmable SHM ultrasound transceiver and its
damage-localization pipeline."""

__version__ = "0.1.0"

from .dispersion import (  # noqa: E402
    DispersionCurve,
    MaterialPlate,
    Mode,
    RootNotFoundError,
    build_curve,
    rayleigh_lamb_residual,
    solve_phase_velocity,
)
from .excitation import (  # noqa: E402
    ExcitationSpec,
    FrameModel,
    LcFilterSpec,
    PwmProgram,
    apply_lc_filter,
    fundamental_amplitude,
    optimize_pulse_widths,
    pwm_waveform,
    reference_waveform,
)
from .localization import DamageMap, GridSpec, baseline_subtract, das_map, envelope, locate  # noqa: E402
from .plate import MeasurementSet, PlateScenario, path_delay, propagate, synthesize_measurements  # noqa: E402
from .receiver import (  # noqa: E402
    ReceiverConfig,
    auto_zero,
    lna_stage,
    magnitude_phase,
    pga_stage,
    quadrature_demod,
    receive,
)
from .signals import IQTrace, SignalTrace  # noqa: E402
from .synthesizer import LoopReport, SynthConfig, design_loop, open_loop_gain, simulate_lock  # noqa: E402

__all__ = [
    "__version__",
    "DispersionCurve",
    "MaterialPlate",
    "Mode",
    "RootNotFoundError",
    "build_curve",
    "rayleigh_lamb_residual",
    "solve_phase_velocity",
    "ExcitationSpec",
    "FrameModel",
    "LcFilterSpec",
    "PwmProgram",
    "apply_lc_filter",
    "fundamental_amplitude",
    "optimize_pulse_widths",
    "pwm_waveform",
    "reference_waveform",
    "DamageMap",
    "GridSpec",
    "baseline_subtract",
    "das_map",
    "envelope",
    "locate",
    "MeasurementSet",
    "PlateScenario",
    "path_delay",
    "propagate",
    "synthesize_measurements",
    "ReceiverConfig",
    "auto_zero",
    "lna_stage",
    "magnitude_phase",
    "pga_stage",
    "quadrature_demod",
    "receive",
    "IQTrace",
    "SignalTrace",
    "LoopReport",
    "SynthConfig",
    "design_loop",
    "open_loop_gain",
    "simulate_lock",
]
