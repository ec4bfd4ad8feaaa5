"""Slow and fast light in a three-level Lambda medium with a dark resonance."""

__version__ = "0.1.0"

from .calibration import (  # noqa: E402
    Anchor,
    AnchorSet,
    CalibrationError,
    CalibrationResult,
    Observable,
    calibrate_from_anchors,
    calibrated,
    reference_anchors,
)
from .params import (  # noqa: E402
    AtomParams,
    Calibration,
    CellParams,
    ConfigError,
    FieldParams,
    SystemParams,
    convert,
    default_params,
    load_config,
    power_to_rabi,
)
from .pulse import (  # noqa: E402
    PulseEnvelope,
    WraparoundError,
    fit_gaussian,
    gaussian_pulse,
    measure_delay,
    propagate,
    read_pulse_csv,
    write_pulse_csv,
)
from .resonance import (  # noqa: E402
    DelayMethod,
    DelayResult,
    ResonanceKind,
    ResonanceShape,
    Spectrum,
    characterize_resonance,
    delay_analytic,
    delay_fast_asymptote,
    delay_slow_asymptote,
    eit_width,
    group_delay_numeric,
    group_index_from_delay,
    locate_extremum,
    phase_budget,
    transmission_spectrum,
)
from .steady_state import DensityMatrix, SingularSystemError, steady_state, susceptibility  # noqa: E402

__all__ = [name for name in dir() if not name.startswith("_")]
