"""Physical parameters, unit conversion and the power -> Rabi frequency map.

Everything inside the package is SI with angular frequencies (rad/s).
Conversions happen only when reading configs or writing CSV.

Rabi-frequency convention
-------------------------
``Omega`` and the probe ``alpha`` are *half* Rabi frequencies: the
interaction Hamiltonian is ``-hbar (Omega |a><c| + alpha |a><b| + h.c.)``.
With this choice the weak-probe coherence reads
``i (g0 - i d) / ((g - i D_p)(g0 - i d) + Omega**2)`` and the slow-light
delay at one-photon resonance is exactly ``K / Omega**2`` with
``K = 3/(8 pi) N lambda^2 L gamma_r``.  This is the only place the
convention is stated; all modules use it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from pathlib import Path

TWO_PI = 2.0 * math.pi
SPEED_OF_LIGHT = 299_792_458.0


class ConfigError(ValueError):
    """Bad configuration input (unknown key, unparsable value, bad unit)."""


# ---------------------------------------------------------------------------
# units
# ---------------------------------------------------------------------------

# unit -> (dimension, factor to SI)
_UNITS = {
    "rad/s": ("angular_frequency", 1.0),
    "Hz": ("angular_frequency", TWO_PI),
    "kHz": ("angular_frequency", TWO_PI * 1e3),
    "MHz": ("angular_frequency", TWO_PI * 1e6),
    "GHz": ("angular_frequency", TWO_PI * 1e9),
    "W": ("power", 1.0),
    "mW": ("power", 1e-3),
    "uW": ("power", 1e-6),
    "µW": ("power", 1e-6),
    "m^-3": ("density", 1.0),
    "cm^-3": ("density", 1e6),
    "s": ("time", 1.0),
    "ms": ("time", 1e-3),
    "us": ("time", 1e-6),
    "µs": ("time", 1e-6),
    "m": ("length", 1.0),
    "cm": ("length", 1e-2),
    "mm": ("length", 1e-3),
    "nm": ("length", 1e-9),
}


def convert(value, from_unit: str, to_unit: str):
    """Convert ``value`` between two units of the same dimension.

    Frequencies in Hz/kHz/GHz are ordinary frequencies and map to rad/s
    with a factor 2 pi.  Works on scalars and numpy arrays.
    """
    try:
        dim_from, f_from = _UNITS[from_unit]
        dim_to, f_to = _UNITS[to_unit]
    except KeyError as exc:
        raise ValueError(f"unsupported unit {exc.args[0]!r}") from None
    if dim_from != dim_to:
        raise ValueError(f"cannot convert {from_unit} ({dim_from}) to {to_unit} ({dim_to})")
    if f_from == f_to:
        return value * 1.0
    return value * (f_from / f_to)


# ---------------------------------------------------------------------------
# parameter records
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AtomParams:
    """Wavelength and relaxation rates of the Lambda system (rad/s)."""

    wavelength: float
    gamma_r: float
    gamma: float
    gamma_0: float
    doppler_width: float

    def __post_init__(self):
        for name in ("wavelength", "gamma_r", "gamma", "gamma_0", "doppler_width"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise ValueError(f"{name} must be positive and finite, got {v!r}")
        if self.gamma < self.gamma_r / 2 + self.gamma_0 / 4:
            raise ValueError("gamma must be at least gamma_r/2 + gamma_0/4 (non-negative pure dephasing)")
        if self.gamma_0 >= self.gamma:
            raise ValueError("gamma_0 must be smaller than gamma")

    @property
    def omega(self) -> float:
        """Optical carrier angular frequency."""
        return TWO_PI * SPEED_OF_LIGHT / self.wavelength


@dataclass(frozen=True)
class CellParams:
    density: float
    length: float

    def __post_init__(self):
        if not (math.isfinite(self.density) and self.density >= 0):
            raise ValueError(f"density must be >= 0, got {self.density!r}")
        if not (math.isfinite(self.length) and self.length > 0):
            raise ValueError(f"length must be > 0, got {self.length!r}")


@dataclass(frozen=True)
class FieldParams:
    """Drive Rabi frequency and detunings (rad/s)."""

    Omega: float = 0.0
    Delta: float = 0.0
    delta: float = 0.0
    probe_power_fraction: float = 0.07

    def __post_init__(self):
        if not (math.isfinite(self.Omega) and self.Omega >= 0):
            raise ValueError(f"Omega must be >= 0, got {self.Omega!r}")
        if not (0 < self.probe_power_fraction < 0.5):
            raise ValueError("probe_power_fraction must lie in (0, 0.5)")
        if not (math.isfinite(self.Delta) and math.isfinite(self.delta)):
            raise ValueError("detunings must be finite")


@dataclass(frozen=True)
class Calibration:
    k_rabi: float
    gamma_0_fit: float

    def __post_init__(self):
        if not (self.k_rabi > 0 and self.gamma_0_fit > 0):
            raise ValueError("calibration constants must be positive")


@dataclass(frozen=True)
class SystemParams:
    atom: AtomParams
    cell: CellParams
    field: FieldParams = field(default_factory=FieldParams)

    def with_field(self, **changes) -> "SystemParams":
        return replace(self, field=replace(self.field, **changes))

    def with_atom(self, **changes) -> "SystemParams":
        return replace(self, atom=replace(self.atom, **changes))

    def with_cell(self, **changes) -> "SystemParams":
        return replace(self, cell=replace(self.cell, **changes))

    def with_calibration(self, cal: Calibration) -> "SystemParams":
        return self.with_atom(gamma_0=cal.gamma_0_fit)

    def at_power(self, total_power: float, cal: Calibration, Delta: float | None = None) -> "SystemParams":
        """Set the drive Rabi frequency from the total optical power (W)."""
        drive = (1.0 - self.field.probe_power_fraction) * total_power
        changes = {"Omega": power_to_rabi(drive, cal)}
        if Delta is not None:
            changes["Delta"] = Delta
        return self.with_field(**changes)

    def probe_rabi(self) -> float:
        """Probe Rabi frequency implied by the power split and the drive."""
        f = self.field.probe_power_fraction
        return self.field.Omega * math.sqrt(f / (1.0 - f))

    @property
    def delay_scale(self) -> float:
        """K = 3/(8 pi) N lambda^2 L gamma_r, in rad^2/s; slow delay is K/Omega^2."""
        a, c = self.atom, self.cell
        return 3.0 / (8.0 * math.pi) * c.density * a.wavelength**2 * c.length * a.gamma_r


def power_to_rabi(power: float, cal: Calibration) -> float:
    """Drive Rabi frequency (rad/s) for a drive power in W: k_rabi * sqrt(P)."""
    if power < 0 or not math.isfinite(power):
        raise ValueError(f"power must be a finite non-negative number, got {power!r}")
    return cal.k_rabi * math.sqrt(power)


# ---------------------------------------------------------------------------
# defaults
# ---------------------------------------------------------------------------

DEFAULT_WAVELENGTH_NM = 795.0
DEFAULT_CELL_LENGTH_CM = 2.5
DEFAULT_DENSITY_CM3 = 4.7e11
DEFAULT_PROBE_FRACTION = 0.07
# Rb D1 natural width
DEFAULT_GAMMA_R_HZ = 5.75e6
# placeholder; must satisfy Omega^2 >> gamma*gamma_0 at the 145 uW anchor
DEFAULT_GAMMA_HZ = 10e6
DEFAULT_GAMMA0_HZ = 1e3
DEFAULT_DOPPLER_WIDTH_HZ = 500e6


def default_params() -> SystemParams:
    atom = AtomParams(
        wavelength=convert(DEFAULT_WAVELENGTH_NM, "nm", "m"),
        gamma_r=convert(DEFAULT_GAMMA_R_HZ, "Hz", "rad/s"),
        gamma=convert(DEFAULT_GAMMA_HZ, "Hz", "rad/s"),
        gamma_0=convert(DEFAULT_GAMMA0_HZ, "Hz", "rad/s"),
        doppler_width=convert(DEFAULT_DOPPLER_WIDTH_HZ, "Hz", "rad/s"),
    )
    cell = CellParams(
        density=convert(DEFAULT_DENSITY_CM3, "cm^-3", "m^-3"),
        length=convert(DEFAULT_CELL_LENGTH_CM, "cm", "m"),
    )
    return SystemParams(atom, cell, FieldParams(probe_power_fraction=DEFAULT_PROBE_FRACTION))


# ---------------------------------------------------------------------------
# config files
# ---------------------------------------------------------------------------

CONFIG_KEYS = (
    "lambda_nm",
    "cell_length_cm",
    "density_cm3",
    "gamma_r_hz",
    "gamma_hz",
    "gamma0_hz",
    "doppler_width_hz",
    "probe_fraction",
    "k_rabi",
    "total_power_uw",
    "delta_one_photon_ghz",
)


@dataclass(frozen=True)
class Config:
    """Parsed config: system parameters plus the operating point.

    ``calibration`` is None unless ``k_rabi`` was given; callers then
    calibrate against the reference delay/width values.
    """

    params: SystemParams
    calibration: Calibration | None
    total_power: float | None
    Delta: float | None
    raw: dict

    @property
    def gamma0_given(self) -> bool:
        return "gamma0_hz" in self.raw


def parse_config(text: str) -> dict:
    """Parse flat ``key = value`` text. ``#`` starts a comment."""
    values = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, _, raw = line.partition("=")
        key = key.strip()
        if key not in CONFIG_KEYS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        try:
            values[key] = float(raw.strip())
        except ValueError:
            raise ConfigError(f"line {lineno}: value for {key!r} is not a number: {raw.strip()!r}") from None
    return values


def config_from_values(values: dict) -> Config:
    v = {k: values[k] for k in values}
    unknown = set(v) - set(CONFIG_KEYS)
    if unknown:
        raise ConfigError(f"unknown keys: {sorted(unknown)}")
    try:
        atom = AtomParams(
            wavelength=convert(v.get("lambda_nm", DEFAULT_WAVELENGTH_NM), "nm", "m"),
            gamma_r=convert(v.get("gamma_r_hz", DEFAULT_GAMMA_R_HZ), "Hz", "rad/s"),
            gamma=convert(v.get("gamma_hz", DEFAULT_GAMMA_HZ), "Hz", "rad/s"),
            gamma_0=convert(v.get("gamma0_hz", DEFAULT_GAMMA0_HZ), "Hz", "rad/s"),
            doppler_width=convert(v.get("doppler_width_hz", DEFAULT_DOPPLER_WIDTH_HZ), "Hz", "rad/s"),
        )
        cell = CellParams(
            density=convert(v.get("density_cm3", DEFAULT_DENSITY_CM3), "cm^-3", "m^-3"),
            length=convert(v.get("cell_length_cm", DEFAULT_CELL_LENGTH_CM), "cm", "m"),
        )
        fieldp = FieldParams(probe_power_fraction=v.get("probe_fraction", DEFAULT_PROBE_FRACTION))
        cal = None
        if "k_rabi" in v:
            cal = Calibration(k_rabi=v["k_rabi"], gamma_0_fit=atom.gamma_0)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    power = v.get("total_power_uw")
    if power is not None and power < 0:
        raise ConfigError("total_power_uw must be >= 0")
    return Config(
        params=SystemParams(atom, cell, fieldp),
        calibration=cal,
        total_power=None if power is None else convert(power, "uW", "W"),
        Delta=None if "delta_one_photon_ghz" not in v else convert(v["delta_one_photon_ghz"], "GHz", "rad/s"),
        raw=v,
    )


def load_config(path: str | Path | None) -> Config:
    if path is None:
        return config_from_values({})
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    return config_from_values(parse_config(text))
