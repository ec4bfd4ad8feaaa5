"""Parameter sweeps behind the CLI: per-point analysis plus ordered CSV output."""

from __future__ import annotations

import enum
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .params import Calibration, SystemParams, convert
from .pulse import FitError, WraparoundError, gaussian_pulse, measure_delay, propagate
from .resonance import (
    DegenerateInputError,
    ResonanceError,
    ResonanceKind,
    characterize_resonance,
    default_grid,
    delay_analytic,
    eit_width,
    group_delay_numeric,
    locate_extremum,
    resonance_scale,
    transmission_spectrum,
)


class Axis(str, enum.Enum):
    ONE_PHOTON_DETUNING = "one_photon_detuning"
    TOTAL_POWER = "total_power"


@dataclass(frozen=True)
class SweepSpec:
    axis: Axis
    start: float
    stop: float
    n_points: int
    log: bool = False
    fixed: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.start < self.stop:
            raise ValueError("sweep start must be below stop")
        if self.n_points < 2:
            raise ValueError("a sweep needs at least 2 points")
        if self.log and self.start <= 0:
            raise ValueError("log sweeps need a positive start")

    def values(self) -> np.ndarray:
        if self.log:
            return np.geomspace(self.start, self.stop, self.n_points)
        return np.linspace(self.start, self.stop, self.n_points)


def max_workers() -> int:
    env = os.environ.get("SIM_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return os.cpu_count() or 1


def parallel_map(fn, items):
    """Evaluate ``fn`` over ``items`` concurrently; results keep input order."""
    items = list(items)
    workers = min(max_workers(), len(items))
    if workers <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


# ---------------------------------------------------------------------------
# single-point analyses
# ---------------------------------------------------------------------------


def spectrum_grid(params: SystemParams, n_points: int = 2001, half_span: float | None = None) -> np.ndarray:
    center, width = resonance_scale(params)
    if half_span is None:
        half_span = 40 * width
    return np.linspace(center - half_span, center + half_span, n_points)


@dataclass(frozen=True)
class DetuningPoint:
    Delta: float
    tau: float | None
    tau_analytic: float | None
    kind: str
    asymmetry: float | None
    center: float | None


def analyze_detuning(params: SystemParams) -> DetuningPoint:
    """Follow the two-photon extremum and measure the group delay there.

    Dispersion-like lineshapes have no usable extremum, so no delay is reported.
    """
    try:
        tau_a = delay_analytic(params).tau
    except DegenerateInputError:
        tau_a = None
    grid = default_grid(params)
    try:
        shape = characterize_resonance(transmission_spectrum(params, grid))
    except ResonanceError:
        center, _ = resonance_scale(params)
        tau = group_delay_numeric(params.with_field(delta=center)).tau
        return DetuningPoint(params.field.Delta, tau, tau_a, "none", None, None)
    if shape.kind is ResonanceKind.DISPERSIVE:
        return DetuningPoint(params.field.Delta, None, tau_a, shape.kind.value, shape.asymmetry, shape.center)
    center = locate_extremum(params, grid)
    tau = group_delay_numeric(params.with_field(delta=center)).tau
    return DetuningPoint(params.field.Delta, tau, tau_a, shape.kind.value, shape.asymmetry, center)


@dataclass(frozen=True)
class PulseRun:
    params: SystemParams
    pulse_in: object
    pulse_out: object
    tau: float
    fwhm_in: float
    fwhm_out: float


def run_pulse(params: SystemParams, pulse_fwhm: float = 1e-3, n_samples: int = 4096,
              window_factor: float = 16.0, track_extremum: bool = True) -> PulseRun:
    """Send a Gaussian pulse through the cell with the carrier on the resonance extremum."""
    from .pulse import fit_gaussian

    if track_extremum and params.cell.density > 0:
        try:
            params = params.with_field(delta=locate_extremum(params))
        except ResonanceError:
            pass
    pin = gaussian_pulse(pulse_fwhm, 0.0, window_factor * pulse_fwhm, n_samples)
    pout = propagate(pin, params)
    d = measure_delay(pin, pout, params.cell.length)
    return PulseRun(params, pin, pout, d.tau, fit_gaussian(pin).fwhm, fit_gaussian(pout).fwhm)


@dataclass(frozen=True)
class PowerPoint:
    total_power: float
    tau_analytic: float | None
    tau_numeric: float | None
    tau_pulse: float | None


def analyze_power(params: SystemParams, pulse_fwhm: float = 1e-3) -> PowerPoint:
    try:
        tau_a = delay_analytic(params).tau
    except DegenerateInputError:
        tau_a = None
    if params.field.Omega == 0:
        return PowerPoint(math.nan, tau_a, None, None)
    try:
        center = locate_extremum(params)
        tau_n = group_delay_numeric(params.with_field(delta=center)).tau
    except ResonanceError:
        tau_n = None
    try:
        tau_p = run_pulse(params, pulse_fwhm).tau
    except (FitError, WraparoundError):
        tau_p = None
    return PowerPoint(math.nan, tau_a, tau_n, tau_p)


@dataclass(frozen=True)
class StatsPoint:
    total_power: float
    width_closed_form: float
    hwhm: float | None
    fwhm: float | None
    amplitude: float | None
    kind: str


def analyze_stats(params: SystemParams) -> StatsPoint:
    w = eit_width(params)
    try:
        shape = characterize_resonance(transmission_spectrum(params, default_grid(params)))
    except ResonanceError:
        return StatsPoint(math.nan, w, None, None, None, "none")
    return StatsPoint(math.nan, w, shape.fwhm / 2, shape.fwhm, shape.amplitude, shape.kind.value)


# ---------------------------------------------------------------------------
# sweeps
# ---------------------------------------------------------------------------


def sweep_detuning(params: SystemParams, cal: Calibration, total_power: float, deltas) -> list[DetuningPoint]:
    pts = [params.at_power(total_power, cal, Delta=float(d)) for d in deltas]
    return parallel_map(analyze_detuning, pts)


def sweep_power(params: SystemParams, cal: Calibration, Delta: float, powers, pulse_fwhm: float = 1e-3) -> list[PowerPoint]:
    pts = [params.at_power(float(p), cal, Delta=Delta) for p in powers]
    out = parallel_map(lambda q: analyze_power(q, pulse_fwhm), pts)
    return [PowerPoint(float(p), o.tau_analytic, o.tau_numeric, o.tau_pulse) for p, o in zip(powers, out)]


def sweep_resonance_stats(params: SystemParams, cal: Calibration, Delta: float, powers) -> list[StatsPoint]:
    pts = [params.at_power(float(p), cal, Delta=Delta) for p in powers]
    out = parallel_map(analyze_stats, pts)
    return [StatsPoint(float(p), o.width_closed_form, o.hwhm, o.fwhm, o.amplitude, o.kind) for p, o in zip(powers, out)]


# ---------------------------------------------------------------------------
# summary statistics for sweep trends
# ---------------------------------------------------------------------------


def loglog_slope(x, y) -> float:
    x, y = np.asarray(x, float), np.asarray(y, float)
    return float(np.polyfit(np.log(x), np.log(y), 1)[0])


def linear_r2(x, y) -> float:
    x, y = np.asarray(x, float), np.asarray(y, float)
    coef = np.polyfit(x, y, 1)
    resid = y - np.polyval(coef, x)
    ss_tot = np.sum((y - y.mean()) ** 2)
    return float(1 - np.sum(resid**2) / ss_tot) if ss_tot > 0 else 1.0


def branch_structure(points: list[DetuningPoint]) -> str:
    """Compress a detuning sweep into runs: '+' slow, 'D' dispersive, '-' fast."""
    runs = []
    for p in points:
        if p.kind == ResonanceKind.DISPERSIVE.value:
            s = "D"
        elif p.tau is None:
            s = "?"
        else:
            s = "+" if p.tau > 0 else ("-" if p.tau < 0 else "0")
        if not runs or runs[-1] != s:
            runs.append(s)
    return "".join(runs)


def to_khz(w: float) -> float:
    return convert(w, "rad/s", "kHz")
