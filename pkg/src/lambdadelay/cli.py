"""Command-line entry point: ``lambdadelay <command> [options]``.

Every command writes CSV with a ``#`` comment header echoing the full
parameter set.  Exit codes: 0 success, 1 config error, 2 numerical failure.
"""

from __future__ import annotations

import argparse
import math
import sys
import warnings
from pathlib import Path

import numpy as np

from . import __version__
from .calibration import CalibrationError, calibrated
from .params import Calibration, ConfigError, SystemParams, convert, load_config
from .pulse import FitError, WraparoundError
from .resonance import DegenerateInputError, ResonanceError, transmission_spectrum
from .steady_state import SingularSystemError
from .sweeps import (
    Axis,
    SweepSpec,
    run_pulse,
    spectrum_grid,
    sweep_detuning,
    sweep_power,
    sweep_resonance_stats,
)

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2

NUMERICAL_ERRORS = (
    SingularSystemError,
    ResonanceError,
    DegenerateInputError,
    WraparoundError,
    FitError,
    CalibrationError,
    FloatingPointError,
    np.linalg.LinAlgError,
)


def fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, str):
        return value
    v = float(value)
    if math.isnan(v):
        return ""
    return f"{v:.9g}"


class CsvOutput:
    """Buffers one CSV document; written in a single pass at the end."""

    def __init__(self):
        self.lines: list[str] = []

    def comment(self, text: str = "") -> None:
        for line in text.splitlines() or [""]:
            self.lines.append(f"# {line}".rstrip())

    def header(self, *names: str) -> None:
        self.lines.append(",".join(names))

    def row(self, *values) -> None:
        self.lines.append(",".join(fmt(v) for v in values))

    def text(self) -> str:
        return "\n".join(self.lines) + "\n"


def echo_params(out: CsvOutput, command: str, params: SystemParams, cal: Calibration, source: str,
                extra: dict) -> None:
    out.comment(f"lambdadelay {__version__} {command}")
    at, cell, f = params.atom, params.cell, params.field
    echo = {
        "lambda_nm": convert(at.wavelength, "m", "nm"),
        "cell_length_cm": convert(cell.length, "m", "cm"),
        "density_cm3": convert(cell.density, "m^-3", "cm^-3"),
        "gamma_r_hz": convert(at.gamma_r, "rad/s", "Hz"),
        "gamma_hz": convert(at.gamma, "rad/s", "Hz"),
        "gamma0_hz": convert(at.gamma_0, "rad/s", "Hz"),
        "doppler_width_hz": convert(at.doppler_width, "rad/s", "Hz"),
        "probe_fraction": f.probe_power_fraction,
        "k_rabi": cal.k_rabi,
    }
    echo.update(extra)
    for key, value in echo.items():
        out.comment(f"{key} = {fmt(value)}")
    out.comment(f"calibration = {source}")


def resolve(args) -> tuple[SystemParams, Calibration, str, float, float]:
    """Config + flags -> (params, calibration, provenance, total power W, Delta rad/s)."""
    cfg = load_config(args.config)
    params = cfg.params
    if cfg.calibration is not None:
        cal, source = cfg.calibration, "config"
    else:
        result = calibrated(params)
        cal, source = result.calibration, "fitted to reference delay/width values"
        params = params.with_calibration(cal)
    power = convert(args.power_uw, "uW", "W") if args.power_uw is not None else cfg.total_power
    if power is None:
        power = convert(400.0, "uW", "W")
    if power < 0:
        raise ConfigError("power must be >= 0")
    Delta = convert(args.delta_ghz, "GHz", "rad/s") if args.delta_ghz is not None else cfg.Delta
    return params, cal, source, power, Delta or 0.0


def operating_echo(power: float, Delta: float) -> dict:
    return {"total_power_uw": convert(power, "W", "uW"), "delta_one_photon_ghz": convert(Delta, "rad/s", "GHz")}


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def cmd_spectrum(args, out: CsvOutput) -> None:
    params, cal, source, power, Delta = resolve(args)
    p = params.at_power(power, cal, Delta=Delta)
    half_span = convert(args.span_khz, "kHz", "rad/s") if args.span_khz else None
    grid = spectrum_grid(p, args.points or 2001, half_span)
    echo_params(out, "spectrum", params, cal, source, operating_echo(power, Delta))
    spec = transmission_spectrum(p, grid)
    out.header("delta_hz", "transmission", "phase_rad")
    for d, t, ph in zip(grid, spec.transmission, spec.phase):
        out.row(convert(d, "rad/s", "Hz"), t, ph)


def cmd_pulse(args, out: CsvOutput) -> None:
    params, cal, source, power, Delta = resolve(args)
    p = params.at_power(power, cal, Delta=Delta)
    fwhm = convert(args.pulse_fwhm_ms, "ms", "s")
    extra = operating_echo(power, Delta) | {"pulse_fwhm_ms": args.pulse_fwhm_ms}
    echo_params(out, "pulse", params, cal, source, extra)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        run = run_pulse(p, fwhm, n_samples=args.points or 4096)
    out.comment(f"delay_us = {fmt(run.tau * 1e6)}; input_fwhm_us = {fmt(run.fwhm_in * 1e6)}; "
                f"output_fwhm_us = {fmt(run.fwhm_out * 1e6)}; "
                f"carrier_delta_hz = {fmt(convert(run.params.field.delta, 'rad/s', 'Hz'))}")
    out.header("time_s", "input_abs", "output_abs")
    for t, a, b in zip(run.pulse_in.times, np.abs(run.pulse_in.samples), np.abs(run.pulse_out.samples)):
        out.row(t, a, b)


def _sweep(args, axis: Axis, default: tuple[float, float], n_default: int) -> SweepSpec:
    start = args.start if args.start is not None else default[0]
    stop = args.stop if args.stop is not None else default[1]
    try:
        return SweepSpec(axis, start, stop, args.points or n_default, args.log)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def cmd_sweep_detuning(args, out: CsvOutput) -> None:
    params, cal, source, power, _ = resolve(args)
    sweep = _sweep(args, Axis.ONE_PHOTON_DETUNING, (0.0, 2.0), 41)
    extra = {"total_power_uw": convert(power, "W", "uW"), "sweep": f"delta_ghz {sweep.start:g}..{sweep.stop:g} "
             f"x{sweep.n_points} {'log' if sweep.log else 'linear'}"}
    echo_params(out, "sweep-detuning", params, cal, source, extra)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        pts = sweep_detuning(params, cal, power, convert(sweep.values(), "GHz", "rad/s"))
    out.header("delta_ghz", "tau_us", "kind", "tau_analytic_us", "asymmetry", "center_hz")
    for ghz, p in zip(sweep.values(), pts):
        out.row(ghz, None if p.tau is None else p.tau * 1e6, p.kind,
                None if p.tau_analytic is None else p.tau_analytic * 1e6, p.asymmetry,
                None if p.center is None else convert(p.center, "rad/s", "Hz"))


def cmd_sweep_power(args, out: CsvOutput) -> None:
    params, cal, source, _, Delta = resolve(args)
    sweep = _sweep(args, Axis.TOTAL_POWER, (100.0, 1000.0), 10)
    extra = {"delta_one_photon_ghz": convert(Delta, "rad/s", "GHz"), "pulse_fwhm_ms": args.pulse_fwhm_ms,
             "sweep": f"power_uw {sweep.start:g}..{sweep.stop:g} x{sweep.n_points} {'log' if sweep.log else 'linear'}"}
    echo_params(out, "sweep-power", params, cal, source, extra)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        pts = sweep_power(params, cal, Delta, convert(sweep.values(), "uW", "W"),
                          convert(args.pulse_fwhm_ms, "ms", "s"))
    out.header("power_uw", "tau_analytic_us", "tau_pulse_us", "tau_numeric_us")
    us = lambda x: None if x is None else x * 1e6  # noqa: E731
    for uw, p in zip(sweep.values(), pts):
        out.row(uw, us(p.tau_analytic), us(p.tau_pulse), us(p.tau_numeric))


def cmd_resonance_stats(args, out: CsvOutput) -> None:
    params, cal, source, _, Delta = resolve(args)
    sweep = _sweep(args, Axis.TOTAL_POWER, (100.0, 1000.0), 10)
    extra = {"delta_one_photon_ghz": convert(Delta, "rad/s", "GHz"),
             "sweep": f"power_uw {sweep.start:g}..{sweep.stop:g} x{sweep.n_points} {'log' if sweep.log else 'linear'}"}
    echo_params(out, "resonance-stats", params, cal, source, extra)
    out.comment("width_closed_form_khz is the closed-form width rate / 2 pi; compare with hwhm_extracted_khz")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        pts = sweep_resonance_stats(params, cal, Delta, convert(sweep.values(), "uW", "W"))
    out.header("power_uw", "width_closed_form_khz", "fwhm_extracted_khz", "hwhm_extracted_khz", "amplitude", "kind")
    khz = lambda x: None if x is None else convert(x, "rad/s", "kHz")  # noqa: E731
    for uw, p in zip(sweep.values(), pts):
        out.row(uw, khz(p.width_closed_form), khz(p.fwhm), khz(p.hwhm), p.amplitude, p.kind)


def cmd_calibrate(args, out: CsvOutput) -> None:
    cfg = load_config(args.config)
    result = calibrated(cfg.params)
    cal = result.calibration
    echo_params(out, "calibrate", result.params, cal, "fitted to reference delay/width values", {})
    out.comment(result.report())
    out.header("observable", "power_uw", "delta_ghz", "target", "model", "residual", "tolerance", "ok")
    for r in result.residuals:
        a = r.anchor
        scale = (lambda x: x * 1e6) if a.observable.value == "delay" else (lambda x: convert(x, "rad/s", "kHz"))
        out.row(a.observable.value, a.total_power * 1e6, convert(a.Delta, "rad/s", "GHz"),
                scale(a.target), scale(r.predicted), r.residual, a.tolerance, "yes" if r.ok else "no")


COMMANDS = {
    "spectrum": cmd_spectrum,
    "pulse": cmd_pulse,
    "sweep-detuning": cmd_sweep_detuning,
    "sweep-power": cmd_sweep_power,
    "resonance-stats": cmd_resonance_stats,
    "calibrate": cmd_calibrate,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="flat key = value parameter file")
    common.add_argument("--out", type=Path, help="output CSV path (default: stdout)")
    common.add_argument("--delta-ghz", type=float, help="one-photon detuning in GHz")
    common.add_argument("--power-uw", type=float, help="total laser power in uW")
    common.add_argument("--points", type=int, help="number of grid/sweep points (pulse: samples)")
    common.add_argument("--log", action="store_true", help="log-spaced sweep")

    parser = argparse.ArgumentParser(prog="lambdadelay", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("spectrum", parents=[common], help="probe transmission and phase vs two-photon detuning")
    p.add_argument("--span-khz", type=float, help="half-span of the grid in kHz (default: auto)")
    p = sub.add_parser("pulse", parents=[common], help="propagate a Gaussian pulse")
    p.add_argument("--pulse-fwhm-ms", type=float, default=1.0)
    p = sub.add_parser("sweep-detuning", parents=[common], help="delay vs one-photon detuning")
    p.add_argument("--start", type=float, help="start detuning, GHz (default 0)")
    p.add_argument("--stop", type=float, help="stop detuning, GHz (default 2)")
    for name, help_ in (("sweep-power", "delay vs total power"), ("resonance-stats", "resonance width/amplitude vs power")):
        p = sub.add_parser(name, parents=[common], help=help_)
        p.add_argument("--start", type=float, help="start power, uW (default 100)")
        p.add_argument("--stop", type=float, help="stop power, uW (default 1000)")
        if name == "sweep-power":
            p.add_argument("--pulse-fwhm-ms", type=float, default=1.0)
    sub.add_parser("calibrate", parents=[common], help="fit k_rabi and gamma_0 to the reference values")
    return parser


def _emit(text: str, dest: Path | None) -> None:
    if dest is None:
        sys.stdout.write(text)
        sys.stdout.flush()
    else:
        dest.write_text(text)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    out = CsvOutput()
    try:
        if args.points is not None and args.points < 2:
            raise ConfigError("--points must be >= 2")
        COMMANDS[args.command](args, out)
    except ConfigError as exc:
        print(f"lambdadelay: config error: {exc}", file=sys.stderr)
        code = EXIT_CONFIG
    except NUMERICAL_ERRORS as exc:
        print(f"lambdadelay: numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        code = EXIT_NUMERIC
    except ValueError as exc:
        print(f"lambdadelay: invalid input: {exc}", file=sys.stderr)
        code = EXIT_CONFIG
    else:
        _emit(out.text(), args.out)
        return EXIT_OK
    if out.lines:
        out.comment(f"ERROR: output incomplete (exit {code})")
        _emit(out.text(), args.out)
    return code


if __name__ == "__main__":
    sys.exit(main())
