"""Gaussian probe pulses through the medium via the spectral transfer function.

Envelopes are complex samples with the optical carrier removed.  A spectral
component at two-photon offset ``d`` from the carrier evolves as
``exp(-i d t)``; the medium multiplies it by
``H(d) = exp(i (omega/2c) chi(d) L)``.  The vacuum part of the propagation
phase is left out, so delays are relative to a pulse that never met atoms.
"""

from __future__ import annotations

import csv
import io
import math
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np
from scipy.optimize import least_squares

from .params import SPEED_OF_LIGHT, SystemParams
from .resonance import DelayMethod, DelayResult, resonance_scale
from .steady_state import susceptibility

FOUR_LN2 = 4.0 * math.log(2.0)


class WraparoundError(RuntimeError):
    """Propagated pulse reaches the record edges (circular convolution artefact)."""


class FitError(RuntimeError):
    pass


class BandwidthWarning(UserWarning):
    pass


def _is_pow2(n: int) -> bool:
    return n > 0 and n & (n - 1) == 0


@dataclass(frozen=True)
class PulseEnvelope:
    t0: float
    dt: float
    samples: np.ndarray

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        n = len(self.samples)
        if n < 64 or not _is_pow2(n):
            raise ValueError(f"sample count must be a power of two >= 64, got {n}")

    @classmethod
    def from_samples(cls, t0: float, dt: float, samples) -> "PulseEnvelope":
        """Build an envelope, zero-padding at the end to the next power of two."""
        s = np.asarray(samples, dtype=complex)
        n = max(64, 1 << (len(s) - 1).bit_length())
        return cls(t0, dt, np.concatenate([s, np.zeros(n - len(s), dtype=complex)]))

    @property
    def times(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(len(self.samples))

    @property
    def edge_level(self) -> float:
        """Largest |envelope| at the two record ends relative to the peak."""
        a = np.abs(self.samples)
        peak = a.max()
        return max(a[0], a[-1]) / peak if peak > 0 else 0.0

    @property
    def energy(self) -> float:
        return float(np.sum(np.abs(self.samples) ** 2) * self.dt)

    def offsets(self) -> np.ndarray:
        """Two-photon offset (rad/s) of each FFT bin, in numpy FFT order."""
        return -2.0 * math.pi * np.fft.fftfreq(len(self.samples), self.dt)

    def spectral_fwhm(self) -> float:
        spec = np.abs(np.fft.fft(self.samples))
        d = self.offsets()
        inside = d[spec >= spec.max() / 2]
        return float(inside.max() - inside.min())


def gaussian_pulse(fwhm: float, t_center: float, window: float, n_samples: int = 4096) -> PulseEnvelope:
    """Unit-peak Gaussian envelope sampled on ``[t_center - window/2, t_center + window/2)``."""
    if fwhm <= 0:
        raise ValueError("fwhm must be positive")
    if window < 8 * fwhm:
        raise ValueError(f"window {window:g} s is shorter than 8 x fwhm; edges would not decay")
    if not _is_pow2(n_samples) or n_samples < 64:
        raise ValueError("n_samples must be a power of two >= 64")
    dt = window / n_samples
    t0 = t_center - window / 2
    t = t0 + dt * np.arange(n_samples)
    samples = np.exp(-FOUR_LN2 * (t - t_center) ** 2 / fwhm**2).astype(complex)
    return PulseEnvelope(t0, dt, samples)


def transfer_function(params: SystemParams, offsets) -> np.ndarray:
    """Single-pass field transfer ``exp(i k L chi / 2)`` at carrier + offsets.

    The carrier sits at the field's two-photon detuning ``params.field.delta``.
    """
    d = params.field.delta + np.asarray(offsets, dtype=float)
    chi = susceptibility(params, d).chi
    kL = params.atom.omega / SPEED_OF_LIGHT * params.cell.length
    return np.exp(0.5j * kL * chi)


def apply_transfer(pulse: PulseEnvelope, transfer: Callable[[np.ndarray], np.ndarray],
                   wrap_tol: float = 1e-3) -> PulseEnvelope:
    H = transfer(pulse.offsets())
    out = np.fft.ifft(H * np.fft.fft(pulse.samples))
    result = PulseEnvelope(pulse.t0, pulse.dt, out)
    if result.edge_level > wrap_tol:
        raise WraparoundError(f"output edge amplitude {result.edge_level:.2e} of peak; enlarge the window")
    return result


def propagate(pulse: PulseEnvelope, params: SystemParams) -> PulseEnvelope:
    _, width = resonance_scale(params)
    if pulse.spectral_fwhm() >= 2 * width:
        warnings.warn("pulse bandwidth is not small compared to the resonance width", BandwidthWarning, stacklevel=2)
    return apply_transfer(pulse, lambda d: transfer_function(params, d))


@dataclass(frozen=True)
class GaussianFit:
    t_peak: float
    fwhm: float
    amplitude: float
    baseline: float
    rms_residual: float


def fit_gaussian(pulse: PulseEnvelope, xtol: float = 1e-10, max_iter: int = 100) -> GaussianFit:
    """Least-squares Gaussian + constant fit to |envelope| (Levenberg-Marquardt)."""
    y = np.abs(pulse.samples)
    peak = y.max()
    if peak == 0 or np.ptp(y) <= 1e-12 * peak:
        raise FitError("flat envelope, nothing to fit")
    y = y / peak
    t = pulse.times
    i = int(np.argmax(y))
    above = np.nonzero(y >= 0.5)[0]
    w0 = max((above[-1] - above[0] + 1) * pulse.dt, 2 * pulse.dt)
    tc = t[i]
    u = (t - tc) / w0

    def model(p):
        amp, c, w, base = p
        return amp * np.exp(-FOUR_LN2 * (u - c) ** 2 / w**2) + base

    def resid(p):
        return model(p) - y

    def jac(p):
        amp, c, w, base = p
        g = np.exp(-FOUR_LN2 * (u - c) ** 2 / w**2)
        return np.column_stack([
            g,
            amp * g * 2 * FOUR_LN2 * (u - c) / w**2,
            amp * g * 2 * FOUR_LN2 * (u - c) ** 2 / w**3,
            np.ones_like(u),
        ])

    sol = least_squares(resid, [1.0, 0.0, 1.0, 0.0], jac=jac, method="lm",
                        xtol=xtol, ftol=1e-15, gtol=1e-15, max_nfev=max_iter)
    if sol.status <= 0:
        raise FitError(f"Gaussian fit did not converge: {sol.message}")
    amp, c, w, base = sol.x
    if amp == 0:
        raise FitError("fit collapsed to zero amplitude")
    rms = float(np.sqrt(np.mean(sol.fun**2)) / abs(amp))
    return GaussianFit(
        t_peak=float(tc + c * w0),
        fwhm=float(abs(w) * w0),
        amplitude=float(amp * peak),
        baseline=float(base * peak),
        rms_residual=rms,
    )


def measure_delay(pulse_in: PulseEnvelope, pulse_out: PulseEnvelope, length: float) -> DelayResult:
    tau = fit_gaussian(pulse_out).t_peak - fit_gaussian(pulse_in).t_peak
    return DelayResult.from_tau(tau, DelayMethod.PULSE, length)


def write_pulse_csv(pulse: PulseEnvelope, dest=None) -> str:
    """Two-column ``time_s,amplitude`` CSV of |envelope|; returns the text."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["time_s", "amplitude"])
    for t, a in zip(pulse.times, np.abs(pulse.samples)):
        w.writerow([f"{t:.9g}", f"{a:.9g}"])
    text = buf.getvalue()
    if dest is not None:
        Path(dest).write_text(text)
    return text


def read_pulse_csv(source) -> PulseEnvelope:
    text = Path(source).read_text() if not hasattr(source, "read") else source.read()
    rows = [r for r in csv.reader(io.StringIO(text)) if r and not r[0].startswith("#")]
    if rows and rows[0][0] == "time_s":
        rows = rows[1:]
    data = np.array([[float(a), float(b)] for a, b in rows])
    t = data[:, 0]
    dt = np.diff(t)
    if len(t) < 2 or not np.allclose(dt, dt[0], rtol=1e-6):
        raise ValueError("pulse CSV must be uniformly sampled")
    return PulseEnvelope.from_samples(t[0], float(dt.mean()), data[:, 1])
