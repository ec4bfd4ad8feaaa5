"""Closed-form delay/width/phase expressions and lineshape analysis.

All rates, widths and detunings are in rad/s, delays in seconds.
"""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.optimize import least_squares, minimize_scalar

from .params import SPEED_OF_LIGHT, SystemParams
from .steady_state import susceptibility


class DegenerateInputError(ValueError):
    pass


class ResonanceError(ValueError):
    """A spectrum cannot be characterized (no feature, feature at edge...)."""


class DelayMethod(str, enum.Enum):
    ANALYTIC = "analytic"
    SLOW_ASYMPTOTE = "slow_asymptote"
    FAST_ASYMPTOTE = "fast_asymptote"
    NUMERIC = "numeric_dispersion"
    PULSE = "pulse_peak"


class ResonanceKind(str, enum.Enum):
    TRANSMISSION = "transmission"
    ABSORPTION = "absorption"
    DISPERSIVE = "dispersive"


class EITConditionWarning(UserWarning):
    pass


@dataclass(frozen=True)
class DelayResult:
    tau: float
    method: DelayMethod
    group_index: float
    group_velocity: float

    @classmethod
    def from_tau(cls, tau: float, method: DelayMethod, length: float) -> "DelayResult":
        ng = group_index_from_delay(tau, length)
        vg = length / tau if tau != 0 else math.inf
        return cls(tau=float(tau), method=DelayMethod(method), group_index=ng, group_velocity=vg)


@dataclass(frozen=True)
class Spectrum:
    delta_grid: np.ndarray
    transmission: np.ndarray
    phase: np.ndarray
    chi: np.ndarray
    optical_depth: np.ndarray

    def __post_init__(self):
        n = len(self.delta_grid)
        if n < 3:
            raise ValueError("spectrum needs at least 3 points")
        for name in ("transmission", "phase", "chi", "optical_depth"):
            if len(getattr(self, name)) != n:
                raise ValueError(f"{name} length differs from delta_grid")


@dataclass(frozen=True)
class ResonanceShape:
    center: float
    fwhm: float
    amplitude: float
    asymmetry: float
    kind: ResonanceKind
    lorentz_fwhm: float | None = None


def group_index_from_delay(tau: float, length: float) -> float:
    if length <= 0:
        raise ValueError("length must be positive")
    return 1.0 + SPEED_OF_LIGHT * tau / length


def phase_budget(tau: float, width: float) -> float:
    """Probe phase excursion over one resonance width: |tau * width| (rad)."""
    return abs(tau * width)


# ---------------------------------------------------------------------------
# closed forms
# ---------------------------------------------------------------------------


def delay_analytic(params: SystemParams) -> DelayResult:
    """Full Lambda-system group delay for motionless atoms.

    Reduces to :func:`delay_slow_asymptote` at Delta = 0 and to
    :func:`delay_fast_asymptote` for Delta^2 >> (gamma/gamma_0) Omega^2.
    """
    at, f = params.atom, params.field
    K = params.delay_scale
    g, g0 = at.gamma, at.gamma_0
    W2 = f.Omega**2
    D2 = f.Delta**2
    if W2 == 0:
        if D2 == 0:
            raise DegenerateInputError("Omega = 0 and Delta = 0: delay formula is 0/0")
        return DelayResult.from_tau(0.0, DelayMethod.ANALYTIC, params.cell.length)
    lorentz = D2 / (g * g + D2)
    first = (g * g + D2) / (2 * g0 * D2 + g * W2)
    numer = g * W2**2 - 2 * W2 * lorentz * (g0 * D2 + g * W2)
    denom = g0**2 * D2 * (g * g + D2) + g * g * W2**2
    tau = K * first * numer / denom
    return DelayResult.from_tau(tau, DelayMethod.ANALYTIC, params.cell.length)


def eit_conditions(params: SystemParams) -> tuple[float, float]:
    """Ratios Omega^2/(gamma_0 gamma) and Omega^2/(sqrt(gamma_0/gamma) W_D)."""
    at = params.atom
    W2 = params.field.Omega**2
    return (
        W2 / (at.gamma_0 * at.gamma),
        W2 / (math.sqrt(at.gamma_0 / at.gamma) * at.doppler_width),
    )


def delay_slow_asymptote(params: SystemParams, margin: float = 10.0) -> DelayResult:
    W2 = params.field.Omega**2
    if W2 == 0:
        raise DegenerateInputError("Omega = 0: slow-light delay diverges")
    r1, r2 = eit_conditions(params)
    if r1 < margin or r2 < margin:
        warnings.warn(
            f"EIT conditions weakly satisfied (Omega^2/(g0 g) = {r1:.3g}, "
            f"Omega^2/(sqrt(g0/g) W_D) = {r2:.3g})",
            EITConditionWarning,
            stacklevel=2,
        )
    tau = params.delay_scale / W2
    return DelayResult.from_tau(tau, DelayMethod.SLOW_ASYMPTOTE, params.cell.length)


def delay_fast_asymptote(params: SystemParams) -> DelayResult:
    f, at = params.field, params.atom
    if f.Delta == 0:
        raise DegenerateInputError("fast-light asymptote needs Delta != 0")
    tau = -params.delay_scale * f.Omega**2 / (at.gamma_0**2 * f.Delta**2)
    return DelayResult.from_tau(tau, DelayMethod.FAST_ASYMPTOTE, params.cell.length)


def eit_width(params: SystemParams) -> float:
    """Dark-resonance width gamma_0 + gamma^2 Omega^4 / (2 gamma_0 Delta^4) (rad/s).

    The result is a half-width rate (the Lorentzian HWHM of the model's
    resonance in the fast-light regime).  At Delta = 0 the power term has no
    meaning; a :class:`EITConditionWarning` is emitted and gamma_0 returned.
    """
    at, f = params.atom, params.field
    if at.gamma_0 == 0:
        raise DegenerateInputError("gamma_0 = 0")
    if f.Delta == 0:
        if f.Omega > 0:
            warnings.warn("width formula is outside its model at Delta = 0", EITConditionWarning, stacklevel=2)
        return at.gamma_0
    return at.gamma_0 + at.gamma**2 * f.Omega**4 / (2 * at.gamma_0 * f.Delta**4)


# ---------------------------------------------------------------------------
# spectra
# ---------------------------------------------------------------------------


def resonance_scale(params: SystemParams) -> tuple[float, float]:
    """Rough (center, width) of the two-photon feature, used to size grids.

    Center is the drive light shift; width covers both the power-broadened
    transparency window and the bare ground-coherence width.
    """
    at, f = params.atom, params.field
    lor = at.gamma**2 + f.Delta**2
    center = f.Omega**2 * f.Delta / lor
    width = at.gamma_0 + f.Omega**2 * at.gamma / lor
    return center, width


def default_grid(params: SystemParams, n_points: int = 4001, span: float = 40.0) -> np.ndarray:
    """Grid of ``span`` widths either side of the feature.

    The half-span is capped at half the drive-split distance so the
    Autler-Townes side peaks near +-sqrt(Omega^2 + Delta^2) stay outside.
    """
    center, width = resonance_scale(params)
    half = span * width
    split = math.hypot(params.field.Omega, params.field.Delta)
    if split > 0:
        half = min(half, 0.5 * split)
    return np.linspace(center - half, center + half, n_points)


def transmission_spectrum(params: SystemParams, delta_grid) -> Spectrum:
    grid = np.asarray(delta_grid, dtype=float)
    if grid.ndim != 1 or len(grid) < 3:
        raise ValueError("delta grid must be 1-D with at least 3 points")
    if not np.all(np.diff(grid) > 0):
        raise ValueError("delta grid must be strictly increasing")
    chi = susceptibility(params, grid).chi
    k_L = params.atom.omega / SPEED_OF_LIGHT * params.cell.length
    od = k_L * chi.imag
    return Spectrum(
        delta_grid=grid,
        transmission=np.exp(-od),
        phase=0.5 * k_L * chi.real,
        chi=chi,
        optical_depth=od,
    )


def group_delay_numeric(params: SystemParams, delta: float | None = None, step: float | None = None) -> DelayResult:
    """Group delay from the finite-difference slope of the refractive index.

    ``tau = (L/c)(n_g - 1)`` with ``n_g = n + omega dn/domega``; ``delta``
    defaults to the field's two-photon detuning.
    """
    if delta is None:
        delta = params.field.delta
    if step is None:
        _, width = resonance_scale(params)
        step = min(params.atom.gamma_0, width) / 50.0
    chi = susceptibility(params, np.array([delta - step, delta, delta + step])).chi
    n = 1.0 + chi.real / 2.0
    dn = (n[2] - n[0]) / (2 * step)
    if not np.isfinite(dn):
        raise FloatingPointError("non-finite refractive-index derivative")
    ng = n[1] + params.atom.omega * dn
    tau = params.cell.length / SPEED_OF_LIGHT * (ng - 1.0)
    return DelayResult.from_tau(tau, DelayMethod.NUMERIC, params.cell.length)


def locate_extremum(params: SystemParams, grid=None) -> float:
    """Two-photon detuning of the dominant feature in the optical depth.

    The feature is taken relative to a straight baseline through the grid
    ends; the grid maximum is refined by a bounded scalar search.
    """
    if grid is None:
        grid = default_grid(params)
    spec = transmission_spectrum(params, grid)
    g = spec.delta_grid
    od = spec.optical_depth
    slope = (od[-1] - od[0]) / (g[-1] - g[0])
    dev = od - (od[0] + slope * (g - g[0]))
    i = int(np.argmax(np.abs(dev)))
    if i == 0 or i == len(g) - 1:
        raise ResonanceError("extremum at grid boundary")
    sign = 1.0 if dev[i] > 0 else -1.0
    k_L = params.atom.omega / SPEED_OF_LIGHT * params.cell.length

    def objective(d):
        od_d = k_L * susceptibility(params, d).chi.imag
        return -sign * (od_d - slope * d)

    res = minimize_scalar(objective, bounds=(g[i - 1], g[i + 1]), method="bounded",
                          options={"xatol": 1e-6 * (g[i + 1] - g[i - 1])})
    return float(res.x)


def characterize_resonance(spec: Spectrum, asymmetry_threshold: float = 1.0,
                           noise_floor: float = 1e-6) -> ResonanceShape:
    """Center, width, contrast and symmetry of the dominant spectral feature.

    Works on the optical depth so the shape survives large absorption; the
    amplitude is the contrast in optical-depth units, positive for a
    transmission peak and negative for an absorption dip.
    """
    g = spec.delta_grid
    signal = -np.asarray(spec.optical_depth, dtype=float)
    base = signal[0] + (signal[-1] - signal[0]) * (g - g[0]) / (g[-1] - g[0])
    dev = signal - base
    i = int(np.argmax(np.abs(dev)))
    scale = max(np.abs(signal).max(), np.abs(dev).max())
    if scale == 0 or abs(dev[i]) < noise_floor * scale:
        raise ResonanceError("resonance contrast below noise floor")
    if i == 0 or i == len(g) - 1:
        raise ResonanceError("extremum at grid boundary")

    # parabolic refinement of the extremum position
    y0, y1, y2 = dev[i - 1], dev[i], dev[i + 1]
    x0, x1, x2 = g[i - 1], g[i], g[i + 1]
    denom = (x0 - x1) * (x0 - x2) * (x1 - x2)
    a = (x2 * (y1 - y0) + x1 * (y0 - y2) + x0 * (y2 - y1)) / denom
    b = (x2**2 * (y0 - y1) + x1**2 * (y2 - y0) + x0**2 * (y1 - y2)) / denom
    center = -b / (2 * a) if a != 0 else x1
    if not (x0 <= center <= x2):
        center = x1
    amplitude = float(dev[i])

    half = amplitude / 2.0
    above = np.sign(amplitude) * (dev - half) > 0
    right = _crossing(g, dev, half, above, i, +1)
    left = _crossing(g, dev, half, above, i, -1)
    fwhm = right - left

    reach = min(center - g[0], g[-1] - center)
    offs = np.linspace(0.0, reach, 801)
    r = np.interp(center + offs, g, dev)
    l_ = np.interp(center - offs, g, dev)
    sym = np.linalg.norm((r + l_) / 2)
    anti = np.linalg.norm((r - l_) / 2)
    asymmetry = anti / sym if sym > 0 else math.inf

    if asymmetry > asymmetry_threshold:
        kind = ResonanceKind.DISPERSIVE
        lfwhm = None
    else:
        kind = ResonanceKind.TRANSMISSION if amplitude > 0 else ResonanceKind.ABSORPTION
        lfwhm = _lorentz_fwhm(g, dev, center, fwhm, amplitude)
    return ResonanceShape(center=float(center), fwhm=float(fwhm), amplitude=amplitude,
                          asymmetry=float(asymmetry), kind=kind, lorentz_fwhm=lfwhm)


def _crossing(g, dev, half, above, i, step):
    j = i
    while 0 <= j + step < len(g) and above[j + step]:
        j += step
    k = j + step
    if not 0 <= k < len(g):
        raise ResonanceError("half-contrast crossing not found inside the grid")
    # linear interpolation between j (above) and k (not above)
    t = (half - dev[j]) / (dev[k] - dev[j])
    return g[j] + t * (g[k] - g[j])


def _lorentz_fwhm(g, dev, center, fwhm, amplitude):
    hw = fwhm / 2
    mask = np.abs(g - center) < 10 * hw
    if mask.sum() < 5:
        return None
    x = g[mask]
    y = dev[mask]

    def resid(p):
        amp, c0, w, off = p
        return amp * w**2 / ((x - c0) ** 2 + w**2) + off - y

    sol = least_squares(resid, [amplitude, center, hw, 0.0], x_scale=[abs(amplitude), hw, hw, abs(amplitude)])
    return float(2 * abs(sol.x[2])) if sol.success else None
