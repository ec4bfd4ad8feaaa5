"""scikit-learn style wrappers around calibration and lineshape analysis."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from .calibration import Anchor, AnchorSet, Observable, calibrate_from_anchors
from .params import AtomParams, Calibration, CellParams, FieldParams, SystemParams, convert
from .resonance import Spectrum, characterize_resonance, delay_analytic


class DelayCalibrator(RegressorMixin, BaseEstimator):
    """Fit ``k_rabi`` and ``gamma_0`` to measured delays.

    ``X`` has columns (total power in W, one-photon detuning in rad/s);
    ``y`` holds delays in seconds.  ``predict`` returns model delays.
    """

    def __init__(self, wavelength_nm=795.0, cell_length_cm=2.5, density_cm3=4.7e11,
                 gamma_r_hz=5.75e6, gamma_hz=10e6, doppler_width_hz=500e6, probe_fraction=0.07,
                 tolerance=0.1):
        self.wavelength_nm = wavelength_nm
        self.cell_length_cm = cell_length_cm
        self.density_cm3 = density_cm3
        self.gamma_r_hz = gamma_r_hz
        self.gamma_hz = gamma_hz
        self.doppler_width_hz = doppler_width_hz
        self.probe_fraction = probe_fraction
        self.tolerance = tolerance

    def _params(self, gamma_0: float) -> SystemParams:
        atom = AtomParams(
            wavelength=convert(self.wavelength_nm, "nm", "m"),
            gamma_r=convert(self.gamma_r_hz, "Hz", "rad/s"),
            gamma=convert(self.gamma_hz, "Hz", "rad/s"),
            gamma_0=gamma_0,
            doppler_width=convert(self.doppler_width_hz, "Hz", "rad/s"),
        )
        cell = CellParams(convert(self.density_cm3, "cm^-3", "m^-3"), convert(self.cell_length_cm, "cm", "m"))
        return SystemParams(atom, cell, FieldParams(probe_power_fraction=self.probe_fraction))

    def fit(self, X, y):
        X, y = check_X_y(X, y, ensure_min_samples=2)
        if X.shape[1] != 2:
            raise ValueError("X must have two columns: total power (W), Delta (rad/s)")
        self.n_features_in_ = 2
        anchors = AnchorSet(tuple(
            Anchor(Observable.DELAY, float(p), float(d), float(t), self.tolerance) for (p, d), t in zip(X, y)
        ))
        result = calibrate_from_anchors(anchors, self._params(convert(1e3, "Hz", "rad/s")))
        self.calibration_ = result.calibration
        self.k_rabi_ = result.calibration.k_rabi
        self.gamma_0_ = result.calibration.gamma_0_fit
        self.residuals_ = np.array([r.residual for r in result.residuals])
        return self

    def predict(self, X):
        check_is_fitted(self, "calibration_")
        X = check_array(X)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"expected {self.n_features_in_} features, got {X.shape[1]}")
        cal: Calibration = self.calibration_
        base = self._params(cal.gamma_0_fit)
        return np.array([delay_analytic(base.at_power(p, cal, Delta=d)).tau for p, d in X])


class ResonanceFeatures(TransformerMixin, BaseEstimator):
    """Turn optical-depth spectra on a fixed two-photon grid into lineshape features.

    Output columns: center (rad/s), FWHM (rad/s), amplitude (optical depth),
    asymmetry.
    """

    def __init__(self, delta_grid=None, asymmetry_threshold=1.0):
        self.delta_grid = delta_grid
        self.asymmetry_threshold = asymmetry_threshold

    def fit(self, X, y=None):
        X = check_array(X, ensure_min_features=3)
        grid = np.arange(X.shape[1], dtype=float) if self.delta_grid is None else np.asarray(self.delta_grid, float)
        if grid.shape != (X.shape[1],):
            raise ValueError("delta_grid length must match the number of spectral points")
        self.grid_ = grid
        self.n_features_in_ = X.shape[1]
        return self

    def transform(self, X):
        check_is_fitted(self, "grid_")
        X = check_array(X)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"expected {self.n_features_in_} spectral points, got {X.shape[1]}")
        rows = []
        for od in X:
            spec = Spectrum(self.grid_, np.exp(-od), np.zeros_like(od), np.zeros_like(od, dtype=complex), od)
            s = characterize_resonance(spec, self.asymmetry_threshold)
            rows.append((s.center, s.fwhm, s.amplitude, s.asymmetry))
        return np.array(rows)
