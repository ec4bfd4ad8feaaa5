"""Steady state of the three-level Lambda system and the probe susceptibility.

Basis ordering is (|a> excited, |b> probe ground, |c> drive ground).
The generator acts on the 9 real coordinates of a Hermitian 3x3 matrix::

    x = [rho_aa, rho_bb, rho_cc,
         Re rho_ab, Im rho_ab, Re rho_ac, Im rho_ac, Re rho_bc, Im rho_bc]

Relaxation model:

* |a> decays at gamma_r, half to |b> and half to |c>;
* pure dephasing of |a> tops optical coherences up to a total decay gamma;
* the ground coherence rho_bc dephases at gamma_0.  Ground populations are
  not exchanged, so the drive alone pumps every atom into |b> and the
  first-order probe response is exactly :func:`weak_probe_coherence`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .params import SPEED_OF_LIGHT, SystemParams

A, B, C = 0, 1, 2

_PAIRS = ((A, B), (A, C), (B, C))


class SingularSystemError(np.linalg.LinAlgError):
    """The steady state is not unique (kernel of the generator is degenerate)."""

    def __init__(self, message, condition=math.inf):
        super().__init__(f"{message} (condition estimate {condition:.3g})")
        self.condition = condition


def _real_basis() -> np.ndarray:
    # complex row-major vec(rho) = T @ x
    T = np.zeros((9, 9), dtype=complex)
    for k in range(3):
        T[4 * k, k] = 1.0
    for n, (i, j) in enumerate(_PAIRS):
        re, im = 3 + 2 * n, 4 + 2 * n
        T[3 * i + j, re] = 1.0
        T[3 * i + j, im] = 1j
        T[3 * j + i, re] = 1.0
        T[3 * j + i, im] = -1j
    return T


_T = _real_basis()
_T_INV = np.linalg.inv(_T)
TRACE_ROW = np.array([1.0, 1.0, 1.0, 0, 0, 0, 0, 0, 0])


def _ket_bra(i, j):
    op = np.zeros((3, 3))
    op[i, j] = 1.0
    return op


def _dissipator(L: np.ndarray, rate: float) -> np.ndarray:
    eye = np.eye(3)
    LdL = L.conj().T @ L
    return rate * (np.kron(L, L.conj()) - 0.5 * np.kron(LdL, eye) - 0.5 * np.kron(eye, LdL.T))


def hamiltonian(params: SystemParams, probe_rabi: float) -> np.ndarray:
    f = params.field
    H = np.zeros((3, 3), dtype=complex)
    H[A, A] = -(f.Delta + f.delta)
    H[C, C] = -f.delta
    H[A, B] = H[B, A] = -probe_rabi
    H[A, C] = H[C, A] = -f.Omega
    return H


def _complex_liouvillian(params: SystemParams, probe_rabi: float) -> np.ndarray:
    at = params.atom
    H = hamiltonian(params, probe_rabi)
    eye = np.eye(3)
    L = -1j * (np.kron(H, eye) - np.kron(eye, H.T))
    L += _dissipator(_ket_bra(B, A), at.gamma_r / 2)
    L += _dissipator(_ket_bra(C, A), at.gamma_r / 2)
    gamma_phi = at.gamma - at.gamma_r / 2 - at.gamma_0 / 4
    L += _dissipator(_ket_bra(A, A), 2 * gamma_phi)
    L += _dissipator(_ket_bra(B, B) - _ket_bra(C, C), at.gamma_0 / 2)
    return L


def liouvillian(params: SystemParams, probe_rabi: float) -> np.ndarray:
    """Real 9x9 generator of the rotating-frame dynamics, ``dx/dt = M @ x``."""
    M = _T_INV @ _complex_liouvillian(params, probe_rabi) @ _T
    scale = np.abs(M).max()
    if np.abs(M.imag).max() > 1e-9 * scale:
        raise AssertionError("generator is not real in the Hermitian basis")
    return M.real


def to_matrix(x: np.ndarray) -> np.ndarray:
    return (_T @ x).reshape(3, 3)


def to_real(rho: np.ndarray) -> np.ndarray:
    return (_T_INV @ np.asarray(rho, dtype=complex).reshape(9)).real


@dataclass(frozen=True)
class DensityMatrix:
    rho: np.ndarray

    @property
    def populations(self) -> np.ndarray:
        return self.rho.diagonal().real.copy()

    def coherence(self, i: int, j: int) -> complex:
        return complex(self.rho[i, j])

    @property
    def rho_ab(self) -> complex:
        return self.coherence(A, B)

    def check(self, tol: float = 1e-10) -> None:
        r = self.rho
        if np.abs(r - r.conj().T).max() > tol:
            raise ValueError("density matrix is not Hermitian")
        if abs(np.trace(r) - 1) > tol:
            raise ValueError("density matrix trace differs from 1")
        p = self.populations
        if p.min() < -tol or p.max() > 1 + tol:
            raise ValueError(f"populations out of range: {p}")


def steady_state(params: SystemParams, probe_rabi: float) -> DensityMatrix:
    """Unique stationary state, from a dense solve with the trace constraint.

    The first (excited-population) row of the generator is replaced by
    ``tr rho = 1``.  Raises :class:`SingularSystemError` when the kernel is
    degenerate, e.g. with no optical field at all.
    """
    M = liouvillian(params, probe_rabi)
    lhs = M.copy()
    lhs[0] = TRACE_ROW
    rhs = np.zeros(9)
    rhs[0] = 1.0
    # row scaling keeps the condition estimate meaningful across 1e3..1e10 rates
    cond = np.linalg.cond(lhs / np.maximum(np.abs(lhs).max(axis=1, keepdims=True), 1e-300))
    if not np.isfinite(cond) or cond > 1e13:
        raise SingularSystemError("steady state is not unique", cond)
    x = np.linalg.solve(lhs, rhs)
    resid = np.abs(M @ x).max()
    if resid > 1e-10 * np.abs(M).max():
        raise SingularSystemError(f"steady-state residual {resid:.3g} too large", cond)
    return DensityMatrix(to_matrix(x))


def weak_probe_coherence(params: SystemParams, delta):
    """First-order probe coherence ``rho_ab / alpha`` (units of 1/(rad/s)).

    ``i G_cb / (G_ab G_cb + Omega^2)`` with ``G_cb = gamma_0 - i delta`` and
    ``G_ab = gamma - i (Delta + delta)``.  ``delta`` may be an array.
    """
    at, f = params.atom, params.field
    delta = np.asarray(delta, dtype=float)
    g_cb = at.gamma_0 - 1j * delta
    g_ab = at.gamma - 1j * (f.Delta + delta)
    return 1j * g_cb / (g_ab * g_cb + f.Omega**2)


@dataclass(frozen=True)
class SusceptibilityPoint:
    delta: np.ndarray | float
    chi: np.ndarray | complex

    @property
    def refractive_index(self):
        return 1.0 + np.real(self.chi) / 2.0


def chi_prefactor(params: SystemParams) -> float:
    """C = 3/(8 pi^2) N lambda^3 gamma_r; fixes the delay at Delta=0 to K/Omega^2."""
    at, cell = params.atom, params.cell
    return 3.0 / (8.0 * math.pi**2) * cell.density * at.wavelength**3 * at.gamma_r


def susceptibility(params: SystemParams, delta) -> SusceptibilityPoint:
    chi = chi_prefactor(params) * weak_probe_coherence(params, delta)
    return SusceptibilityPoint(delta=delta, chi=chi)


def absorption_coefficient(params: SystemParams, chi):
    """Intensity absorption coefficient (1/m)."""
    return params.atom.omega / SPEED_OF_LIGHT * np.imag(chi)
