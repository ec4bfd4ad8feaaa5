import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from lambdadelay.params import AtomParams, SystemParams, convert, default_params
from lambdadelay.resonance import group_delay_numeric, locate_extremum
from lambdadelay.steady_state import (
    A,
    B,
    C,
    SingularSystemError,
    chi_prefactor,
    liouvillian,
    steady_state,
    susceptibility,
    to_matrix,
    to_real,
    weak_probe_coherence,
)

TWO_PI = 2 * math.pi


def field(p, **kw):
    return p.with_field(**kw)


@st.composite
def systems(draw):
    gamma_r = TWO_PI * draw(st.floats(1e6, 1e7))
    gamma = gamma_r / 2 + TWO_PI * draw(st.floats(1e5, 5e8))
    gamma_0 = TWO_PI * draw(st.floats(10.0, 1e5))
    atom = AtomParams(795e-9, gamma_r, gamma + gamma_0 / 4, gamma_0, TWO_PI * 5e8)
    p = SystemParams(atom, default_params().cell)
    # below ~10 kHz the optical-pumping rate at GHz detuning is ~1e-14 of gamma and the
    # solve is (correctly) rejected as ill-conditioned
    Omega = TWO_PI * draw(st.floats(1e4, 1e8))
    return p.with_field(
        Omega=Omega,
        Delta=TWO_PI * draw(st.floats(-3e9, 3e9)),
        delta=TWO_PI * draw(st.floats(-1e6, 1e6)),
        probe_power_fraction=draw(st.floats(1e-4, 0.49)),
    )


def test_basis_round_trip():
    rng = np.random.default_rng(3)
    m = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
    rho = m + m.conj().T
    assert np.allclose(to_matrix(to_real(rho)), rho, atol=1e-14)


def test_population_block_conserves_probability(base):
    p = field(base, Omega=1e7, Delta=3e8, delta=1e4)
    M = liouvillian(p, 2e6)
    # trace functional annihilated by the generator
    assert np.abs(np.array([1, 1, 1, 0, 0, 0, 0, 0, 0]) @ M).max() < 1e-12 * np.abs(M).max()


def test_no_fields_kernel_holds_any_ground_mixture(base):
    M = liouvillian(field(base, Omega=0.0, Delta=2e9), 0.0)
    for w in (0.0, 0.3, 1.0):
        x = to_real(np.diag([0.0, w, 1 - w]).astype(complex))
        assert np.abs(M @ x).max() < 1e-12 * np.abs(M).max()


def test_no_fields_steady_state_is_singular(base):
    with pytest.raises(SingularSystemError) as info:
        steady_state(field(base, Omega=0.0), 0.0)
    assert info.value.condition > 1e13


def test_drive_only_pumps_into_probe_ground_state(base):
    rho = steady_state(field(base, Omega=1e7), 0.0)
    pops = rho.populations
    assert pops[A] < 1e-12
    assert pops[B] == pytest.approx(1.0, abs=1e-12)
    assert pops[C] < 1e-12


@settings(max_examples=60, deadline=None)
@given(systems())
def test_steady_state_is_a_density_matrix(p):
    alpha = p.probe_rabi()
    rho = steady_state(p, alpha)
    rho.check(tol=1e-10)
    M = liouvillian(p, alpha)
    assert np.abs(M @ to_real(rho.rho)).max() < 1e-10 * np.abs(M).max()


def test_dark_resonance_dip_in_coherence(base):
    p = field(base, Omega=TWO_PI * 1e6)
    alpha = 1e-3 * p.field.Omega
    at_zero = abs(steady_state(p, alpha).rho_ab)
    for d in (-TWO_PI * 5e3, TWO_PI * 5e3, TWO_PI * 5e4):
        assert at_zero < abs(steady_state(field(p, delta=d), alpha).rho_ab)


def test_weak_probe_closed_form_at_resonance(base):
    p = field(base, Omega=3e6)
    at = p.atom
    expected = 1j * at.gamma_0 / (at.gamma * at.gamma_0 + 9e12)
    assert complex(weak_probe_coherence(p, 0.0)) == pytest.approx(expected, rel=1e-14)


def test_weak_probe_vanishes_for_strong_drive(base):
    vals = [abs(complex(weak_probe_coherence(field(base, Omega=w, Delta=1e8), 1e3))) for w in (1e6, 1e8, 1e10)]
    assert vals[0] > vals[1] > vals[2]
    assert vals[2] < 1e-4 * vals[0]


@settings(max_examples=40, deadline=None)
@given(systems(), st.floats(-8, -5))
def test_weak_probe_matches_full_solve_for_vanishing_probe(p, log_frac):
    # the first-order coherence is the alpha -> 0 limit of the full solve
    alpha = p.field.Omega * 10 ** log_frac
    full = steady_state(p, alpha).rho_ab / alpha
    weak = complex(weak_probe_coherence(p, p.field.delta))
    assert abs(full - weak) <= 1e-3 * abs(weak)


@pytest.mark.parametrize("ghz", [0.0, 1.45])
def test_weak_probe_error_shrinks_with_probe_fraction(params, cal, ghz):
    errs = []
    for frac in (0.07, 1e-2, 1e-3, 1e-4, 1e-5):
        p = params.with_field(probe_power_fraction=frac).at_power(400e-6, cal, Delta=convert(ghz, "GHz", "rad/s"))
        p = p.with_field(delta=locate_extremum(p) if ghz else 0.0)
        a = p.probe_rabi()
        full = steady_state(p, a).rho_ab / a
        weak = complex(weak_probe_coherence(p, p.field.delta))
        errs.append(abs(full - weak) / abs(weak))
    assert all(x > y for x, y in zip(errs, errs[1:]))
    assert errs[-1] < 0.01


@pytest.mark.parametrize("ghz", [0.0, 1.45])
def test_weak_probe_matches_full_solve_at_seven_percent(params, cal, ghz):
    p = params.at_power(400e-6, cal, Delta=convert(ghz, "GHz", "rad/s"))
    p = p.with_field(delta=locate_extremum(p) if ghz else 0.0)
    a = p.probe_rabi()
    full = steady_state(p, a).rho_ab / a
    weak = complex(weak_probe_coherence(p, p.field.delta))
    assert abs(full - weak) / abs(weak) < 0.01


def test_empty_cell_has_no_susceptibility(base):
    p = field(base.with_cell(density=0.0), Omega=1e7)
    assert np.all(susceptibility(p, np.linspace(-1e5, 1e5, 11)).chi == 0)


def test_passivity_grid(params, cal):
    p = params.at_power(400e-6, cal)
    g0 = p.atom.gamma_0
    deltas = np.linspace(-1e3 * g0, 1e3 * g0, 100)
    for D in np.linspace(0, TWO_PI * 2e9, 100):
        chi = susceptibility(field(p, Delta=D), deltas).chi
        assert chi.imag.min() >= -1e-15


def test_symmetry_at_zero_one_photon_detuning(params, cal):
    p = params.at_power(400e-6, cal, Delta=0.0)
    d = np.linspace(0, 50 * p.atom.gamma_0, 501)
    plus, minus = susceptibility(p, d).chi, susceptibility(p, -d).chi
    scale = np.abs(plus).max()
    assert np.abs(plus.imag - minus.imag).max() <= 1e-10 * scale
    assert np.abs(plus.real + minus.real).max() <= 1e-10 * scale


def test_delay_normalisation_at_zero_detuning(base):
    p = field(base, Omega=TWO_PI * 5e6)
    assert p.field.Omega**2 > 1e3 * p.atom.gamma * p.atom.gamma_0
    tau = group_delay_numeric(p, 0.0).tau
    assert tau == pytest.approx(p.delay_scale / p.field.Omega**2, rel=0.01)


def test_prefactor_formula(base):
    at, cell = base.atom, base.cell
    assert chi_prefactor(base) == pytest.approx(3 / (8 * math.pi**2) * cell.density * at.wavelength**3 * at.gamma_r)


def test_transparency_peak_and_absorption_dip(params, cal):
    from lambdadelay.resonance import default_grid, transmission_spectrum

    p0 = params.at_power(400e-6, cal, Delta=0.0)
    s0 = transmission_spectrum(p0, default_grid(p0))
    i = int(np.argmax(s0.transmission))
    assert abs(s0.delta_grid[i]) <= 2 * np.diff(s0.delta_grid)[0]

    p1 = params.at_power(400e-6, cal, Delta=convert(1.45, "GHz", "rad/s"))
    s1 = transmission_spectrum(p1, default_grid(p1))
    j = int(np.argmin(s1.transmission))
    assert 0 < j < len(s1.delta_grid) - 1
    assert s1.transmission[j] < s1.transmission[0] and s1.transmission[j] < s1.transmission[-1]
