import math

import numpy as np
import pytest
from scipy.integrate import quad

from qdcavity.core import HBAR, DensityMatrix, MagneticFieldConfig, SechPulse, build_level_system
from qdcavity.dynamics import (
    BRIGHT,
    DARK,
    branching,
    cavity_filtered_field,
    fidelity_purity,
    modified_decay_rate,
    pulse_only,
    readout_population,
    rotated_spin,
    rotation_superop,
    spin_state,
    symmetrized_green,
    with_cavity_decay,
)
from qdcavity.errors import AliasingError, InvalidParameterError


def _parseval_ratio(pulse, p, scale):
    """Filtered over bare pulse energy from the spectral overlap."""
    sigma, nu_c = pulse.bandwidth, pulse.detuning / HBAR
    spectrum = lambda nu: 1.0 / math.cosh(math.pi * (nu - nu_c) / (2 * sigma)) ** 2
    gain = lambda nu: abs(scale * symmetrized_green(p.omega_D + HBAR * nu, p)) ** 2
    lim = (nu_c - 30 * sigma, nu_c + 30 * sigma)
    num = quad(lambda nu: spectrum(nu) * gain(nu), *lim, limit=400, points=[(p.omega_C - p.omega_D) / HBAR])[0]
    den = quad(spectrum, *lim, limit=400)[0]
    return num / den


class TestCavityFilter:
    def test_zero_coupling_is_bare_pulse(self, published, rotation_system):
        pulse = SechPulse.from_fwhm(13.0, detuning=-400.0)
        drive = cavity_filtered_field(pulse, published, 0.0)
        bare = pulse_only(pulse, rotating_frame=published.omega_D)
        for t in np.linspace(-40, 40, 9):
            np.testing.assert_allclose(drive.rabi(rotation_system, t), bare.rabi(rotation_system, t), atol=1e-15)

    def test_energy_ratio_matches_spectral_integral(self, published):
        scale = 5e-5
        for det in (published.omega_C - published.omega_D, -400.0):
            pulse = SechPulse.from_fwhm(13.0, detuning=det)
            field = cavity_filtered_field(pulse, published, scale).components[1].amplitude
            assert field.energy_ratio() == pytest.approx(_parseval_ratio(pulse, published, scale), rel=1e-3)

    def test_maximal_at_cavity(self, published):
        ratios = {}
        for det in (-800.0, -400.0, 0.0, published.omega_C - published.omega_D, 400.0):
            pulse = SechPulse.from_fwhm(13.0, detuning=det)
            ratios[det] = cavity_filtered_field(pulse, published, 5e-5).components[1].amplitude.energy_ratio()
        best = max(ratios, key=ratios.get)
        assert best == pytest.approx(published.omega_C - published.omega_D)

    def test_far_detuned_vanishes(self, published):
        near = SechPulse.from_fwhm(13.0, detuning=published.omega_C - published.omega_D)
        far = SechPulse.from_fwhm(13.0, detuning=-20 * published.Gamma_C)
        r_near = cavity_filtered_field(near, published, 5e-5).components[1].amplitude.energy_ratio()
        r_far = cavity_filtered_field(far, published, 5e-5).components[1].amplitude.energy_ratio()
        assert r_far < 1e-2 * r_near

    def test_aliasing_detected(self, published):
        pulse = SechPulse.from_fwhm(2.0, detuning=-400.0)
        with pytest.raises(AliasingError):
            cavity_filtered_field(pulse, published, 5e-5, dt=2.0)

    def test_negative_scale(self, published):
        with pytest.raises(InvalidParameterError):
            cavity_filtered_field(SechPulse.from_fwhm(13.0), published, -1.0)


class TestModifiedDecay:
    def test_resonant(self, published):
        assert modified_decay_rate(0.5, published, 0.0) == pytest.approx(4.105, abs=1e-3)

    def test_far(self, published):
        assert modified_decay_rate(0.5, published, 1e9) == pytest.approx(0.5, abs=1e-9)

    def test_half_enhancement(self, published):
        p = published
        assert modified_decay_rate(0.5, p, p.Gamma_C) == pytest.approx(0.5 + p.g_C ** 2 / (2 * p.Gamma_C))

    def test_even_and_decreasing(self, published):
        d = np.linspace(0, 2000, 101)
        up = modified_decay_rate(0.5, published, d)
        np.testing.assert_allclose(up, modified_decay_rate(0.5, published, -d))
        assert np.all(np.diff(up) < 0)

    def test_aligned_axis_enhances_outer_only(self, published):
        system = build_level_system(MagneticFieldConfig(4.0), published.omega_D, 0.0, published.Gamma_0)
        enhanced = with_cavity_decay(system, published)
        for k in system.inner:
            assert enhanced.transitions[k].decay_rate == pytest.approx(published.Gamma_0 / 2)
        for k in system.outer:
            tr = system.transitions[k]
            expected = published.Gamma_0 / 2 + modified_decay_rate(0.0, published, tr.energy - published.omega_C)
            assert enhanced.transitions[k].decay_rate == pytest.approx(expected)
            assert expected > 5 * published.Gamma_0 / 2


class TestSpin:
    def test_fidelity_examples(self):
        target = np.array([1.0, 0.0])
        assert fidelity_purity(np.diag([1.0, 0.0]), target) == pytest.approx((1.0, 1.0))
        assert fidelity_purity(np.eye(2) / 2, target) == pytest.approx((0.5, 0.5))
        assert fidelity_purity(np.diag([0.0, 1.0]), target) == pytest.approx((0.0, 1.0))

    def test_four_level_needs_system(self):
        with pytest.raises(InvalidParameterError):
            fidelity_purity(np.diag([1.0, 0, 0, 0]), [1, 0])

    def test_trion_recombines_with_branching(self, published):
        system = with_cavity_decay(
            build_level_system(MagneticFieldConfig(4.0), published.omega_D, 0.0, published.Gamma_0), published)
        b = branching(system)
        np.testing.assert_allclose(b.sum(axis=1), 1.0)
        rho = DensityMatrix.basis(2).data
        assert readout_population(rho, system, 1) == pytest.approx(b[0, 1])
        np.testing.assert_allclose(np.trace(spin_state(rho, system)), 1.0)

    def test_no_decay_branches_evenly(self, lossless_system):
        np.testing.assert_allclose(branching(lossless_system), 0.5)

    def test_bright_dark_orthonormal(self):
        assert abs(np.vdot(BRIGHT, DARK)) < 1e-15
        assert np.vdot(BRIGHT, BRIGHT).real == pytest.approx(1.0)

    @pytest.mark.parametrize("angle", [0.0, math.pi / 2, math.pi, 2.3])
    def test_rotation_consistent(self, angle):
        U = rotation_superop(angle)
        np.testing.assert_allclose(U @ U.conj().T, np.eye(4), atol=1e-15)
        np.testing.assert_allclose(U[:2, 0], rotated_spin(angle, 0), atol=1e-15)

    def test_half_pi_rotation_populations(self):
        psi = rotated_spin(math.pi / 2, 0)
        np.testing.assert_allclose(np.abs(psi) ** 2, [0.5, 0.5])
        np.testing.assert_allclose(np.abs(rotated_spin(math.pi, 0)) ** 2, [0.0, 1.0], atol=1e-15)
