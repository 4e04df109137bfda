import math

import numpy as np
import pytest

from qdcavity.core import (
    FWHM_FACTOR,
    HBAR,
    MU_B,
    POLARIZATIONS,
    DensityMatrix,
    MagneticFieldConfig,
    SechPulse,
    bandwidth_for_rotation,
    build_level_system,
    sech_envelope,
    sech_rotation_angle,
    state_violations,
    wrap_phase,
)
from qdcavity.errors import CalibrationError, InvalidParameterError


class TestConstants:
    def test_values(self):
        assert HBAR == pytest.approx(658.2119569)
        assert MU_B == pytest.approx(57.88)


class TestCavityDotParams:
    def test_defaults_are_published_shared_values(self, published):
        assert (published.g_C, published.Gamma_C, published.Gamma_D, published.phi) == (24.9, 172.0, 5.2, 1.13)
        assert published.omega_C - published.omega_D == pytest.approx(190.0)

    def test_published_series(self, published_series):
        omega_D = [p.omega_D / 1000 for p in published_series]
        omega_C = [p.omega_C / 1000 for p in published_series]
        assert omega_D == pytest.approx([1301.94, 1301.88, 1301.77, 1301.62, 1301.37, 1300.92])
        assert omega_C == pytest.approx([1302.13, 1302.14, 1302.13, 1302.11, 1302.05, 1301.93])

    @pytest.mark.parametrize("field, value", [
        ("Gamma_C", 0.0), ("Gamma_D", -1.0), ("g_C", -0.1), ("Gamma_0", 0.0),
        ("bg_scale", -1.0), ("phi", math.pi), ("omega_C", math.nan), ("g_C", math.inf),
    ])
    def test_rejects_invalid(self, published, field, value):
        with pytest.raises(InvalidParameterError):
            published.replace(**{field: value})

    def test_replace_returns_new(self, published):
        q = published.replace(g_C=0.0)
        assert q.g_C == 0.0 and published.g_C == 24.9

    @pytest.mark.parametrize("phi", [0.0, 3.5, -3.5, 7.0, -math.pi])
    def test_wrap_phase_range(self, phi):
        w = wrap_phase(phi)
        assert -math.pi <= w < math.pi
        assert math.cos(w) == pytest.approx(math.cos(phi))


class TestLevelSystem:
    def test_zero_field_degenerate(self):
        s = build_level_system(MagneticFieldConfig(0.0), 1301940.0)
        assert all(tr.energy == pytest.approx(1301940.0) for tr in s.transitions)

    def test_splittings_at_4T(self):
        field = MagneticFieldConfig(4.0, g_electron=0.4, g_hole=0.2)
        assert field.electron_splitting == pytest.approx(92.6, abs=0.01)
        assert field.hole_splitting == pytest.approx(46.3, abs=0.01)
        s = build_level_system(field, 1301940.0)
        outer = [s.transitions[k].energy for k in s.outer]
        assert abs(outer[1] - outer[0]) == pytest.approx(138.9, abs=0.02)

    def test_aligned_axis_outer_V_inner_H(self):
        s = build_level_system(MagneticFieldConfig(4.0), 1301940.0, dipole_axis_angle=0.0)
        for k in s.outer:
            assert s.transitions[k].cavity_weight() == pytest.approx(1.0)
        for k in s.inner:
            assert s.transitions[k].cavity_weight() == pytest.approx(0.0, abs=1e-15)

    def test_transition_order(self):
        s = build_level_system(MagneticFieldConfig(1.0), 1301940.0)
        assert [(t.lower_index, t.upper_index, t.kind) for t in s.transitions] == [
            (1, 2, "outer"), (0, 2, "inner"), (1, 3, "inner"), (0, 3, "outer")]
        assert s.find(0, 3) == 3
        with pytest.raises(KeyError):
            s.find(2, 3)

    def test_circular_couples_every_transition_equally(self):
        s = build_level_system(MagneticFieldConfig(2.0), 1301940.0, dipole_axis_angle=0.3)
        for tr in s.transitions:
            assert abs(tr.coupling("circular_plus")) == pytest.approx(0.5)

    def test_energies_consistent_with_levels(self):
        s = build_level_system(MagneticFieldConfig(3.0), 1301940.0)
        levels = s.level_energies(frame=0.0)
        for tr in s.transitions:
            assert tr.energy == pytest.approx(levels[tr.upper_index] - levels[tr.lower_index])

    def test_with_ground_shift(self):
        s = build_level_system(MagneticFieldConfig(2.0), 1301940.0)
        t = s.with_ground_shift(5.0)
        assert t.ground_splitting == pytest.approx(s.ground_splitting + 5.0)
        levels = t.level_energies(frame=0.0)
        for tr in t.transitions:
            assert tr.energy == pytest.approx(levels[tr.upper_index] - levels[tr.lower_index])

    def test_with_decay_rates_validates(self):
        s = build_level_system(MagneticFieldConfig(2.0), 1301940.0)
        with pytest.raises(InvalidParameterError):
            s.with_decay_rates([1.0, 1.0, -1.0, 1.0])
        assert s.with_decay_rates([1, 2, 3, 4]).total_decay(2) == pytest.approx(3.0)


class TestSechPulse:
    def test_fwhm_to_bandwidth(self):
        pulse = SechPulse.from_fwhm(11.5)
        assert pulse.bandwidth == pytest.approx(0.2291, abs=1e-4)
        assert FWHM_FACTOR == pytest.approx(2 * math.acosh(2))
        assert pulse.fwhm == pytest.approx(11.5)

    def test_peak_and_half_maximum(self):
        pulse = SechPulse(rabi_peak=0.3, bandwidth=0.2, center_time=5.0)
        assert abs(sech_envelope(pulse, 5.0)) == pytest.approx(0.3)
        t_half = 5.0 + 2.634 / (2 * pulse.bandwidth)
        assert abs(sech_envelope(pulse, t_half)) == pytest.approx(0.15, rel=1e-3)

    def test_far_tail_finite(self):
        pulse = SechPulse(rabi_peak=1.0, bandwidth=1.0)
        assert np.all(np.isfinite(sech_envelope(pulse, np.array([-1e4, 1e4]))))

    def test_area(self):
        pulse = SechPulse(rabi_peak=0.2, bandwidth=0.2)
        assert pulse.area == pytest.approx(math.pi)

    @pytest.mark.parametrize("kwargs", [
        {"rabi_peak": 1.0, "bandwidth": 0.0},
        {"rabi_peak": math.nan, "bandwidth": 1.0},
        {"rabi_peak": 1.0, "bandwidth": 1.0, "polarization": "diagonal"},
    ])
    def test_invalid(self, kwargs):
        with pytest.raises(InvalidParameterError):
            SechPulse(**kwargs)


class TestRotationAngle:
    def test_equal_bandwidth_and_detuning(self):
        assert sech_rotation_angle(100.0 / HBAR, 100.0) == pytest.approx(math.pi / 2)

    def test_small_angle_limit(self):
        sigma = 1.0 / HBAR
        assert sech_rotation_angle(sigma, 1000.0) == pytest.approx(2.0 / 1000.0, rel=1e-6)

    def test_published_example(self):
        # 2 atan(150/340) = 0.83098, not the 0.8279 quoted alongside it
        angle = sech_rotation_angle(150.0 / HBAR, -340.0)
        assert abs(angle) == pytest.approx(2 * math.atan(150.0 / 340.0), abs=1e-12)
        assert abs(angle) == pytest.approx(0.83098, abs=1e-5)

    def test_odd_in_detuning(self):
        assert sech_rotation_angle(0.2, -300.0) == pytest.approx(-sech_rotation_angle(0.2, 300.0))

    def test_resonance_undefined(self):
        with pytest.raises(CalibrationError):
            sech_rotation_angle(0.2, 0.0)

    @pytest.mark.parametrize("angle", [0.1, math.pi / 2, 2.5])
    def test_inverse(self, angle):
        sigma = bandwidth_for_rotation(angle, -560.0)
        assert abs(sech_rotation_angle(sigma, -560.0)) == pytest.approx(angle)

    def test_inverse_out_of_range(self):
        with pytest.raises(CalibrationError):
            bandwidth_for_rotation(math.pi, -100.0)


class TestDensityMatrix:
    def test_basis(self):
        rho = DensityMatrix.basis(2)
        assert rho.populations() == pytest.approx([0, 0, 1, 0])
        assert rho.purity() == pytest.approx(1.0)

    def test_from_pure_normalizes(self):
        rho = DensityMatrix.from_pure([1.0, 1.0j, 0.0, 0.0])
        assert np.trace(rho.data).real == pytest.approx(1.0)

    @pytest.mark.parametrize("data", [
        np.diag([0.5, 0.6, 0, 0]),
        np.diag([1.2, -0.2, 0, 0]),
        np.array([[0.5, 0.3], [0.1, 0.5]]),
        np.ones((2, 3)),
    ])
    def test_rejects_unphysical(self, data):
        with pytest.raises(InvalidParameterError):
            DensityMatrix(np.asarray(data, dtype=complex))

    def test_violations_of_valid_state(self):
        drift, herm, min_eig = state_violations(np.eye(4) / 4)
        assert drift < 1e-15 and herm == 0 and min_eig == pytest.approx(0.25)


def test_polarization_table_normalized():
    for vec in POLARIZATIONS.values():
        assert np.vdot(vec, vec).real == pytest.approx(1.0)
