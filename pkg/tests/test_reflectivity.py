import math

import numpy as np
import pytest
from scipy.optimize import brentq

from qdcavity.errors import InvalidParameterError
from qdcavity.reflectivity import (
    amplitude_H,
    amplitude_V,
    bare_green,
    delta_R_H,
    delta_R_V,
    delta_R_V_values,
    dot_linewidth,
    dressed_green_cavity,
    dressed_green_dot,
    poles,
    purcell_estimate,
)
from qdcavity.spectrofit import default_windows, find_zero_crossings


def _grid(p, half=1500.0, n=6001):
    return 0.5 * (p.omega_C + p.omega_D) + np.linspace(-half, half, n)


class TestBareGreen:
    def test_on_resonance(self):
        assert bare_green(100.0, 100.0, 4.0) == pytest.approx(-1j / 4.0)

    def test_45_degree_point(self):
        assert bare_green(104.0, 100.0, 4.0) == pytest.approx((1 - 1j) / 8.0)

    def test_division_oracle(self):
        value = bare_green(1301950.0, 1301940.0, 5.2)
        expected = (10.0 - 5.2j) / (10.0 ** 2 + 5.2 ** 2)
        assert value == pytest.approx(expected, rel=1e-12)
        assert value == pytest.approx(7.8716e-2 - 4.0932e-2j, abs=1e-6)

    @pytest.mark.parametrize("gamma", [0.0, -1.0])
    def test_needs_positive_width(self, gamma):
        with pytest.raises(InvalidParameterError):
            bare_green(0.0, 0.0, gamma)


class TestDressedGreen:
    def test_decoupled_cavity(self, published):
        p = published.replace(g_C=0.0)
        w = _grid(p)
        np.testing.assert_allclose(dressed_green_cavity(w, p), bare_green(w, p.omega_C, p.Gamma_C), rtol=1e-12)

    def test_decoupled_dot(self, published):
        p = published.replace(g_C=0.0)
        w = _grid(p)
        np.testing.assert_allclose(dressed_green_dot(w, p), bare_green(w, p.omega_D, p.Gamma_D), rtol=1e-12)

    def test_poles_match_eigenvalues(self, published_series):
        for p in published_series:
            M = np.array([[p.omega_C - 1j * p.Gamma_C, p.g_C], [p.g_C, p.omega_D - 1j * p.Gamma_D]])
            eig = sorted(np.linalg.eigvals(M), key=lambda z: z.imag)
            np.testing.assert_allclose(poles(p), eig, rtol=1e-13)

    def test_resonant_pole_widths(self, published):
        p = published.replace(omega_C=published.omega_D)
        im = sorted(poles(p).imag)
        assert im[0] == pytest.approx(-168.2, abs=0.05)
        assert im[1] == pytest.approx(-9.0, abs=0.05)
        # weak coupling: both poles sit at the common real energy
        assert np.allclose(poles(p).real, p.omega_D)

    def test_shared_denominator(self, published):
        # both propagators diverge at the same complex poles
        for z in poles(published):
            a = (z - published.omega_C + 1j * published.Gamma_C) * (z - published.omega_D + 1j * published.Gamma_D)
            assert abs(a - published.g_C ** 2) < 1e-6 * published.g_C ** 2

    def test_passive(self, published_series):
        # a lossy resonator response has Im G <= 0 at every real frequency
        for p in published_series:
            w = _grid(p)
            assert np.all(dressed_green_cavity(w, p).imag <= 0)
            assert np.all(dressed_green_dot(w, p).imag <= 0)


class TestAmplitudes:
    def test_no_background_is_pure_phase(self, published):
        p = published.replace(bg_scale=0.0)
        a = amplitude_V(_grid(p), p)
        np.testing.assert_allclose(np.abs(a), 1.0)

    def test_far_from_resonance(self, published):
        a = amplitude_V(published.omega_C + 1e9, published)
        assert a == pytest.approx(np.exp(1j * published.phi), abs=1e-7)

    def test_at_cavity_oracle(self, published):
        p = published
        w = p.omega_C
        dot = w - p.omega_D + 1j * p.Gamma_D
        expected = complex(math.cos(1.13), math.sin(1.13)) + p.bg_scale * dot / (1j * p.Gamma_C * dot - p.g_C ** 2)
        assert amplitude_V(w, p) == pytest.approx(expected, rel=1e-13)

    def test_H_without_direct_coupling(self, published):
        np.testing.assert_allclose(amplitude_H(_grid(published), published, 0.0), np.exp(1j * published.phi))


class TestDeltaRV:
    def test_no_charge_effect_is_zero(self, published):
        p = published.replace(g_C=0.0, delta_omega=0.0)
        np.testing.assert_allclose(delta_R_V(_grid(p), p).values, 0.0, atol=1e-15)

    def test_pure_cavity_shift_is_derivative(self, published):
        # g_C=0: the signal is δω times the ω-derivative of the bare line
        p = published.replace(g_C=0.0, delta_omega=-0.01)
        w = _grid(p)
        h = 1e-3
        deriv = (np.real(np.exp(-1j * p.phi) * bare_green(w + h, p.omega_C, p.Gamma_C))
                 - np.real(np.exp(-1j * p.phi) * bare_green(w - h, p.omega_C, p.Gamma_C))) / (2 * h)
        np.testing.assert_allclose(delta_R_V(w, p).values, -p.delta_omega * deriv, rtol=1e-5, atol=1e-12)

    def test_crossings_near_resonances(self, published_series):
        for p in published_series:
            w = np.linspace(p.omega_D - 800, p.omega_C + 800, 801)
            spec = delta_R_V(w, p)
            wins = default_windows(p.omega_C, p.omega_D)
            found = find_zero_crossings(spec, wins)
            f = lambda x: float(delta_R_V_values(np.array([x]), p)[0])
            spacing = w[1] - w[0]
            for (lo, hi), c in zip(wins, found):
                lo_b, hi_b = c - spacing, c + spacing
                root = brentq(f, lo_b, hi_b, xtol=1e-9)
                assert abs(root - c) < spacing
                # simple root: nonzero slope
                assert abs(f(root + 0.1) - f(root - 0.1)) > 0

    def test_exact_tends_to_expanded_for_weak_response(self, published):
        # the truncation drops terms of order |G| bg_scale and δω²
        w = _grid(published)
        weak = published.replace(bg_scale=1e-4, delta_omega=-1e-3)
        exact = delta_R_V(w, weak, form="exact").values
        expanded = delta_R_V(w, weak).values
        assert np.max(np.abs(exact - expanded)) < 1e-3 * np.max(np.abs(expanded))

    def test_expansion_error_drops_with_shift(self, published):
        # the first-order δω term leaves an O(δω²) residue
        w = _grid(published)
        errs = []
        for dw in (-4.0, -2.0):
            p = published.replace(delta_omega=dw, bg_scale=0.0)
            errs.append(np.max(np.abs(delta_R_V(w, p, form="exact").values - delta_R_V(w, p).values)))
        assert errs[0] / errs[1] >= 3.5

    def test_unknown_form(self, published):
        with pytest.raises(InvalidParameterError):
            delta_R_V(_grid(published), published, form="cubic")

    def test_meta_records_polarization(self, published):
        assert delta_R_V(_grid(published), published, meta={"k": 1}).meta == {"k": 1, "polarization": "V"}


class TestDeltaRH:
    def test_no_direct_coupling(self, published):
        assert np.all(delta_R_H(_grid(published), published, 0.0).values == 0.0)

    def test_weaker_than_V(self, published):
        w = _grid(published)
        g_direct = math.sqrt(1e-4 * published.bg_scale)
        v = np.max(np.abs(delta_R_V(w, published).values))
        h = np.max(np.abs(delta_R_H(w, published, g_direct).values))
        assert h < v / 10

    def test_scales_with_direct_coupling_squared(self, published):
        w = _grid(published)
        small = np.max(np.abs(delta_R_H(w, published, 0.01).values))
        double = np.max(np.abs(delta_R_H(w, published, 0.02).values))
        assert double / small == pytest.approx(4.0, rel=1e-3)

    def test_centered_on_dot(self, published):
        w = np.linspace(published.omega_D - 200, published.omega_D + 200, 40001)
        h = delta_R_H(w, published, 0.3).values
        peak = w[np.argmax(np.abs(h))]
        assert abs(peak - published.omega_D) < 3 * (published.Gamma_D + published.g_C ** 2 / published.Gamma_C)

    def test_negative_coupling_rejected(self, published):
        with pytest.raises(InvalidParameterError):
            delta_R_H(_grid(published), published, -1.0)


class TestPurcell:
    def test_published(self, published):
        assert purcell_estimate(published) == pytest.approx(7.21, abs=0.01)

    def test_uncoupled(self, published):
        assert purcell_estimate(published.replace(g_C=0.0)) == 0.0

    def test_quadratic(self, published):
        double = published.replace(g_C=2 * published.g_C)
        assert purcell_estimate(double) == pytest.approx(4 * purcell_estimate(published))


class TestDotLinewidth:
    def test_uncoupled_is_lorentzian(self, published):
        p = published.replace(g_C=0.0)
        assert dot_linewidth(p) == pytest.approx(2 * p.Gamma_D, rel=1e-4)

    def test_coupling_broadens(self, published):
        p = published.replace(omega_C=published.omega_D + 200.0)
        assert dot_linewidth(p) > 2 * p.Gamma_D

    def test_span_too_small(self, published):
        with pytest.raises(InvalidParameterError):
            dot_linewidth(published, span=2.0)
