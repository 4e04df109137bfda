"""Scattering model of the differential reflectivity of a dot in a cavity.

The reflected field is a frequency-independent background ``e^{iφ}`` plus
cavity scattering through the dressed cavity propagator (V polarization)
or dot scattering through the dressed dot propagator (H polarization).
The measured signal is the difference between the charged-dot reflectivity
and a reference without the dot, in which the cavity sits at ω + δω.

All energies are μeV; propagators are in μeV⁻¹.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from qdcavity.errors import InvalidParameterError


@dataclass
class ComplexResponse:
    grid: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        self.grid = np.asarray(self.grid, dtype=float)
        self.values = np.asarray(self.values, dtype=complex)
        _check_grid(self.grid, len(self.values))
        if not np.all(np.isfinite(self.values)):
            raise InvalidParameterError("response values must be finite")


@dataclass
class Spectrum:
    """Real signal on an increasing energy grid (μeV)."""

    grid: np.ndarray
    values: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.grid = np.asarray(self.grid, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        _check_grid(self.grid, len(self.values))

    def __len__(self):
        return len(self.grid)


def _check_grid(grid, n):
    if grid.ndim != 1 or len(grid) != n:
        raise InvalidParameterError("grid and values must be 1-D and of equal length")
    if np.any(np.diff(grid) <= 0):
        raise InvalidParameterError("energy grid must be strictly increasing")


def bare_green(omega, omega_0, Gamma):
    """Bare propagator ``1 / (ω - ω₀ + iΓ)``."""
    if not Gamma > 0:
        raise InvalidParameterError("Gamma must be positive (pole on the real axis otherwise)")
    return 1.0 / (np.asarray(omega, dtype=float) - omega_0 + 1j * Gamma)


def _denominator(omega, p):
    omega = np.asarray(omega, dtype=float)
    return (omega - p.omega_C + 1j * p.Gamma_C) * (omega - p.omega_D + 1j * p.Gamma_D) - p.g_C ** 2


def dressed_green_cavity(omega, p):
    """Cavity propagator dressed by the dot, summed to all orders in g_C."""
    omega = np.asarray(omega, dtype=float)
    return (omega - p.omega_D + 1j * p.Gamma_D) / _denominator(omega, p)


def dressed_green_dot(omega, p):
    """Dot propagator dressed by the cavity."""
    omega = np.asarray(omega, dtype=float)
    return (omega - p.omega_C + 1j * p.Gamma_C) / _denominator(omega, p)


def poles(p):
    """Complex poles of the coupled propagators, eigenvalues of the 2x2
    non-Hermitian cavity-dot matrix, sorted by imaginary part."""
    a = p.omega_C - 1j * p.Gamma_C
    b = p.omega_D - 1j * p.Gamma_D
    mean = 0.5 * (a + b)
    root = np.sqrt(0.25 * (a - b) ** 2 + p.g_C ** 2 + 0j)
    return np.array(sorted([mean + root, mean - root], key=lambda z: z.imag))


def amplitude_V(omega, p):
    """Reflected V amplitude ``e^{iφ} + G_C(ω) · bg_scale``."""
    return np.exp(1j * p.phi) + dressed_green_cavity(omega, p) * p.bg_scale


def amplitude_H(omega, p, g_direct):
    """Reflected H amplitude ``e^{iφ} + G_D(ω) · g_direct²``.

    ``g_direct²`` is the lumped direct-coupling strength over the background
    amplitude, in μeV.
    """
    return np.exp(1j * p.phi) + dressed_green_dot(omega, p) * g_direct ** 2


def expanded_signal(omega, omega_C, omega_D, Gamma_C, Gamma_D, g_C, phi, delta_omega, amplitude):
    """Truncated ΔR_V from raw parameters (no validation; used inside fits)."""
    x = np.asarray(omega, dtype=float) - omega_C
    G0 = 1.0 / (x + 1j * Gamma_C)
    dot = np.asarray(omega, dtype=float) - omega_D + 1j * Gamma_D
    G = dot / ((x + 1j * Gamma_C) * dot - g_C ** 2)
    return amplitude * np.real(np.exp(-1j * phi) * (G - G0 + delta_omega * G0 ** 2))


def delta_R_V_values(omega, p, amplitude=1.0, form="expanded"):
    """Differential V reflectivity as a bare array; see :func:`delta_R_V`."""
    omega = np.asarray(omega, dtype=float)
    if form == "expanded":
        return expanded_signal(omega, p.omega_C, p.omega_D, p.Gamma_C, p.Gamma_D, p.g_C, p.phi,
                               p.delta_omega, amplitude)
    G = dressed_green_cavity(omega, p)
    phase = np.exp(-1j * p.phi)
    if form == "exact":
        G0s = bare_green(omega + p.delta_omega, p.omega_C, p.Gamma_C)
        b = p.bg_scale
        if b == 0:
            return amplitude * np.real(phase * (G - G0s))
        bg = np.exp(1j * p.phi)
        return amplitude * (np.abs(bg + G * b) ** 2 - np.abs(bg + G0s * b) ** 2) / (2.0 * b)
    raise InvalidParameterError(f"form must be 'expanded' or 'exact', got {form!r}")


def delta_R_V(grid, p, amplitude=1.0, form="expanded", meta=None):
    """Charged-minus-uncharged reflectivity for V polarization.

    ``form="exact"`` is the full difference of squared amplitudes, divided
    by ``2 bg_scale`` so that it shares its normalization with the
    truncated model.  ``form="expanded"`` keeps the leading order in the
    background ratio and first order in δω:

        amplitude * Re[e^{-iφ} (G_C - G⁰_C + δω (G⁰_C)²)]

    which is the fit model.
    """
    values = delta_R_V_values(grid, p, amplitude, form)
    return Spectrum(grid, values, dict(meta or {}, polarization="V"))


def delta_R_H(grid, p, g_direct, amplitude=1.0, meta=None):
    """Charged-minus-uncharged reflectivity for H polarization.

    Without the charged dot the H reflectivity is the bare background, so
    the signal is ``|e^{iφ} + G_D g²|² - 1``, with the same ``2 bg_scale``
    normalization as :func:`delta_R_V`.
    """
    if g_direct < 0:
        raise InvalidParameterError("g_direct must be non-negative")
    omega = np.asarray(grid, dtype=float)
    diff = np.abs(amplitude_H(omega, p, g_direct)) ** 2 - 1.0
    norm = 2.0 * p.bg_scale if p.bg_scale > 0 else 1.0
    return Spectrum(omega, amplitude * diff / norm, dict(meta or {}, polarization="H"))


def purcell_estimate(p):
    """Ratio of cavity-resonant emission ``g_C²/Γ_C`` to free-space Γ_0."""
    if p.Gamma_0 <= 0:
        raise InvalidParameterError("Gamma_0 must be positive")
    return p.g_C ** 2 / (p.Gamma_C * p.Gamma_0)


def dot_linewidth(p, n_points=20001, span=None):
    """Numerical FWHM (μeV) of ``|G_D(ω)|²`` around the dot resonance."""
    span = span or 40.0 * (p.Gamma_D + p.g_C ** 2 / p.Gamma_C)
    omega = p.omega_D + np.linspace(-span, span, n_points)
    power = np.abs(dressed_green_dot(omega, p)) ** 2
    i_max = int(np.argmax(power))
    half = power[i_max] / 2.0
    above = np.nonzero(power >= half)[0]
    lo, hi = above[0], above[-1]
    if lo == 0 or hi == n_points - 1:
        raise InvalidParameterError("span too small to bracket the dot line")

    def cross(i, j):
        return omega[i] + (half - power[i]) * (omega[j] - omega[i]) / (power[j] - power[i])

    return float(cross(hi, hi + 1) - cross(lo - 1, lo))
