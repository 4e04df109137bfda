"""Cavity-modified radiative rates."""
from __future__ import annotations

import numpy as np

from qdcavity.errors import InvalidParameterError


def modified_decay_rate(Gamma_0, p, delta):
    """Radiative rate enhanced by emission into the cavity (μeV).

    ``Γ_0 + g_C² Γ_C / (Γ_C² + δ²)`` with δ the emitter-cavity detuning.
    """
    if p.Gamma_C <= 0:
        raise InvalidParameterError("Gamma_C must be positive")
    delta = np.asarray(delta, dtype=float)
    out = Gamma_0 + p.g_C ** 2 * p.Gamma_C / (p.Gamma_C ** 2 + delta ** 2)
    return float(out) if out.ndim == 0 else out


def with_cavity_decay(system, p):
    """Copy of ``system`` whose branches are Purcell-enhanced.

    Each branch keeps its free-space share ``Γ_0 / 2`` and gains the cavity
    term evaluated at its own detuning from ω_C, weighted by the squared
    projection of its dipole on the cavity axis.
    """
    rates = []
    for tr in system.transitions:
        enhancement = modified_decay_rate(0.0, p, tr.energy - p.omega_C)
        rates.append(p.Gamma_0 / 2.0 + tr.cavity_weight() * enhancement)
    return system.with_decay_rates(rates)
