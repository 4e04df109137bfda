"""Unit system: energies in μeV, times in ps, fields in T."""
from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class PhysicalConstants:
    hbar: float = 658.2119569  # μeV·ps
    mu_B: float = 57.88  # μeV/T


CONSTANTS = PhysicalConstants()
HBAR = CONSTANTS.hbar
MU_B = CONSTANTS.mu_B
