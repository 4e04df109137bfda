"""Density matrices of the four-level system."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from qdcavity.errors import InvalidParameterError

HERMITICITY_TOL = 1e-10
TRACE_TOL = 1e-8
POSITIVITY_TOL = 1e-8


def state_violations(rho):
    """Return (trace drift, hermiticity deviation, min eigenvalue) of ``rho``.

    Works on a single matrix or a stack of shape (..., n, n); the reported
    numbers are the worst over the stack.
    """
    rho = np.asarray(rho)
    trace = np.trace(rho, axis1=-2, axis2=-1)
    herm = np.abs(rho - np.conj(np.swapaxes(rho, -1, -2))).max(initial=0.0)
    sym = 0.5 * (rho + np.conj(np.swapaxes(rho, -1, -2)))
    min_eig = np.linalg.eigvalsh(sym).min()
    return float(np.abs(trace - 1.0).max()), float(herm), float(min_eig)


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """Validated density matrix (Hermitian, unit trace, positive)."""

    data: np.ndarray

    def __post_init__(self):
        rho = np.array(self.data, dtype=complex)
        if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
            raise InvalidParameterError(f"density matrix must be square, got shape {rho.shape}")
        drift, herm, min_eig = state_violations(rho)
        if herm > HERMITICITY_TOL:
            raise InvalidParameterError(f"not Hermitian (deviation {herm:.3g})")
        if drift > TRACE_TOL:
            raise InvalidParameterError(f"trace differs from 1 by {drift:.3g}")
        if min_eig < -POSITIVITY_TOL:
            raise InvalidParameterError(f"negative eigenvalue {min_eig:.3g}")
        rho.setflags(write=False)
        object.__setattr__(self, "data", rho)

    @property
    def dim(self):
        return self.data.shape[0]

    @classmethod
    def from_pure(cls, psi):
        psi = np.asarray(psi, dtype=complex)
        psi = psi / np.linalg.norm(psi)
        return cls(np.outer(psi, psi.conj()))

    @classmethod
    def basis(cls, index, dim=4):
        psi = np.zeros(dim, dtype=complex)
        psi[index] = 1.0
        return cls.from_pure(psi)

    def populations(self):
        return np.real(np.diag(self.data)).copy()

    def purity(self):
        return float(np.real(np.trace(self.data @ self.data)))

    def __array__(self, dtype=None, copy=None):
        return self.data if dtype is None else self.data.astype(dtype)

    def __eq__(self, other):
        return isinstance(other, DensityMatrix) and np.array_equal(self.data, other.data)

    __hash__ = None
