"""Simulation and fitting toolkit for a charged quantum dot in a micropillar cavity.

Subpackages: :mod:`qdcavity.core` (parameters, level structure, pulses,
states), :mod:`qdcavity.dynamics` (master-equation simulations), and
:mod:`qdcavity.io` (configuration and command line).  Modules
:mod:`qdcavity.reflectivity` and :mod:`qdcavity.spectrofit` cover the
cavity-dressed reflectivity model and its global fit.

Units: energies in μeV, times in ps, angular frequencies in ps⁻¹, fields
in T.  User-facing files use meV for energies.
"""
__version__ = "0.1.0"
