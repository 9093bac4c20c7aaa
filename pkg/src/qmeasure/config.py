"""Numerical tolerances shared across the package.

All values are absolute.  Units are natural (hbar = 1).
"""
from dataclasses import dataclass


@dataclass(frozen=True)
class Tolerances:
    validation: float = 1e-10      # Hermiticity, trace, positivity, completeness
    probability: float = 1e-12     # smallest admissible negative probability
    identity: float = 1e-9         # both sides of the pointer/object probability identity
    effect_positivity: float = 1e-8
    probe_condition: float = 1e8   # max condition number of a tomography probe basis
    inverse_condition: float = 1e10
    stationarity: float = 1e-6
    degeneracy: float = 1e-10      # Schmidt coefficients closer than this are ties


TOL = Tolerances()
