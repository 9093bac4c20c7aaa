"""Quantum measurement models.

Premeasurement and effective POVMs, a spin-1/2 Stern-Gerlach wavepacket
simulator, nonideality matrices with entropic uncertainty inequalities,
Wigner measures, and reproducible sampling of measurement records.
"""
from .errors import (DimensionError, IllConditionedError, NumericalGuardError, RankDeficientError,
                     SingularMatrixError, ValidationError)
from .nonideality import (check_martens, check_robertson, generalized_martens, martens_bound,
                          nonideality_matrix, row_entropy_J, total_uncertainty, von_neumann_entropy)
from .operators import BivariateEffectSet, EffectSet, ProjectiveMeasure, pauli_pvm, partial_trace, tensor
from .premeasurement import (MeasurementModel, ProbabilityRecord, apply_premeasurement, check_probability_identity,
                             extract_effective_povm, heisenberg_effects, pointer_probabilities)
from .sampling import convergence_report, sample_outcomes
from .stern_gerlach import SgParams, calibrate, evolve_sg, extract_spin_povm, readout_momentum_bins
from .wigner import WignerMeasure, quorum_reconstruct, reconstruct_ideal_probs, wigner_measure

__version__ = "0.1.0"
