"""Wigner operator-valued measures and density-operator reconstruction.

Inverting the nonideality matrices of a joint nonideal measurement turns
its bivariate effects ``M_kl`` into

    W_k'l' = sum_kl inv(lam)[k', k] inv(mu)[l', l] M_kl

whose marginals are the ideal projectors ``E_k'`` and ``F_l'``.  The ``W``
are Hermitian and sum to the identity but need not be positive, so
``Tr(rho W)`` can be negative even though its marginals are proper
probabilities.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy.linalg import lapack

from . import operators as ops
from .config import TOL
from .errors import DimensionError, RankDeficientError, SingularMatrixError, ValidationError
from .nonideality import check_stochastic, nonideality_matrix
from .operators import BivariateEffectSet, EffectSet, ProjectiveMeasure
from .premeasurement import ProbabilityRecord

log = logging.getLogger(__name__)


def invert_stochastic(lam, max_cond: float = TOL.inverse_condition) -> np.ndarray:
    """Inverse of a square nonideality matrix by a completely pivoted LU solve.

    Raises ``SingularMatrixError`` when the condition number exceeds
    ``max_cond`` and ``DimensionError`` for non-square input.
    """
    lam = np.asarray(check_stochastic(lam), dtype=float)
    n, m = lam.shape
    if n != m:
        raise DimensionError(f"only square nonideality matrices are invertible, got {n}x{m}")
    cond = np.linalg.cond(lam)
    if not np.isfinite(cond) or cond > max_cond:
        raise SingularMatrixError(f"nonideality matrix condition number {cond:.3g} exceeds {max_cond:.3g}")
    lu, ipiv, jpiv, info = lapack.dgetc2(lam)
    if info > 0:
        raise SingularMatrixError("nonideality matrix is singular")
    inv = np.empty_like(lam)
    for j in range(n):
        x, scale = lapack.dgesc2(lu, np.eye(n)[:, j], ipiv, jpiv)
        inv[:, j] = x / scale
    if np.max(np.abs(inv @ lam - np.eye(n))) > TOL.identity:
        raise SingularMatrixError("inverse failed the round-trip check")
    return inv


@dataclass(frozen=True, eq=False)
class WignerMeasure:
    """Hermitian, not necessarily positive, operators ``W[k', l']`` summing to I."""

    elements: np.ndarray

    def __post_init__(self):
        w = np.array(self.elements, dtype=complex)
        if w.ndim not in (3, 4) or w.shape[-1] != w.shape[-2]:
            raise DimensionError("elements must have shape (N, d, d) or (N, Ntilde, d, d)")
        d = w.shape[-1]
        flat = w.reshape(-1, d, d)
        if not all(ops.is_hermitian(x, TOL.validation) for x in flat):
            raise ValidationError("Wigner elements must be Hermitian")
        if np.max(np.abs(flat.sum(axis=0) - np.eye(d))) > TOL.identity:
            raise ValidationError("Wigner elements must sum to the identity")
        w.setflags(write=False)
        object.__setattr__(self, "elements", w)

    @property
    def dim(self) -> int:
        return self.elements.shape[-1]

    def min_eigenvalue(self) -> float:
        flat = self.elements.reshape(-1, self.dim, self.dim)
        return float(min(np.linalg.eigvalsh(ops.hermitian_part(x))[0] for x in flat))

    def is_positive(self, tol: float = TOL.validation) -> bool:
        return self.min_eigenvalue() >= -tol

    def quasi_probabilities(self, rho) -> np.ndarray:
        return np.real(np.einsum("...ij,ji->...", self.elements, np.asarray(rho)))

    def marginals(self):
        """``(sum_l' W[k', l'], sum_k' W[k', l'])`` for a bivariate measure."""
        if self.elements.ndim != 4:
            raise DimensionError("marginals need a bivariate Wigner measure")
        return self.elements.sum(axis=1), self.elements.sum(axis=0)


def wigner_univariate(effects: EffectSet, lam) -> WignerMeasure:
    """``W_k' = sum_k inv(lam)[k', k] M_k``."""
    inv = invert_stochastic(lam)
    m = np.asarray(effects.effects)
    if inv.shape[1] != len(m):
        raise DimensionError("nonideality matrix rows do not match the effects")
    return WignerMeasure(np.einsum("ak,kij->aij", inv, m))


def wigner_measure(biv: BivariateEffectSet, lam, mu) -> WignerMeasure:
    inv_l, inv_m = invert_stochastic(lam), invert_stochastic(mu)
    m = np.asarray(biv.effects)
    if inv_l.shape[1] != m.shape[0] or inv_m.shape[1] != m.shape[1]:
        raise DimensionError("nonideality matrices do not match the bivariate outcome grid")
    return WignerMeasure(np.einsum("ak,bl,klij->abij", inv_l, inv_m, m))


def marginal_residuals(w: WignerMeasure, pvm_e: ProjectiveMeasure, pvm_f: ProjectiveMeasure):
    """Max-entry deviation of each Wigner marginal from its ideal PVM."""
    row, col = w.marginals()
    return (float(np.max(np.abs(row - pvm_e.effects))),
            float(np.max(np.abs(col - pvm_f.effects))))


@dataclass(frozen=True)
class JointAnalysis:
    """Everything derived from a bivariate effect set and its two target PVMs."""

    lam: np.ndarray
    mu: np.ndarray
    fit_residuals: tuple
    wigner: WignerMeasure
    marginal_residuals: tuple


def analyze_joint(biv: BivariateEffectSet, pvm_e: ProjectiveMeasure, pvm_f: ProjectiveMeasure) -> JointAnalysis:
    lam, r_e = nonideality_matrix(biv.row_marginal(), pvm_e)
    mu, r_f = nonideality_matrix(biv.col_marginal(), pvm_f)
    w = wigner_measure(biv, lam, mu)
    return JointAnalysis(lam, mu, (r_e, r_f), w, marginal_residuals(w, pvm_e, pvm_f))


@dataclass(frozen=True, eq=False)
class QuasiProbabilities:
    """Probabilities recovered by matrix inversion; entries may dip below zero."""

    labels: tuple
    values: np.ndarray

    @property
    def negative(self) -> bool:
        return bool(np.any(self.values < 0))

    def to_record(self) -> ProbabilityRecord:
        return ProbabilityRecord(self.labels, self.values)


def reconstruct_ideal_probs(joint, lam, mu, labels_e=None, labels_f=None):
    """Ideal PVM statistics from joint nonideal frequencies ``joint[k, l]``.

    ``p_E = inv(lam) @ (row sums)`` and ``p_F = inv(mu) @ (column sums)``.
    Negative entries (sampling noise) are kept and logged.
    """
    joint = np.asarray(joint, dtype=float)
    if joint.ndim != 2:
        raise DimensionError("joint probabilities must form an N x Ntilde table")
    if abs(joint.sum() - 1.0) > TOL.validation:
        raise ValidationError(f"joint probabilities sum to {joint.sum():.12g}")
    p_e = invert_stochastic(lam) @ joint.sum(axis=1)
    p_f = invert_stochastic(mu) @ joint.sum(axis=0)
    out = []
    for p, labels in ((p_e, labels_e), (p_f, labels_f)):
        labels = tuple(labels) if labels is not None else tuple(str(i) for i in range(len(p)))
        q = QuasiProbabilities(labels, p)
        if q.negative:
            log.warning("reconstructed probabilities have negative entries: %s", p)
        out.append(q)
    return tuple(out)


@dataclass(frozen=True, eq=False)
class QuorumResult:
    rho: np.ndarray          # nearest valid density operator
    raw: np.ndarray          # unconstrained least-squares estimate (Hermitian, unit trace)
    residual: float          # max |Tr(raw E_i) - p_i|
    projection_distance: float  # Frobenius distance raw -> rho


def quorum_reconstruct(measurements) -> QuorumResult:
    """Least-squares density operator from PVM statistics.

    ``measurements`` is a sequence of ``(ProjectiveMeasure, ProbabilityRecord)``
    (or plain probability arrays).  The estimate is ``I/d + sum x_j G_j`` over
    the traceless Hermitian basis, so Hermiticity and unit trace hold by
    construction; negative eigenvalues are clipped and the trace renormalized.
    Raises ``RankDeficientError`` if the projectors do not determine the state.
    """
    rows, targets = [], []
    d = None
    for pvm, probs in measurements:
        p = np.asarray(probs.probabilities if hasattr(probs, "probabilities") else probs, dtype=float)
        if len(p) != len(pvm.effects):
            raise DimensionError("probability count does not match PVM size")
        if d is None:
            d = pvm.dim
        elif pvm.dim != d:
            raise DimensionError("quorum PVMs act on different spaces")
        rows.extend(pvm.effects)
        targets.extend(p)
    if d is None:
        raise ValidationError("empty quorum")
    basis = ops.hermitian_basis(d)[1:]
    proj = np.array(rows)
    design = np.real(np.einsum("nij,bji->nb", proj, basis))
    offset = np.real(np.trace(proj, axis1=1, axis2=2)) / d
    rank = np.linalg.matrix_rank(design, tol=1e-8)
    if rank < d * d - 1:
        raise RankDeficientError(f"quorum spans {rank} of {d * d - 1} state parameters")
    x, *_ = np.linalg.lstsq(design, np.array(targets) - offset, rcond=None)
    raw = np.eye(d) / d + np.einsum("b,bij->ij", x, basis)
    residual = float(np.max(np.abs(design @ x + offset - targets)))
    w, v = np.linalg.eigh(raw)
    w = np.clip(w, 0.0, None)
    rho = (v * (w / w.sum())) @ ops.dagger(v)
    return QuorumResult(ops.density(ops.hermitian_part(rho)), raw, residual,
                        float(np.linalg.norm(rho - raw)))


# ---------------------------------------------------------------------------
# generated joint measurements


def random_joint_qubit(rng: np.random.Generator, max_tries: int = 1000) -> BivariateEffectSet:
    """Random 2x2-outcome joint nonideal measurement of sigma_y (rows) and sigma_z (columns).

    ``M_kl = [(1 + c s_k + e s_l + g s_k s_l) I + alpha s_k sy + beta s_l sz + delta s_k s_l sx] / 4``
    with ``s = (+1, -1)``; the ``g`` and ``delta`` terms cancel in both
    marginals, so each marginal is exactly a smeared PVM.
    """
    s = np.array([1.0, -1.0])
    for _ in range(max_tries):
        c, e, g = rng.uniform(-0.3, 0.3, size=3)
        alpha, beta, delta = rng.uniform(-0.8, 0.8, size=3)
        scal = 1 + c * s[:, None] + e * s[None, :] + g * np.outer(s, s)
        if np.min(scal) <= np.sqrt(alpha ** 2 + beta ** 2 + delta ** 2) + 1e-3:
            continue
        if min(abs(alpha), abs(beta)) < 0.05:
            continue
        m = (scal[:, :, None, None] * ops.I2
             + alpha * s[:, None, None, None] * ops.SY
             + beta * s[None, :, None, None] * ops.SZ
             + delta * np.outer(s, s)[:, :, None, None] * ops.SX) / 4
        return BivariateEffectSet(m)
    raise RuntimeError("no admissible joint measurement found")


def random_switching_joint(rng: np.random.Generator, pvm_e: ProjectiveMeasure, pvm_f: ProjectiveMeasure,
                           n_rows: int | None = None, n_cols: int | None = None) -> BivariateEffectSet:
    """Joint measurement that measures E with probability t and F otherwise.

    ``M_kl = t (sum_k' lam_kk' E_k') nu_l + (1 - t) kappa_k (sum_l' mu_ll' F_l')``
    with random left-stochastic ``lam``, ``mu`` and probability vectors
    ``nu``, ``kappa``.  Works in any dimension.
    """
    n_rows = len(pvm_e.effects) if n_rows is None else n_rows
    n_cols = len(pvm_f.effects) if n_cols is None else n_cols
    lam = rng.dirichlet(np.ones(n_rows), size=len(pvm_e.effects)).T
    mu = rng.dirichlet(np.ones(n_cols), size=len(pvm_f.effects)).T
    nu, kappa = rng.dirichlet(np.ones(n_cols)), rng.dirichlet(np.ones(n_rows))
    t = rng.uniform(0.2, 0.8)
    a = np.einsum("kl,lij->kij", lam, pvm_e.effects)
    b = np.einsum("kl,lij->kij", mu, pvm_f.effects)
    m = t * a[:, None] * nu[None, :, None, None] + (1 - t) * kappa[:, None, None, None] * b[None, :]
    return BivariateEffectSet(m)


def find_negativity_witness(rng: np.random.Generator, trials: int = 100):
    """Search generated joint qubit models for a Wigner element with a negative eigenvalue.

    Returns ``(biv, wigner, min_eigenvalue)`` for the first hit.
    """
    pe, pf = ops.pauli_pvm("y"), ops.pauli_pvm("z")
    for _ in range(trials):
        biv = random_joint_qubit(rng)
        try:
            res = analyze_joint(biv, pe, pf)
        except SingularMatrixError:
            continue
        lo = res.wigner.min_eigenvalue()
        if lo < -TOL.validation:
            return biv, res.wigner, lo
    return None
