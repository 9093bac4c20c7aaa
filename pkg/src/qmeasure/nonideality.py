"""Nonideality matrices, entropic nonideality, and uncertainty inequalities.

A nonideality matrix ``lam[k, k']`` relates the effects ``M_k`` of a
measurement to a PVM ``{E_k'}`` it approximates.  It is *left* stochastic:
every column sums to one, rows need not.  Logarithms are natural.
"""
from __future__ import annotations

import hashlib
from dataclasses import asdict, dataclass

import numpy as np

from . import operators as ops
from .config import TOL
from .errors import DimensionError, ValidationError
from .operators import EffectSet, ProjectiveMeasure

StochasticMatrix = np.ndarray


def check_stochastic(lam, tol: float = TOL.validation) -> StochasticMatrix:
    """Validate a left-stochastic matrix and return a read-only float copy.

    Entries in ``[-tol, 0)`` are roundoff and are set to zero.
    """
    lam = np.array(lam, dtype=float)
    if lam.ndim != 2 or lam.size == 0:
        raise DimensionError("stochastic matrix must be a non-empty 2-d array")
    if not np.all(np.isfinite(lam)) or np.any(lam < -tol):
        raise ValidationError("stochastic matrix entries must be finite and >= 0")
    lam[lam < 0] = 0.0
    if np.max(np.abs(lam.sum(axis=0) - 1.0)) > tol:
        raise ValidationError("columns of a nonideality matrix must sum to 1")
    lam.setflags(write=False)
    return lam


def nonideality_matrix(effects: EffectSet, pvm: ProjectiveMeasure):
    """``lam[k, k'] = Tr(M_k E_k')`` and the fit residual.

    The residual ``max_k || M_k - sum_k' lam[k, k'] E_k' ||`` (spectral norm)
    vanishes exactly when every effect is a combination of the PVM elements.
    """
    m = np.asarray(effects.effects)
    e = np.asarray(pvm.effects)
    if m.shape[1:] != e.shape[1:]:
        raise DimensionError("effects and PVM act on different spaces")
    lam = np.real(np.einsum("kij,lji->kl", m, e))
    lam = check_stochastic(lam, tol=max(TOL.validation, 10 * effects.tol))
    fit = np.einsum("kl,lij->kij", lam, e)
    residual = max(float(np.linalg.norm(mk - fk, 2)) for mk, fk in zip(m, fit))
    return lam, residual


def row_entropy_J(lam) -> float:
    """Average row entropy of a nonideality matrix.

    ``J = -(1/N) sum_k sum_k' lam[k,k'] ln(lam[k,k'] / sum_k'' lam[k,k''])``
    with ``0 ln 0 = 0``; ``N`` is the number of rows.
    """
    lam = np.clip(np.asarray(lam, dtype=float), 0.0, None)
    rows = lam.sum(axis=1, keepdims=True)
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(lam > 0, lam * np.log(lam / rows), 0.0)
    return float(max(0.0, -terms.sum() / lam.shape[0]))


def von_neumann_entropy(rho) -> float:
    r = np.linalg.eigvalsh(ops.hermitian_part(ops.density(rho)))
    r = r[r > 0]
    return float(max(0.0, -np.sum(r * np.log(r))))


def canonical_rows(lam) -> np.ndarray:
    """Reorder rows so the largest entry of column ``j`` sits in row ``j`` where possible.

    Relabeling outcomes permutes rows and leaves ``J`` unchanged; this is for
    display only.
    """
    lam = np.asarray(lam)
    order, used = [], set()
    for j in range(lam.shape[1]):
        for i in np.argsort(-lam[:, j], kind="stable"):
            if i not in used:
                order.append(int(i))
                used.add(int(i))
                break
    order += [i for i in range(lam.shape[0]) if i not in used]
    return lam[order]


@dataclass(frozen=True)
class UncertaintyReport:
    J_lambda: float
    J_mu: float | None
    H_vN: float
    Delta: float
    bound: float
    satisfied: bool
    slack: float


def total_uncertainty(rho, lam, mu=None) -> UncertaintyReport:
    """Preparation entropy plus measurement nonideality.

    ``Delta = H_vN(rho) + J(lam) [+ J(mu)]`` against the bound ``J(lam) [+ J(mu)]``.
    """
    h = von_neumann_entropy(rho)
    j_l = row_entropy_J(check_stochastic(lam))
    j_m = None if mu is None else row_entropy_J(check_stochastic(mu))
    bound = j_l + (j_m or 0.0)
    delta = h + bound
    return UncertaintyReport(j_l, j_m, h, delta, bound, bool(delta >= bound), delta - bound)


def martens_bound(pvm_e: ProjectiveMeasure, pvm_f: ProjectiveMeasure) -> float:
    """``-ln max_ij Tr(E_i F_j)``."""
    e, f = np.asarray(pvm_e.effects), np.asarray(pvm_f.effects)
    if e.shape[1:] != f.shape[1:]:
        raise DimensionError("PVMs act on different spaces")
    overlaps = np.real(np.einsum("iab,jba->ij", e, f))
    return float(max(0.0, -np.log(np.max(overlaps))))


@dataclass(frozen=True)
class InequalityReport:
    name: str
    lhs: float
    rhs: float
    satisfied: bool
    slack: float
    inputs_digest: str = ""

    def to_dict(self) -> dict:
        return asdict(self)


def digest(*arrays) -> str:
    """Short SHA-256 over the raw bytes of the inputs (for report provenance)."""
    h = hashlib.sha256()
    for a in arrays:
        a = np.ascontiguousarray(np.asarray(a, dtype=complex))
        h.update(str(a.shape).encode())
        h.update(a.tobytes())
    return h.hexdigest()[:16]


def check_martens(lam_e, lam_f, pvm_e: ProjectiveMeasure, pvm_f: ProjectiveMeasure,
                  tol: float = 0.0) -> InequalityReport:
    """``J(lam_e) + J(lam_f) >= -ln max_ij Tr(E_i F_j)``.

    ``lam_e``/``lam_f`` should come from the two marginals of one joint
    measurement; the inequality is not a property of arbitrary pairs.
    """
    lhs = row_entropy_J(check_stochastic(lam_e)) + row_entropy_J(check_stochastic(lam_f))
    rhs = martens_bound(pvm_e, pvm_f)
    return InequalityReport("martens", lhs, rhs, bool(lhs >= rhs - tol), lhs - rhs,
                            digest(lam_e, lam_f, pvm_e.effects, pvm_f.effects))


def generalized_martens(rho, lam, mu) -> InequalityReport:
    rep = total_uncertainty(rho, lam, mu)
    return InequalityReport("generalized_martens", rep.Delta, rep.bound, rep.satisfied, rep.slack,
                            digest(rho, lam, mu))


def _std(a: np.ndarray, psi: np.ndarray) -> float:
    # ||(A - <A>) psi|| avoids the cancellation in <A^2> - <A>^2
    mean = np.vdot(psi, a @ psi).real
    return float(np.linalg.norm(a @ psi - mean * psi))


def robertson_bound(a, b, psi) -> tuple[float, float]:
    """``(Delta A * Delta B, |<psi|[A, B]|psi>| / 2)``."""
    a, b = ops.as_operator(a), ops.as_operator(b)
    if not (ops.is_hermitian(a) and ops.is_hermitian(b)):
        raise ValidationError("Robertson bound needs Hermitian operators")
    psi = ops.ket(psi)
    if psi.size != a.shape[0] or a.shape != b.shape:
        raise DimensionError("operator and state dimensions differ")
    lhs = _std(a, psi) * _std(b, psi)
    rhs = 0.5 * abs(np.vdot(psi, ops.commutator(a, b) @ psi))
    return lhs, float(rhs)


def check_robertson(a, b, psi) -> InequalityReport:
    lhs, rhs = robertson_bound(a, b, psi)
    return InequalityReport("robertson", lhs, rhs, bool(lhs >= rhs - 1e-12), lhs - rhs, digest(a, b, psi))
