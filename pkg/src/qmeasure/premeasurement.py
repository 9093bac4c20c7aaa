"""Object/ancilla premeasurement and effective object-side POVMs.

A :class:`MeasurementModel` couples an object of dimension ``d_o`` to an
ancilla of dimension ``d_a`` through a unitary ``U`` (given directly or as
``exp(-i H T)``).  The pointer is read with an effect set on the ancilla.
The probability of pointer outcome ``k`` is

    p_k = Tr[ U (rho_o (x) rho_a) U^dagger (I (x) M_k) ]

and, because this is linear in ``rho_o``, there are object-side effects
``M_o,k`` with ``p_k = Tr(rho_o M_o,k)``.  :func:`extract_effective_povm`
recovers them by detector tomography over an informationally complete set
of probe states.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from . import operators as ops
from .config import TOL
from .errors import DimensionError, IllConditionedError, ValidationError
from .operators import EffectSet

log = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class ProbabilityRecord:
    labels: tuple
    probabilities: np.ndarray

    def __post_init__(self):
        p = np.array(self.probabilities, dtype=float).ravel()
        labels = tuple(str(x) for x in self.labels)
        if len(labels) != len(p):
            raise ValidationError(f"{len(labels)} labels for {len(p)} probabilities")
        if not np.all(np.isfinite(p)) or np.any(p < -TOL.probability):
            raise ValidationError("probabilities must be finite and non-negative")
        if abs(p.sum() - 1.0) > TOL.validation:
            raise ValidationError(f"probabilities sum to {p.sum():.12g}")
        p.setflags(write=False)
        object.__setattr__(self, "probabilities", p)
        object.__setattr__(self, "labels", labels)

    def __len__(self):
        return len(self.probabilities)

    def __getitem__(self, k):
        return self.probabilities[k]

    def as_dict(self) -> dict:
        return dict(zip(self.labels, self.probabilities.tolist()))


@dataclass(frozen=True, eq=False)
class MeasurementModel:
    """Premeasurement interaction plus pointer readout.

    Exactly one of ``unitary`` or (``hamiltonian``, ``time``) must be given.
    """

    object_dim: int
    ancilla_dim: int
    ancilla_init: np.ndarray
    pointer: EffectSet
    hamiltonian: np.ndarray | None = None
    time: float | None = None
    unitary: np.ndarray | None = None
    _u: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        d_o, d_a = int(self.object_dim), int(self.ancilla_dim)
        if d_o < 1 or d_a < 1:
            raise DimensionError("dimensions must be positive")
        rho_a = ops.density(self.ancilla_init)
        if rho_a.shape[0] != d_a:
            raise DimensionError("ancilla state has the wrong dimension")
        pointer = self.pointer if isinstance(self.pointer, EffectSet) else EffectSet(self.pointer)
        if pointer.dim != d_a:
            raise DimensionError("pointer effects do not act on the ancilla space")
        if (self.unitary is None) == (self.hamiltonian is None):
            raise ValidationError("give either a unitary or a Hamiltonian with a time")
        if self.unitary is not None:
            u = ops.check_unitary(self.unitary)
        else:
            if self.time is None:
                raise ValidationError("a Hamiltonian needs an interaction time")
            h = ops.as_operator(self.hamiltonian)
            u = ops.unitary(h, float(self.time))
            object.__setattr__(self, "hamiltonian", ops._frozen(h))
            object.__setattr__(self, "time", float(self.time))
        if u.shape[0] != d_o * d_a:
            raise DimensionError("interaction does not act on the joint space")
        u = ops._frozen(u)
        object.__setattr__(self, "object_dim", d_o)
        object.__setattr__(self, "ancilla_dim", d_a)
        object.__setattr__(self, "ancilla_init", rho_a)
        object.__setattr__(self, "pointer", pointer)
        if self.unitary is not None:
            object.__setattr__(self, "unitary", u)
        object.__setattr__(self, "_u", u)

    @property
    def U(self) -> np.ndarray:
        return self._u

    @property
    def dims(self) -> tuple[int, int]:
        return self.object_dim, self.ancilla_dim

    def with_time(self, t: float) -> "MeasurementModel":
        if self.hamiltonian is None:
            raise ValidationError("interaction time is fixed for a unitary model")
        return MeasurementModel(self.object_dim, self.ancilla_dim, self.ancilla_init,
                                self.pointer, hamiltonian=self.hamiltonian, time=t)


def _object_state(model: MeasurementModel, rho_o) -> np.ndarray:
    rho_o = ops.density(rho_o)
    if rho_o.shape[0] != model.object_dim:
        raise DimensionError(f"object state has dim {rho_o.shape[0]}, model expects {model.object_dim}")
    return rho_o


def apply_premeasurement(model: MeasurementModel, rho_o) -> np.ndarray:
    """Joint state ``U (rho_o (x) rho_a) U^dagger`` after the interaction."""
    rho_o = _object_state(model, rho_o)
    u = model.U
    joint = u @ ops.tensor(rho_o, model.ancilla_init) @ ops.dagger(u)
    return ops.density(ops.hermitian_part(joint))


def pointer_probabilities(model: MeasurementModel, rho_o) -> ProbabilityRecord:
    rho_a = ops.partial_trace(apply_premeasurement(model, rho_o), model.dims, keep="a")
    p = model.pointer.probabilities(rho_a)
    return ProbabilityRecord(model.pointer.labels, _clean(p))


def _clean(p: np.ndarray) -> np.ndarray:
    # roundoff can leave -1e-17 entries
    return np.where((p < 0) & (p > -TOL.probability), 0.0, p)


def fit_effects(probes, probs, tol: float = TOL.probe_condition) -> np.ndarray:
    """Solve ``Tr(rho_i M_k) = probs[i, k]`` for Hermitian effects ``M_k``.

    ``probes`` has shape ``(n, d, d)`` with ``n >= d**2`` and must span the
    Hermitian operators; the system is solved in least squares over the
    Hilbert-Schmidt orthonormal Hermitian basis.  Raises
    ``IllConditionedError`` when the design matrix condition number exceeds
    ``tol``.
    """
    probes = np.asarray(probes, dtype=complex)
    probs = np.asarray(probs, dtype=float)
    n, d, _ = probes.shape
    if probs.ndim != 2 or probs.shape[0] != n:
        raise DimensionError("need one probability row per probe state")
    basis = ops.hermitian_basis(d)
    design = np.real(np.einsum("nij,bji->nb", probes, basis))
    cond = np.linalg.cond(design)
    if n < d * d or not np.isfinite(cond) or cond > tol:
        raise IllConditionedError(f"probe basis condition number {cond:.3g} exceeds {tol:.3g}")
    coeffs, *_ = np.linalg.lstsq(design, probs, rcond=None)
    return np.einsum("bk,bij->kij", coeffs, basis)


def _as_effect_set(effects: np.ndarray, labels) -> EffectSet:
    effects = ops.hermitian_part(effects)
    lowest = min(np.linalg.eigvalsh(m)[0] for m in effects)
    if lowest < -TOL.effect_positivity:
        raise ValidationError(f"extracted effect has eigenvalue {lowest:.3g}")
    if lowest < -TOL.validation:
        log.warning("extracted effect has small negative eigenvalue %.3g", lowest)
    return EffectSet(effects, labels, tol=TOL.effect_positivity)


def extract_effective_povm(model: MeasurementModel, probes=None) -> EffectSet:
    """Object-side effects ``M_o,k(T)`` by detector tomography.

    Pointer statistics are computed for each probe state (default:
    :func:`operators.probe_states`) and the effects are solved from the
    resulting linear system.
    """
    probes = ops.probe_states(model.object_dim) if probes is None else np.asarray(probes)
    table = np.array([pointer_probabilities(model, r).probabilities for r in probes])
    return _as_effect_set(fit_effects(probes, table), model.pointer.labels)


def heisenberg_effects(model: MeasurementModel) -> EffectSet:
    """Closed form ``M_o,k = Tr_a[(I (x) rho_a) U^dagger (I (x) M_k) U]``."""
    d_o, d_a = model.dims
    u = model.U
    left = ops.tensor(np.eye(d_o), model.ancilla_init)
    out = []
    for m in model.pointer.effects:
        heis = ops.dagger(u) @ ops.tensor(np.eye(d_o), m) @ u
        out.append(ops.partial_trace(left @ heis, model.dims, keep="o"))
    return _as_effect_set(np.array(out), model.pointer.labels)


@dataclass(frozen=True)
class IdentityReport:
    deviation: float
    pointer: tuple
    object: tuple


def check_probability_identity(model: MeasurementModel, rho_o, effects: EffectSet | None = None) -> IdentityReport:
    """Compare pointer probabilities with ``Tr(rho_o M_o,k)``."""
    effects = extract_effective_povm(model) if effects is None else effects
    p_a = pointer_probabilities(model, rho_o).probabilities
    p_o = effects.probabilities(_object_state(model, rho_o))
    return IdentityReport(float(np.max(np.abs(p_a - p_o))), tuple(p_a.tolist()), tuple(p_o.tolist()))


def is_stationary(model: MeasurementModel, rho_o, tol: float = TOL.stationarity) -> bool:
    """True when doubling the interaction time moves no probability by ``tol`` or more."""
    p1 = pointer_probabilities(model, rho_o).probabilities
    p2 = pointer_probabilities(model.with_time(2 * model.time), rho_o).probabilities
    return bool(np.max(np.abs(p1 - p2)) < tol)


def ancilla_schmidt(model: MeasurementModel, psi_o, psi_a=None) -> ops.SchmidtDecomposition:
    """Schmidt form of ``U (psi_o (x) psi_a)``; ``psi_a`` defaults to the
    leading eigenvector of the model's ancilla state."""
    if psi_a is None:
        w, v = np.linalg.eigh(model.ancilla_init)
        psi_a = v[:, -1]
    joint = model.U @ np.kron(ops.ket(psi_o), ops.ket(psi_a))
    return ops.schmidt_decompose(joint / np.linalg.norm(joint), model.dims)


# ---------------------------------------------------------------------------
# stock models


def computational_pointer(d: int) -> EffectSet:
    eye = np.eye(d, dtype=complex)
    return EffectSet([np.outer(eye[k], eye[k]) for k in range(d)], [str(k) for k in range(d)])


def controlled_flip_model(d: int = 2) -> MeasurementModel:
    """Object basis state ``|j>`` shifts the ancilla ``|k> -> |k+j mod d>``.

    With the ancilla prepared in ``|0>`` and read in the computational basis
    this is an ideal measurement of the object's computational basis.
    """
    u = np.zeros((d * d, d * d), dtype=complex)
    for j in range(d):
        for k in range(d):
            u[j * d + (k + j) % d, j * d + k] = 1
    rho_a = np.zeros((d, d), dtype=complex)
    rho_a[0, 0] = 1
    return MeasurementModel(d, d, rho_a, computational_pointer(d), unitary=u)


def identity_model(d_o: int = 2, d_a: int = 2) -> MeasurementModel:
    rho_a = np.zeros((d_a, d_a), dtype=complex)
    rho_a[0, 0] = 1
    return MeasurementModel(d_o, d_a, rho_a, computational_pointer(d_a), unitary=np.eye(d_o * d_a))


def random_pointer(d: int, k: int, rng: np.random.Generator) -> EffectSet:
    """Random ``k``-outcome effect set: ``S^{-1/2} A_k S^{-1/2}`` with ``S = sum A_k``."""
    a = []
    for _ in range(k):
        g = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
        a.append(g @ ops.dagger(g))
    w, v = np.linalg.eigh(sum(a))
    s_inv = (v / np.sqrt(w)) @ ops.dagger(v)
    return EffectSet([ops.hermitian_part(s_inv @ x @ s_inv) for x in a])


def random_model(rng: np.random.Generator, d_o: int = 2, d_a: int = 3, outcomes: int = 3,
                 use_hamiltonian: bool = True) -> MeasurementModel:
    rho_a = ops.random_density(d_a, rng)
    pointer = random_pointer(d_a, outcomes, rng)
    if use_hamiltonian:
        h = ops.random_hermitian(d_o * d_a, rng)
        return MeasurementModel(d_o, d_a, rho_a, pointer, hamiltonian=h, time=float(rng.uniform(0.5, 3)))
    return MeasurementModel(d_o, d_a, rho_a, pointer, unitary=ops.random_unitary(d_o * d_a, rng))


# ---------------------------------------------------------------------------
# JSON round trip


def _enc(m: np.ndarray) -> list:
    m = np.asarray(m, dtype=complex)
    return [[[float(z.real), float(z.imag)] for z in row] for row in m]


def _dec(rows) -> np.ndarray:
    a = np.array(rows, dtype=float)
    if a.ndim != 3 or a.shape[-1] != 2:
        raise ValidationError("complex matrices are encoded as rows of [re, im] pairs")
    return a[..., 0] + 1j * a[..., 1]


def model_to_dict(model: MeasurementModel) -> dict:
    doc = {
        "object_dim": model.object_dim,
        "ancilla_dim": model.ancilla_dim,
        "ancilla_init": _enc(model.ancilla_init),
        "pointer": {"labels": list(model.pointer.labels),
                    "effects": [_enc(m) for m in model.pointer.effects]},
    }
    if model.unitary is not None:
        doc["unitary"] = _enc(model.unitary)
    else:
        doc["hamiltonian"] = _enc(model.hamiltonian)
        doc["time"] = model.time
    return doc


def model_from_dict(doc: dict) -> MeasurementModel:
    try:
        pointer = EffectSet([_dec(m) for m in doc["pointer"]["effects"]], doc["pointer"].get("labels"))
        kw = {}
        if "unitary" in doc:
            kw["unitary"] = _dec(doc["unitary"])
        else:
            kw["hamiltonian"] = _dec(doc["hamiltonian"])
            kw["time"] = float(doc["time"])
        return MeasurementModel(int(doc["object_dim"]), int(doc["ancilla_dim"]),
                                _dec(doc["ancilla_init"]), pointer, **kw)
    except (KeyError, TypeError) as exc:
        raise ValidationError(f"malformed model document: {exc}") from exc
