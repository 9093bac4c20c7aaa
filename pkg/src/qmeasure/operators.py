"""Finite-dimensional operator algebra.

Operators and density operators are plain complex ``numpy`` arrays.  The
validators in this module check the invariants and hand back a read-only
copy, so values produced here can be shared freely between threads.
"""
from __future__ import annotations

from dataclasses import dataclass, field
import numpy as np

from .config import TOL
from .errors import DimensionError, ValidationError

I2 = np.eye(2, dtype=complex)
SX = np.array([[0, 1], [1, 0]], dtype=complex)
SY = np.array([[0, -1j], [1j, 0]], dtype=complex)
SZ = np.array([[1, 0], [0, -1]], dtype=complex)
PAULI = {"x": SX, "y": SY, "z": SZ}

for _m in (I2, SX, SY, SZ):
    _m.setflags(write=False)


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=complex, copy=True)
    a.setflags(write=False)
    return a


def as_operator(a) -> np.ndarray:
    """Return ``a`` as a square, finite, complex matrix."""
    a = np.asarray(a, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
        raise DimensionError(f"operator must be a non-empty square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValidationError("operator has non-finite entries")
    return a


def dagger(a: np.ndarray) -> np.ndarray:
    return np.conj(np.swapaxes(a, -1, -2))


def is_hermitian(a, tol: float = TOL.validation) -> bool:
    a = np.asarray(a)
    return bool(np.max(np.abs(a - dagger(a)), initial=0.0) <= tol)


def hermitian_part(a: np.ndarray) -> np.ndarray:
    return 0.5 * (a + dagger(a))


def density(rho, tol: float = TOL.validation) -> np.ndarray:
    """Validate a density operator and return a read-only copy.

    Raises ``ValidationError`` unless ``rho`` is Hermitian, has unit trace
    and no eigenvalue below ``-tol``.
    """
    rho = as_operator(rho)
    if not is_hermitian(rho, tol):
        raise ValidationError("density operator is not Hermitian")
    tr = np.trace(rho)
    if abs(tr - 1.0) > tol:
        raise ValidationError(f"density operator trace is {tr.real:.3g}, expected 1")
    w = np.linalg.eigvalsh(hermitian_part(rho))
    if w[0] < -tol:
        raise ValidationError(f"density operator has negative eigenvalue {w[0]:.3g}")
    return _frozen(rho)


def ket(v) -> np.ndarray:
    """Normalized state vector check; returns a read-only copy."""
    v = np.asarray(v, dtype=complex).ravel()
    n = np.linalg.norm(v)
    if v.size == 0 or abs(n - 1.0) > TOL.validation:
        raise ValidationError(f"state vector norm is {n:.12g}, expected 1")
    return _frozen(v)


def projector(v) -> np.ndarray:
    v = ket(v)
    return _frozen(np.outer(v, v.conj()))


def tensor(a, b) -> np.ndarray:
    """Kronecker product with the object factor ``a`` first."""
    return np.kron(as_operator(a), as_operator(b))


def _subsystem_index(keep) -> int:
    if keep in (0, "o", "object"):
        return 0
    if keep in (1, "a", "ancilla"):
        return 1
    raise ValueError(f"unknown subsystem {keep!r}; use 'o' or 'a'")


def partial_trace(rho, dims: tuple[int, int], keep="a") -> np.ndarray:
    """Trace out one factor of a bipartite operator.

    ``dims`` is ``(d_o, d_a)``; ``keep`` selects the surviving factor
    (``'o'``/``0`` or ``'a'``/``1``).
    """
    rho = as_operator(rho)
    d_o, d_a = int(dims[0]), int(dims[1])
    if d_o < 1 or d_a < 1 or rho.shape[0] != d_o * d_a:
        raise DimensionError(f"operator of dim {rho.shape[0]} does not factor as {d_o}x{d_a}")
    r = rho.reshape(d_o, d_a, d_o, d_a)
    if _subsystem_index(keep) == 0:
        out = np.einsum("ijkj->ik", r)
    else:
        out = np.einsum("ijik->jk", r)
    return _frozen(out)


def unitary(h, t: float) -> np.ndarray:
    """``exp(-i h t)`` for Hermitian ``h`` via its eigendecomposition."""
    h = as_operator(h)
    if not is_hermitian(h):
        raise ValidationError("Hamiltonian is not Hermitian")
    w, v = np.linalg.eigh(hermitian_part(h))
    return (v * np.exp(-1j * w * t)) @ dagger(v)


def evolve(rho, h, t: float) -> np.ndarray:
    """Unitary evolution ``U rho U^dagger`` with ``U = exp(-i h t)``."""
    rho = density(rho)
    u = unitary(h, t)
    if u.shape != rho.shape:
        raise DimensionError("Hamiltonian and state dimensions differ")
    return density(hermitian_part(u @ rho @ dagger(u)))


def commutator(a, b) -> np.ndarray:
    a, b = as_operator(a), as_operator(b)
    if a.shape != b.shape:
        raise DimensionError("commutator of operators with different dims")
    return a @ b - b @ a


def purity(rho) -> float:
    rho = np.asarray(rho)
    return float(np.real(np.trace(rho @ rho)))


def expectation(op, rho) -> float:
    """Real part of ``Tr(rho op)``."""
    return float(np.real(np.trace(np.asarray(rho) @ np.asarray(op))))


# ---------------------------------------------------------------------------
# measures


def _check_labels(labels, n):
    labels = tuple(str(x) for x in (labels if labels is not None else range(n)))
    if len(labels) != n:
        raise ValidationError(f"{len(labels)} labels for {n} outcomes")
    return labels


def _stack(ops) -> np.ndarray:
    arr = np.array([as_operator(o) for o in ops], dtype=complex)
    if arr.ndim != 3 or len(arr) == 0:
        raise DimensionError("measure needs at least one operator of a common dimension")
    return arr


@dataclass(frozen=True, eq=False)
class EffectSet:
    """A finite decomposition of the identity into positive effects."""

    effects: np.ndarray
    labels: tuple = None
    tol: float = field(default=TOL.validation, repr=False)

    def __post_init__(self):
        effects = _stack(self.effects)
        d = effects.shape[1]
        tol = self.tol
        for k, m in enumerate(effects):
            if not is_hermitian(m, tol):
                raise ValidationError(f"effect {k} is not Hermitian")
            if np.linalg.eigvalsh(hermitian_part(m))[0] < -tol:
                raise ValidationError(f"effect {k} is not positive")
        if np.max(np.abs(effects.sum(axis=0) - np.eye(d))) > tol:
            raise ValidationError("effects do not sum to the identity")
        effects.setflags(write=False)
        object.__setattr__(self, "effects", effects)
        object.__setattr__(self, "labels", _check_labels(self.labels, len(effects)))

    @property
    def dim(self) -> int:
        return self.effects.shape[1]

    def __len__(self):
        return len(self.effects)

    def __iter__(self):
        return iter(self.effects)

    def __getitem__(self, k):
        return self.effects[k]

    def probabilities(self, rho) -> np.ndarray:
        return np.real(np.einsum("kij,ji->k", self.effects, np.asarray(rho)))


@dataclass(frozen=True, eq=False)
class ProjectiveMeasure(EffectSet):
    """Orthogonal projectors summing to the identity."""

    def __post_init__(self):
        super().__post_init__()
        tol = TOL.validation
        e = self.effects
        for i in range(len(e)):
            if np.max(np.abs(e[i] @ e[i] - e[i])) > tol:
                raise ValidationError(f"element {i} is not idempotent")
            for j in range(i + 1, len(e)):
                if np.max(np.abs(e[i] @ e[j])) > tol:
                    raise ValidationError(f"elements {i} and {j} are not orthogonal")

    @classmethod
    def from_basis(cls, vectors, labels=None) -> "ProjectiveMeasure":
        """Rank-one PVM from the columns of a unitary (or a list of kets)."""
        vs = np.asarray(vectors, dtype=complex)
        if isinstance(vectors, (list, tuple)):
            vs = vs.T
        return cls([np.outer(vs[:, i], vs[:, i].conj()) for i in range(vs.shape[1])], labels)

    @classmethod
    def of_observable(cls, a) -> "ProjectiveMeasure":
        """Eigenprojectors of a nondegenerate Hermitian operator, descending eigenvalue."""
        a = as_operator(a)
        if not is_hermitian(a):
            raise ValidationError("observable is not Hermitian")
        w, v = np.linalg.eigh(hermitian_part(a))
        order = np.argsort(-w, kind="stable")
        return cls.from_basis(v[:, order], [f"{w[i]:+g}" for i in order])


def pauli_pvm(axis: str) -> ProjectiveMeasure:
    """Eigenprojectors of sigma_axis ordered (+, -)."""
    pm = ProjectiveMeasure.of_observable(PAULI[axis])
    return ProjectiveMeasure(pm.effects, (f"{axis}+", f"{axis}-"))


@dataclass(frozen=True, eq=False)
class BivariateEffectSet:
    """Effects indexed by an ``N x Ntilde`` grid of joint outcomes."""

    effects: np.ndarray
    row_labels: tuple = None
    col_labels: tuple = None

    def __post_init__(self):
        e = np.asarray(self.effects, dtype=complex)
        if e.ndim != 4 or e.shape[2] != e.shape[3]:
            raise DimensionError("bivariate effects must have shape (N, Ntilde, d, d)")
        EffectSet(e.reshape(-1, e.shape[2], e.shape[3]))  # positivity + completeness
        e = _frozen(e)
        object.__setattr__(self, "effects", e)
        object.__setattr__(self, "row_labels", _check_labels(self.row_labels, e.shape[0]))
        object.__setattr__(self, "col_labels", _check_labels(self.col_labels, e.shape[1]))

    @property
    def dim(self) -> int:
        return self.effects.shape[2]

    def row_marginal(self) -> EffectSet:
        """Effects ``sum_l M_kl`` (outcome ``k`` alone)."""
        return EffectSet(self.effects.sum(axis=1), self.row_labels)

    def col_marginal(self) -> EffectSet:
        return EffectSet(self.effects.sum(axis=0), self.col_labels)

    def probabilities(self, rho) -> np.ndarray:
        return np.real(np.einsum("klij,ji->kl", self.effects, np.asarray(rho)))


# ---------------------------------------------------------------------------
# Schmidt decomposition


@dataclass(frozen=True, eq=False)
class SchmidtDecomposition:
    coefficients: np.ndarray
    left: np.ndarray   # columns are the subsystem-1 basis vectors
    right: np.ndarray  # columns are the subsystem-2 basis vectors

    def reconstruct(self) -> np.ndarray:
        return np.einsum("i,ai,bi->ab", self.coefficients, self.left, self.right).ravel()


def _fix_phase(u: np.ndarray, v: np.ndarray):
    # first entry of largest modulus made real positive; v absorbs the conjugate phase
    for i in range(u.shape[1]):
        col = u[:, i]
        j = int(np.argmax(np.abs(col) >= np.max(np.abs(col)) - 1e-12))
        ph = col[j] / abs(col[j])
        u[:, i] /= ph
        v[:, i] *= ph


def _lex_key(vec: np.ndarray):
    return tuple(np.round(np.column_stack([vec.real, vec.imag]).ravel(), 12))


def schmidt_decompose(psi, dims: tuple[int, int]) -> SchmidtDecomposition:
    """Schmidt form of a normalized bipartite pure state.

    Coefficients come out descending.  Ties (within the degeneracy
    tolerance) are ordered lexicographically on the left vectors' entries,
    after each left vector has been rotated so that its leading entry of
    maximal modulus is real and positive.
    """
    psi = ket(psi)
    d1, d2 = int(dims[0]), int(dims[1])
    if psi.size != d1 * d2:
        raise DimensionError(f"state of length {psi.size} does not factor as {d1}x{d2}")
    u, s, vh = np.linalg.svd(psi.reshape(d1, d2), full_matrices=False)
    v = vh.T.copy()  # psi = sum_i s_i u_i (x) v_i  with v_i = row i of vh
    u = u.copy()
    keep = s > TOL.degeneracy
    u, s, v = u[:, keep], s[keep], v[:, keep]
    _fix_phase(u, v)
    # group ties, sort lexicographically inside each group
    order = []
    i = 0
    while i < len(s):
        j = i + 1
        while j < len(s) and s[i] - s[j] <= TOL.degeneracy:
            j += 1
        group = sorted(range(i, j), key=lambda k: _lex_key(u[:, k]))
        order.extend(group)
        i = j
    return SchmidtDecomposition(s[order].copy(), u[:, order].copy(), v[:, order].copy())


# ---------------------------------------------------------------------------
# Hermitian operator bases (used by tomography and reconstruction)


def hermitian_basis(d: int) -> np.ndarray:
    """Orthonormal (Hilbert-Schmidt) basis of d x d Hermitian matrices.

    Element 0 is ``I/sqrt(d)``; the rest are traceless (generalized Gell-Mann).
    """
    out = [np.eye(d, dtype=complex) / np.sqrt(d)]
    for j in range(d):
        for k in range(j + 1, d):
            s = np.zeros((d, d), dtype=complex)
            s[j, k] = s[k, j] = 1 / np.sqrt(2)
            a = np.zeros((d, d), dtype=complex)
            a[j, k], a[k, j] = -1j / np.sqrt(2), 1j / np.sqrt(2)
            out += [s, a]
    for l in range(1, d):
        diag = np.zeros(d)
        diag[:l] = 1
        diag[l] = -l
        out.append(np.diag(diag / np.sqrt(l * (l + 1))).astype(complex))
    return np.array(out)


def probe_states(d: int) -> np.ndarray:
    """``d**2`` pure states spanning the Hermitian operators on ``C^d``.

    ``|j>``, ``(|j>+|k>)/sqrt2`` and ``(|j>+i|k>)/sqrt2`` for ``j < k``.  For a
    qubit this is ``z+, z-, x+, y+``.
    """
    eye = np.eye(d, dtype=complex)
    kets = [eye[j] for j in range(d)]
    for j in range(d):
        for k in range(j + 1, d):
            kets.append((eye[j] + eye[k]) / np.sqrt(2))
            kets.append((eye[j] + 1j * eye[k]) / np.sqrt(2))
    return np.array([np.outer(v, v.conj()) for v in kets])


def random_density(d: int, rng: np.random.Generator, rank: int | None = None) -> np.ndarray:
    """Ginibre-distributed density operator of the given rank."""
    rank = d if rank is None else rank
    g = rng.normal(size=(d, rank)) + 1j * rng.normal(size=(d, rank))
    rho = g @ dagger(g)
    return rho / np.trace(rho).real


def random_ket(d: int, rng: np.random.Generator) -> np.ndarray:
    v = rng.normal(size=d) + 1j * rng.normal(size=d)
    return v / np.linalg.norm(v)


def random_hermitian(d: int, rng: np.random.Generator, scale: float = 1.0) -> np.ndarray:
    g = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    return scale * hermitian_part(g)


def random_unitary(d: int, rng: np.random.Generator) -> np.ndarray:
    q, r = np.linalg.qr(rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d)))
    return q * (np.diag(r) / np.abs(np.diag(r)))


def check_unitary(u, tol: float = TOL.validation) -> np.ndarray:
    u = as_operator(u)
    if np.max(np.abs(dagger(u) @ u - np.eye(u.shape[0]))) > tol:
        raise ValidationError("operator is not unitary")
    return _frozen(u)

