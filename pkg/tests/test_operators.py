import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qmeasure import operators as ops
from qmeasure.errors import DimensionError, ValidationError

seeds = st.integers(min_value=0, max_value=2**32 - 1)


def test_tensor_examples():
    assert np.allclose(ops.tensor(ops.I2, ops.I2), np.eye(4))
    assert np.allclose(ops.tensor(ops.SZ, ops.I2), np.diag([1, 1, -1, -1]))


def test_pauli_constants_are_read_only():
    with pytest.raises(ValueError):
        ops.SX[0, 0] = 1


@pytest.mark.parametrize("bad", [
    np.array([[1, 1], [0, 0]]),          # not Hermitian
    np.diag([0.7, 0.7]),                 # trace
    np.diag([1.5, -0.5]),                # not positive
])
def test_density_validator_rejects(bad):
    with pytest.raises(ValidationError):
        ops.density(bad)


def test_density_validator_rejects_non_square():
    with pytest.raises(DimensionError):
        ops.density(np.ones((2, 3)) / 2)


@settings(max_examples=50, deadline=None)
@given(seeds, st.integers(2, 4), st.integers(2, 4))
def test_partial_trace_of_product(seed, d_o, d_a):
    rng = np.random.default_rng(seed)
    r_o, r_a = ops.random_density(d_o, rng), ops.random_density(d_a, rng)
    joint = ops.tensor(r_o, r_a)
    assert np.max(np.abs(ops.partial_trace(joint, (d_o, d_a), keep="a") - r_a)) <= 1e-12
    assert np.max(np.abs(ops.partial_trace(joint, (d_o, d_a), keep="o") - r_o)) <= 1e-12


def test_partial_trace_bell_state():
    bell = np.array([1, 0, 0, 1]) / np.sqrt(2)
    rho = np.outer(bell, bell)
    assert np.allclose(ops.partial_trace(rho, (2, 2), keep="o"), np.eye(2) / 2, atol=1e-15)


def test_partial_trace_rejects_wrong_dims():
    with pytest.raises(DimensionError):
        ops.partial_trace(np.eye(4) / 4, (2, 3))


def test_evolve_zero_hamiltonian(rng):
    rho = ops.random_density(3, rng)
    assert np.allclose(ops.evolve(rho, np.zeros((3, 3)), 7.3), rho, atol=1e-14)


def test_evolve_sigma_z_matches_hand_rotation():
    # U = diag(exp(-it), exp(it)) applied to |x+> by hand
    x_plus = np.array([1, 1]) / np.sqrt(2)
    for t in (np.pi / 4, np.pi / 2, 1.3):
        psi = np.array([np.exp(-1j * t), np.exp(1j * t)]) * x_plus
        assert np.allclose(ops.evolve(ops.projector(x_plus), ops.SZ, t), np.outer(psi, psi.conj()), atol=1e-12)
    # a quarter turn of the Bloch vector: x+ -> y+
    y_plus = ops.projector(np.array([1, 1j]) / np.sqrt(2))
    assert np.allclose(ops.evolve(ops.projector(x_plus), ops.SZ, np.pi / 4), y_plus, atol=1e-12)


@settings(max_examples=40, deadline=None)
@given(seeds, st.floats(0.0, 10.0))
def test_evolve_preserves_spectrum(seed, t):
    rng = np.random.default_rng(seed)
    rho = ops.random_density(4, rng)
    h = ops.random_hermitian(4, rng)
    out = ops.evolve(rho, h, t)
    assert np.max(np.abs(np.linalg.eigvalsh(out) - np.linalg.eigvalsh(rho))) <= 1e-8


def test_commutators():
    assert np.allclose(ops.commutator(ops.SZ, ops.SZ), 0)
    assert np.allclose(ops.commutator(ops.SY, ops.SZ), 2j * ops.SX)


def test_schmidt_examples():
    prod = ops.schmidt_decompose(np.kron([1, 0], [0, 1]), (2, 2))
    assert np.allclose(prod.coefficients, [1.0])
    bell = ops.schmidt_decompose(np.array([1, 0, 0, 1]) / np.sqrt(2), (2, 2))
    assert np.allclose(bell.coefficients, [2 ** -0.5] * 2)


@settings(max_examples=30, deadline=None)
@given(seeds)
def test_schmidt_round_trip(seed):
    rng = np.random.default_rng(seed)
    psi = ops.random_ket(12, rng)
    dec = ops.schmidt_decompose(psi, (3, 4))
    assert abs(np.sum(dec.coefficients ** 2) - 1) <= 1e-12
    assert np.max(np.abs(dec.reconstruct() - psi)) <= 1e-10


def test_hermitian_basis_orthonormal():
    for d in (2, 3, 4):
        b = ops.hermitian_basis(d)
        gram = np.einsum("aij,bji->ab", b, b)
        assert np.allclose(gram, np.eye(d * d), atol=1e-12)
        assert np.allclose(b[0], np.eye(d) / np.sqrt(d))


def test_probe_states_are_informationally_complete():
    for d in (2, 3):
        probes = ops.probe_states(d)
        design = np.einsum("nij,bji->nb", probes, ops.hermitian_basis(d))
        assert np.linalg.matrix_rank(design) == d * d


def test_effect_set_validation():
    ops.EffectSet([np.eye(2) / 2, np.eye(2) / 2])
    with pytest.raises(ValidationError):
        ops.EffectSet([np.eye(2) / 2, np.eye(2) / 3])
    with pytest.raises(ValidationError):
        ops.EffectSet([np.diag([1.2, 0.5]), np.diag([-0.2, 0.5])])


def test_projective_measure_checks_idempotence():
    with pytest.raises(ValidationError):
        ops.ProjectiveMeasure([np.diag([1, 0.5]), np.diag([0, 0.5])])


def test_of_observable_orders_eigenvalues_descending():
    pvm = ops.ProjectiveMeasure.of_observable(ops.SZ)
    assert np.allclose(pvm.effects[0], np.diag([1, 0]))


def test_bivariate_marginals(rng):
    from qmeasure.wigner import random_joint_qubit
    biv = random_joint_qubit(rng)
    assert np.allclose(biv.row_marginal().effects.sum(axis=0), np.eye(2))
    rho = ops.random_density(2, rng)
    assert np.allclose(biv.probabilities(rho).sum(axis=1), biv.row_marginal().probabilities(rho))
