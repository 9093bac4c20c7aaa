import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qmeasure import operators as ops
from qmeasure import premeasurement as pm
from qmeasure.errors import IllConditionedError, ValidationError

seeds = st.integers(min_value=0, max_value=2**32 - 1)


def test_identity_unitary_gives_product_state(rng):
    model = pm.identity_model()
    rho = ops.random_density(2, rng)
    joint = pm.apply_premeasurement(model, rho)
    assert np.allclose(joint, ops.tensor(rho, model.ancilla_init), atol=1e-14)


def test_controlled_flip_fixed_point():
    model = pm.controlled_flip_model()
    out = pm.apply_premeasurement(model, ops.projector([1, 0]))
    assert np.allclose(out, np.diag([1, 0, 0, 0]), atol=1e-15)


def test_controlled_flip_makes_bell_state():
    model = pm.controlled_flip_model()
    plus = np.array([1, 1]) / np.sqrt(2)
    # oracle: CNOT by hand on |+>|0>
    cnot = np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]])
    psi = cnot @ np.kron(plus, [1, 0])
    out = pm.apply_premeasurement(model, ops.projector(plus))
    assert np.max(np.abs(out - np.outer(psi, psi))) <= 1e-12


def test_pointer_probabilities_examples():
    rec = pm.pointer_probabilities(pm.identity_model(), ops.projector([1, 0]))
    assert np.allclose(rec.probabilities, [1, 0])
    plus = np.array([1, 1]) / np.sqrt(2)
    rec = pm.pointer_probabilities(pm.controlled_flip_model(), ops.projector(plus))
    assert np.allclose(rec.probabilities, [0.5, 0.5], atol=1e-15)


def test_identity_model_effects_are_constants():
    eff = pm.extract_effective_povm(pm.identity_model())
    assert np.allclose(eff.effects[0], np.eye(2), atol=1e-12)
    assert np.allclose(eff.effects[1], 0, atol=1e-12)


@pytest.mark.parametrize("d", [2, 3])
def test_controlled_flip_realizes_pvm(d):
    eff = pm.extract_effective_povm(pm.controlled_flip_model(d))
    for k in range(d):
        target = np.zeros((d, d))
        target[k, k] = 1
        assert np.max(np.abs(eff.effects[k] - target)) <= 1e-9


@settings(max_examples=40, deadline=None)
@given(seeds)
def test_tomography_matches_heisenberg_closed_form(seed):
    model = pm.random_model(np.random.default_rng(seed))
    a = pm.extract_effective_povm(model).effects
    b = pm.heisenberg_effects(model).effects
    assert np.max(np.abs(a - b)) <= 1e-9
    assert np.max(np.abs(a.sum(axis=0) - np.eye(model.object_dim))) <= 1e-9


@settings(max_examples=25, deadline=None)
@given(seeds)
def test_extraction_independent_of_probe_basis(seed):
    rng = np.random.default_rng(seed)
    model = pm.random_model(rng, d_o=2)
    other = np.array([ops.random_density(2, rng) for _ in range(6)])
    a = pm.extract_effective_povm(model).effects
    b = pm.extract_effective_povm(model, other).effects
    assert np.max(np.abs(a - b)) <= 1e-8


@settings(max_examples=25, deadline=None)
@given(seeds)
def test_extracted_effects_are_hermitian_and_positive(seed):
    model = pm.random_model(np.random.default_rng(seed), d_o=3, d_a=2, outcomes=2)
    for m in pm.extract_effective_povm(model).effects:
        assert ops.is_hermitian(m)
        assert np.linalg.eigvalsh(m)[0] >= -1e-8


def test_identity_unitary_deviation_is_zero(rng):
    rep = pm.check_probability_identity(pm.identity_model(), ops.random_density(2, rng))
    assert rep.deviation <= 1e-15


def test_rank_deficient_probes_raise():
    probes = np.array([ops.projector([1, 0]), ops.projector([0, 1]), ops.projector([1, 0]), ops.projector([0, 1])])
    with pytest.raises(IllConditionedError):
        pm.extract_effective_povm(pm.controlled_flip_model(), probes)


def test_model_requires_exactly_one_dynamics():
    with pytest.raises(ValidationError):
        pm.MeasurementModel(2, 2, ops.projector([1, 0]), pm.computational_pointer(2))


def test_hamiltonian_model_and_stationarity():
    cf = pm.controlled_flip_model()
    # H = (pi/2) |1><1| (x) (I - sx); exp(-iH) is exactly the controlled flip
    h = np.kron((np.eye(2) - ops.SZ) / 2, np.eye(2) - ops.SX) * np.pi / 2
    model = pm.MeasurementModel(2, 2, cf.ancilla_init, cf.pointer, hamiltonian=h, time=1.0)
    assert np.allclose(pm.extract_effective_povm(model).effects, pm.extract_effective_povm(cf).effects, atol=1e-12)
    # at T = 2 the flip is undone, so statistics of |1> move while |0> is untouched
    assert pm.is_stationary(model, ops.projector([1, 0]))
    assert not pm.is_stationary(model, ops.projector([0, 1]))


def test_ideal_premeasurement_has_fixed_ancilla_basis():
    # U(psi (x) |0>) = a|00> + b|11>: the ancilla Schmidt basis is always computational
    model = pm.controlled_flip_model()
    for theta in (0.3, 0.6, 1.1):
        dec = pm.ancilla_schmidt(model, np.array([np.cos(theta), np.sin(theta)]))
        assert np.allclose(np.abs(dec.right), np.eye(2)[:, :dec.right.shape[1]] if theta < np.pi / 4
                           else np.eye(2)[:, ::-1][:, :dec.right.shape[1]], atol=1e-12)


def test_schmidt_basis_depends_on_object_input_generic(rng):
    model = pm.random_model(rng, d_o=2, d_a=2, outcomes=2)
    dev = []
    for _ in range(5):
        a = pm.ancilla_schmidt(model, ops.random_ket(2, rng))
        b = pm.ancilla_schmidt(model, ops.random_ket(2, rng))
        dev.append(1 - abs(np.vdot(a.right[:, 0], b.right[:, 0])))
    assert max(dev) > 1e-3


def test_model_json_round_trip(rng):
    model = pm.random_model(rng)
    doc = json.loads(json.dumps(pm.model_to_dict(model)))
    back = pm.model_from_dict(doc)
    assert np.allclose(back.U, model.U, atol=1e-14)
    assert np.allclose(back.ancilla_init, model.ancilla_init)


def test_probability_record_validation():
    with pytest.raises(ValidationError):
        pm.ProbabilityRecord(("a", "b"), [0.6, 0.6])
    with pytest.raises(ValidationError):
        pm.ProbabilityRecord(("a", "b"), [1.1, -0.1])
