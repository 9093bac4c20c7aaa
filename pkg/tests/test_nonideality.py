import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qmeasure import nonideality as ni
from qmeasure import operators as ops
from qmeasure import premeasurement as pm
from qmeasure.errors import ValidationError
from qmeasure.wigner import random_joint_qubit, random_switching_joint

seeds = st.integers(min_value=0, max_value=2**32 - 1)
LN2 = np.log(2)


def random_stochastic(rng, n, m):
    return rng.dirichlet(np.ones(n) * rng.uniform(0.1, 3), size=m).T


def test_nonideality_matrix_examples(pvm_z):
    lam, resid = ni.nonideality_matrix(pvm_z, pvm_z)
    assert np.allclose(lam, np.eye(2)) and resid == 0
    lam, resid = ni.nonideality_matrix(ops.EffectSet([np.eye(2) / 2, np.eye(2) / 2]), pvm_z)
    assert np.allclose(lam, 0.5) and resid <= 1e-15


def test_columns_sum_to_one_for_generated_effects(rng):
    pvm = ops.ProjectiveMeasure.from_basis(ops.random_unitary(3, rng).T)
    for _ in range(20):
        model = pm.random_model(rng, d_o=3, d_a=2, outcomes=4)
        lam, _ = ni.nonideality_matrix(pm.heisenberg_effects(model), pvm)
        assert np.max(np.abs(lam.sum(axis=0) - 1)) <= 1e-10


def test_corrected_sg_effects(corrected_povm, pvm_z, corrected_calibration):
    lam, resid = ni.nonideality_matrix(corrected_povm, pvm_z)
    assert np.max(np.abs(lam.sum(axis=0) - 1)) <= 1e-10
    assert resid <= 1e-3
    assert np.max(np.abs(lam - corrected_calibration)) <= 1e-6


def test_check_stochastic_rejects():
    with pytest.raises(ValidationError):
        ni.check_stochastic([[0.5, 0.5], [0.4, 0.5]])
    with pytest.raises(ValidationError):
        ni.check_stochastic([[1.2, 0.5], [-0.2, 0.5]])


def test_J_examples():
    assert ni.row_entropy_J(np.eye(2)) == 0
    assert abs(ni.row_entropy_J(np.full((2, 2), 0.5)) - LN2) <= 1e-15
    # hand value: rows (0.9, 0.2) and (0.1, 0.8)
    lam = np.array([[0.9, 0.2], [0.1, 0.8]])
    h = lambda r: -sum(x / sum(r) * np.log(x / sum(r)) * sum(r) for x in r)
    assert abs(ni.row_entropy_J(lam) - (h(lam[0]) + h(lam[1])) / 2) <= 1e-14


def test_J_nonnegative_on_random_matrices(rng):
    for _ in range(1000):
        n, m = rng.integers(1, 6, size=2)
        lam = random_stochastic(rng, n, m)
        assert ni.row_entropy_J(lam) >= -1e-12


def test_J_invariant_under_row_permutation(rng):
    lam = random_stochastic(rng, 4, 3)
    assert abs(ni.row_entropy_J(lam) - ni.row_entropy_J(lam[::-1])) <= 1e-14


@settings(max_examples=200, deadline=None)
@given(seeds)
def test_J_zero_iff_ideal(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 5))
    lam = np.eye(n)[rng.permutation(n)]
    if rng.random() < 0.5:
        lam = 0.999 * lam + 0.001 * random_stochastic(rng, n, n)
    j = ni.row_entropy_J(lam)
    if j <= 1e-12:
        assert any(np.max(np.abs(lam[list(p)] - np.eye(n))) <= 1e-6 for p in itertools.permutations(range(n)))
    else:
        assert not np.allclose(ni.canonical_rows(lam), np.eye(n), atol=0)


def test_von_neumann_entropy(rng):
    assert abs(ni.von_neumann_entropy(ops.projector([1, 0]))) <= 1e-15
    assert abs(ni.von_neumann_entropy(np.eye(2) / 2) - LN2) <= 1e-15
    rho = ops.random_density(4, rng)
    w = np.linalg.eigvals(rho).real
    oracle = -sum(x * np.log(x) for x in w if x > 0)
    assert abs(ni.von_neumann_entropy(rho) - oracle) <= 1e-10


def test_total_uncertainty_examples():
    pure = ops.projector([1, 0])
    assert ni.total_uncertainty(pure, np.eye(2)).Delta == 0
    rep = ni.total_uncertainty(np.eye(2) / 2, np.eye(2))
    assert abs(rep.Delta - LN2) <= 1e-15 and abs(rep.slack - LN2) <= 1e-15


def test_generalized_martens_slack_is_entropy(rng):
    for _ in range(200):
        d = int(rng.integers(2, 4))
        rho = ops.random_density(d, rng)
        lam, mu = random_stochastic(rng, 3, d), random_stochastic(rng, 2, d)
        rep = ni.generalized_martens(rho, lam, mu)
        assert rep.satisfied
        assert abs(rep.slack - ni.von_neumann_entropy(rho)) <= 1e-12


def test_martens_bound_examples(rng, pvm_y, pvm_z):
    assert ni.martens_bound(pvm_z, pvm_z) == 0
    assert abs(ni.martens_bound(pvm_y, pvm_z) - LN2) <= 1e-15
    for _ in range(50):
        e = ops.ProjectiveMeasure.from_basis(ops.random_unitary(2, rng).T)
        f = ops.ProjectiveMeasure.from_basis(ops.random_unitary(2, rng).T)
        brute = max(np.trace(a @ b).real for a in e.effects for b in f.effects)
        assert abs(ni.martens_bound(e, f) + np.log(brute)) <= 1e-12


def test_martens_examples(pvm_y, pvm_z):
    half = np.full((2, 2), 0.5)
    rep = ni.check_martens(half, half, pvm_y, pvm_z)
    assert rep.satisfied and abs(rep.lhs - 2 * LN2) <= 1e-14
    rep = ni.check_martens(np.eye(2), np.eye(2), pvm_z, pvm_z)
    assert rep.lhs == 0 == rep.rhs and rep.satisfied


def test_martens_on_generated_joint_measurements(rng, pvm_y, pvm_z):
    for _ in range(200):
        biv = random_joint_qubit(rng)
        lam, _ = ni.nonideality_matrix(biv.row_marginal(), pvm_y)
        mu, _ = ni.nonideality_matrix(biv.col_marginal(), pvm_z)
        assert ni.check_martens(lam, mu, pvm_y, pvm_z, tol=1e-12).satisfied
    for _ in range(100):
        d = int(rng.integers(2, 4))
        pe = ops.ProjectiveMeasure.from_basis(np.eye(d))
        pf = ops.ProjectiveMeasure.from_basis(ops.random_unitary(d, rng).T)
        biv = random_switching_joint(rng, pe, pf)
        lam, _ = ni.nonideality_matrix(biv.row_marginal(), pe)
        mu, _ = ni.nonideality_matrix(biv.col_marginal(), pf)
        assert ni.check_martens(lam, mu, pe, pf, tol=1e-12).satisfied


def test_martens_quadrupole(quadrupole_povm, pvm_y, pvm_z):
    lam, _ = ni.nonideality_matrix(quadrupole_povm.row_marginal(), pvm_y)
    mu, _ = ni.nonideality_matrix(quadrupole_povm.col_marginal(), pvm_z)
    rep = ni.check_martens(lam, mu, pvm_y, pvm_z)
    assert rep.satisfied and rep.lhs >= LN2 - 1e-6


def test_robertson_examples():
    lhs, rhs = ni.robertson_bound(ops.SX, ops.SX, [1, 0])
    assert rhs == 0 and lhs >= 0
    lhs, rhs = ni.robertson_bound(ops.SY, ops.SZ, [1, 0])
    assert abs(lhs) <= 1e-15 and abs(rhs) <= 1e-15
    lhs, rhs = ni.robertson_bound(ops.SY, ops.SZ, np.array([1, 1]) / np.sqrt(2))
    assert abs(lhs - 1) <= 1e-12 and abs(rhs - 1) <= 1e-12


def test_robertson_random(rng):
    for _ in range(1000):
        d = int(rng.integers(2, 5))
        rep = ni.check_robertson(ops.random_hermitian(d, rng), ops.random_hermitian(d, rng), ops.random_ket(d, rng))
        assert rep.lhs - rep.rhs >= -1e-10


def test_robertson_rejects_non_hermitian():
    with pytest.raises(ValidationError):
        ni.robertson_bound(np.array([[0, 1], [0, 0]]), ops.SZ, [1, 0])


def test_report_digest_is_stable(pvm_y, pvm_z):
    a = ni.check_martens(np.eye(2), np.eye(2), pvm_y, pvm_z).to_dict()
    b = ni.check_martens(np.eye(2), np.eye(2), pvm_y, pvm_z).to_dict()
    assert a == b and len(a["inputs_digest"]) == 16
