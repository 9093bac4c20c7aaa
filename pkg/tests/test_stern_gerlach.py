import numpy as np
import pytest
from scipy.integrate import solve_ivp

from qmeasure import nonideality as ni
from qmeasure import stern_gerlach as sg
from qmeasure.errors import NumericalGuardError, ValidationError


def test_initial_state_expectations(default_params):
    s = sg.build_initial_state(default_params, [1, 0])
    assert np.allclose(s.spin_expectations(), [0, 0, 1], atol=1e-12)
    s = sg.build_initial_state(default_params, np.array([1, 1]) / np.sqrt(2))
    sx, _, sz = s.spin_expectations()
    assert abs(sz) <= 1e-12 and abs(sx - 1) <= 1e-12
    for spin in ("z+", "x-", sg.GENERIC_SPIN):
        s = sg.build_initial_state(default_params, spin)
        assert abs(s.momentum_expectations()[1]) <= 1e-8
        assert abs(s.norm() - 1) <= 1e-12


def test_free_packet(default_params):
    p = default_params.with_(a=0.0, b=0.0)
    s0 = sg.build_initial_state(p, "z+")
    s1 = sg.evolve_sg(s0, p)
    assert abs(s1.momentum_expectations()[1]) <= 1e-8
    assert np.allclose(sg.readout_momentum_bins(s1).probabilities, [0.5, 0.5], atol=1e-8)


def test_ehrenfest_against_ode(default_params):
    p = default_params
    s0 = sg.build_initial_state(p, sg.GENERIC_SPIN)
    s1, traj = sg.evolve_sg(s0, p, record=True)
    sz0 = s0.spin_expectations()[2]

    # d<Pz>/dt = (mu/2) b <sz>, d<sz>/dt = 0 for the ideal field
    def rhs(t, y):
        return [0.5 * p.mu * p.b * y[1], 0.0]

    sol = solve_ivp(rhs, (0, p.tau), [0.0, sz0], t_eval=traj.t, rtol=1e-10, atol=1e-12)
    pz_ode = sol.y[0]
    assert abs(traj.pz[-1] - pz_ode[-1]) <= 5e-3 * abs(pz_ode[-1])
    # local check: finite-difference force against the force operator along the path
    dpz = np.gradient(traj.pz, traj.t)
    force = 0.5 * p.mu * p.b * traj.sigma[:, 2]
    assert np.max(np.abs(dpz[1:-1] - force[1:-1])) <= 5e-3 * np.max(np.abs(force))


def test_norm_conserved(default_params):
    s0 = sg.build_initial_state(default_params, "x+")
    _, traj = sg.evolve_sg(s0, default_params, record=True)
    assert np.max(np.abs(traj.norm - traj.norm[0])) <= 1e-6


def test_strict_correlation(default_params):
    corr = sg.strict_correlation(default_params)
    assert corr["z+"] >= 0.99 and corr["z-"] >= 0.99


def test_ideal_calibration_is_near_identity(default_params):
    lam = sg.calibrate(default_params)
    assert np.allclose(lam.sum(axis=0), 1, atol=1e-10)
    assert lam[0, 1] <= 0.01 and lam[1, 0] <= 0.01


def test_no_coupling_calibration(default_params):
    lam = sg.calibrate(default_params.with_(a=0.0, b=0.0))
    assert np.allclose(lam, 0.5, atol=1e-8)


def test_corrected_is_nonideal_and_matches_tomography(corrected_calibration, corrected_povm, pvm_z):
    lam = corrected_calibration
    assert lam[0, 1] > 0.01 and lam[1, 0] > 0.01
    lam_t, resid = ni.nonideality_matrix(corrected_povm, pvm_z)
    assert np.max(np.abs(lam_t - lam)) <= 1e-6
    # spin-flip symmetry of the s-wave packet: the marginal POVM is diagonal in sz
    assert resid <= 1e-3


def test_constants_of_motion(default_params, corrected_params):
    assert sg.conserved_quantity_residual(default_params, "sigma_z") <= 1e-8
    assert sg.conserved_quantity_residual(corrected_params, "sigma_z") > 1e-3
    assert sg.conserved_quantity_residual(corrected_params, "Lx_minus_half_sigma_x") <= 1e-4


def test_field_divergence():
    assert sg.field_divergence_check("corrected") == 0
    assert sg.field_divergence_check("quadrupole") == 0
    p = sg.SgParams(b=1.0)
    assert abs(sg.field_divergence_check("ideal", p)) == 1.0


def test_quadrupole_extraction(quadrupole_povm, pvm_y, pvm_z):
    eff = quadrupole_povm.effects.reshape(-1, 2, 2)
    assert min(np.linalg.eigvalsh(m)[0] for m in eff) >= -1e-6
    assert np.max(np.abs(eff.sum(axis=0) - np.eye(2))) <= 1e-6
    _, r_e = ni.nonideality_matrix(quadrupole_povm.row_marginal(), pvm_y)
    _, r_f = ni.nonideality_matrix(quadrupole_povm.col_marginal(), pvm_z)
    assert r_e <= 1e-3 and r_f <= 1e-3


def test_quadrupole_marginal_matches_univariate():
    p = sg.SgParams(variant="quadrupole")
    joint = sg.run(p, "z+").probabilities.reshape(2, 2)
    # summing out the py sign leaves the pz readout of the same field
    uni = sg.run(p.with_(variant="corrected"), "z+").probabilities
    assert np.max(np.abs(joint.sum(axis=0) - uni)) <= 1e-6


def test_quadrupole_cannot_be_calibrated():
    with pytest.raises(ValidationError):
        sg.calibrate(sg.SgParams(variant="quadrupole"))


def test_step_guard():
    p = sg.SgParams(steps=10)
    with pytest.raises(NumericalGuardError):
        sg.evolve_sg(sg.build_initial_state(p, "z+"), p)


@pytest.mark.parametrize("kw", [{"grid_n": 100}, {"variant": "dipole"}, {"packet_width": 5.0}, {"tau": -1.0}])
def test_params_validation(kw):
    with pytest.raises(ValidationError):
        sg.SgParams(**kw)


def test_load_params_formats(tmp_path):
    j = tmp_path / "p.json"
    j.write_text('{"b": 2.5, "gridN": 64, "variant": "corrected"}')
    p = sg.load_params(j)
    assert (p.b, p.grid_n, p.variant) == (2.5, 64, "corrected")
    kv = tmp_path / "p.cfg"
    kv.write_text("# comment\nb = 3\npacketWidth = 0.8\n")
    p = sg.load_params(kv, tau=1.0)
    assert (p.b, p.packet_width, p.tau) == (3.0, 0.8, 1.0)
    bad = tmp_path / "bad.json"
    bad.write_text('{"bogus": 1}')
    with pytest.raises(ValidationError):
        sg.load_params(bad)
