#!/usr/bin/env python3
"""Measurement nonideality and entropic uncertainty.

The two marginals of the quadrupole Stern-Gerlach readout are nonideal
measurements of sigma_y and sigma_z.  Their average row entropies cannot
both be small: J(lambda) + J(mu) >= -ln max Tr(E_i F_j) = ln 2.  Adding the
preparation entropy gives a total uncertainty whose excess over the
measurement bound is exactly the von Neumann entropy.  The Robertson
relation for the same observables is shown for contrast.

Run:
  python3 demos/03_uncertainty.py          (about 5 s)
"""
import numpy as np

from qmeasure import nonideality as ni
from qmeasure import operators as ops
from qmeasure import stern_gerlach as sg


def main():
    pe, pf = ops.pauli_pvm("y"), ops.pauli_pvm("z")
    biv = sg.extract_spin_povm(sg.SgParams(variant="quadrupole"))
    lam, r_e = ni.nonideality_matrix(biv.row_marginal(), pe)
    mu, r_f = ni.nonideality_matrix(biv.col_marginal(), pf)
    print("lambda (sign of Py vs sigma_y):\n", np.round(lam, 4), f"\n  fit residual {r_e:.1e}")
    print("mu (sign of Pz vs sigma_z):\n", np.round(mu, 4), f"\n  fit residual {r_f:.1e}")

    rep = ni.check_martens(lam, mu, pe, pf)
    print(f"\nJ(lambda) + J(mu) = {rep.lhs:.4f} >= {rep.rhs:.4f} : {rep.satisfied}")

    print("\ntotal uncertainty for a few preparations")
    for name, rho in [("|z+>", ops.projector([1, 0])),
                      ("0.8|z+> + 0.2|z->", np.diag([0.8, 0.2])),
                      ("I/2", np.eye(2) / 2)]:
        u = ni.total_uncertainty(rho, lam, mu)
        print(f"  {name:>18}: Delta = {u.Delta:.4f}, bound = {u.bound:.4f}, slack = H_vN = {u.H_vN:.4f}")

    print("\nRobertson: Delta sy Delta sz >= |<[sy, sz]>|/2 = |<sx>|")
    for name, psi in [("|x+>", np.array([1, 1]) / np.sqrt(2)), ("|z+>", np.array([1, 0])),
                      ("generic", sg.GENERIC_SPIN)]:
        lhs, rhs = ni.robertson_bound(ops.SY, ops.SZ, psi)
        print(f"  {name:>8}: {lhs:.4f} >= {rhs:.4f}")
    print("  (the Robertson bound vanishes on sigma_z eigenstates; the Martens bound does not)")


if __name__ == "__main__":
    main()
