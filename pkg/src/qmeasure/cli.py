"""Command-line front end.

    qmeasure sg run        simulate one Stern-Gerlach input, write probabilities/trajectory
    qmeasure sg calibrate  nonideality matrix from the sigma_z eigenstate inputs
    qmeasure tomography    effective object POVM (abstract model or Stern-Gerlach)
    qmeasure inequalities  Martens / generalized Martens / Robertson reports
    qmeasure sample        draw a measurement record
    qmeasure convergence   frequency error against sample size

Exit status: 0 success, 2 configuration/validation error, 3 numerical guard.
Flags override config-file values, which override built-in defaults.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import nonideality as ni
from . import operators as ops
from . import premeasurement as pm
from . import sampling
from . import stern_gerlach as sg
from . import wigner as wg
from .errors import NumericalGuardError, ValidationError
from .reports import write_csv, write_json

log = logging.getLogger("qmeasure")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3


class UsageError(ValidationError):
    pass


# ---------------------------------------------------------------------------
# config helpers


def _read_config(path) -> dict:
    if path is None:
        return {}
    p = Path(path)
    if not p.is_file():
        raise UsageError(f"config file not found: {p}")
    text = p.read_text()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError:
        doc = {}
        for line in text.splitlines():
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise UsageError(f"cannot parse config line {line!r}")
            k, v = (s.strip() for s in line.split("=", 1))
            doc[k] = v
    if not isinstance(doc, dict):
        raise UsageError("config must be a JSON object or key = value lines")
    return doc


def _parse_sets(items) -> dict:
    out = {}
    for item in items or ():
        if "=" not in item:
            raise UsageError(f"--set expects key=value, got {item!r}")
        k, v = item.split("=", 1)
        out[k.strip()] = v.strip()
    return out


_SG_KEYS = {"a", "b", "mu", "m", "tau", "grid_n", "gridN", "extent", "packet_width", "packetWidth",
            "steps", "variant"}


def _sg_params(args, cfg: dict) -> sg.SgParams:
    raw = dict(cfg.get("sg", {k: v for k, v in cfg.items() if k in _SG_KEYS}))
    raw.update(_parse_sets(getattr(args, "set", None)))
    if getattr(args, "variant", None):
        raw["variant"] = args.variant
    return sg.params_from_mapping(raw)


def _out_dir(args) -> Path:
    out = Path(args.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise UsageError(f"cannot create output directory {out}: {exc}") from exc
    return out


def _formats(args):
    if args.json or args.csv:
        return bool(args.json), bool(args.csv)
    return True, True


def _spin(name_or_vec):
    if isinstance(name_or_vec, str):
        if name_or_vec not in sg.SPINS:
            raise UsageError(f"unknown spin {name_or_vec!r}; choose from {sorted(sg.SPINS)}")
        return name_or_vec
    return np.asarray(name_or_vec, dtype=complex)


def _matrix(doc, what: str) -> np.ndarray:
    """Decode a matrix given as nested reals or rows of [re, im] pairs."""
    try:
        a = np.array(doc, dtype=float)
    except (TypeError, ValueError) as exc:
        raise UsageError(f"{what}: not a numeric matrix") from exc
    if a.ndim == 3 and a.shape[-1] == 2:
        return a[..., 0] + 1j * a[..., 1]
    if a.ndim == 2:
        return a.astype(complex)
    raise UsageError(f"{what}: expected a 2-d matrix or rows of [re, im] pairs")


def _vector(doc, what: str) -> np.ndarray:
    a = np.array(doc, dtype=float)
    if a.ndim == 2 and a.shape[-1] == 2:
        return a[:, 0] + 1j * a[:, 1]
    if a.ndim == 1:
        return a.astype(complex)
    raise UsageError(f"{what}: expected a vector or [re, im] pairs")


def _pvm(doc, what: str) -> ops.ProjectiveMeasure:
    if isinstance(doc, str):
        if doc.startswith("sigma_") and doc[-1] in "xyz":
            return ops.pauli_pvm(doc[-1])
        raise UsageError(f"{what}: unknown PVM name {doc!r}")
    if not isinstance(doc, list) or not doc:
        raise UsageError(f"{what}: PVM must be a list of projector matrices or 'sigma_x|y|z'")
    try:
        return ops.ProjectiveMeasure([_matrix(m, what) for m in doc])
    except ValidationError as exc:
        raise UsageError(f"{what}: {exc}") from exc


def _effects_doc(effects) -> list:
    return [np.asarray(m) for m in effects]


# ---------------------------------------------------------------------------
# sg


def _sg_report_base(params, spin, args, cfg) -> dict:
    return {"config": {"sg": asdict(params), "spin": spin if isinstance(spin, str) else np.asarray(spin),
                       "seed": args.seed, "resolved_steps": params.resolved_steps(),
                       "file": cfg}}


def cmd_sg_run(args) -> int:
    cfg = _read_config(args.config)
    params = _sg_params(args, cfg)
    spin = _spin(args.spin or cfg.get("spin", "z+"))
    out = _out_dir(args)
    want_json, want_csv = _formats(args)

    s0 = sg.build_initial_state(params, spin)
    s1, traj = sg.evolve_sg(s0, params, record=True)
    probs = sg.readout_momentum_bins(s1)
    sigma0 = s0.spin_expectations()
    pz_pred = 0.5 * params.mu * params.b * params.tau * sigma0[2]
    report = _sg_report_base(params, spin, args, cfg)
    report.update({
        "probabilities": probs.as_dict(),
        "final": {"py": float(s1.momentum_expectations()[0]), "pz": float(s1.momentum_expectations()[1]),
                  "sigma": s1.spin_expectations()},
        "diagnostics": {
            "norm_drift": float(abs(s1.norm() - s0.norm())),
            "pz_heisenberg_prediction": float(pz_pred),
            "field_divergence": sg.field_divergence_check(params.variant, params),
            "sigma_z_drift": float(abs(s1.spin_expectations()[2] - sigma0[2])),
        },
    })
    if args.calibrate and params.variant != "quadrupole":
        lam = sg.calibrate(params)
        report["lambda"] = lam
        report["J_lambda"] = ni.row_entropy_J(lam)
        if want_csv:
            write_csv(out / "lambda.csv", ["row", "z+", "z-"],
                      [[lab, *lam[i]] for i, lab in enumerate(sg.UNIVARIATE_LABELS)], args.gnuplot_ready)
    if args.samples:
        counts = sampling.sample_outcomes(probs, args.samples, args.seed)
        report["samples"] = {"n": args.samples, "counts": dict(zip(counts.labels, counts.counts.tolist()))}
    if want_csv:
        write_csv(out / "probabilities.csv", ["outcome", "probability"],
                  zip(probs.labels, probs.probabilities), args.gnuplot_ready)
        write_csv(out / "trajectory.csv", ["t", "py", "pz", "sigma_x", "sigma_y", "sigma_z", "norm"],
                  ([t, py, pz, *sig, n] for t, py, pz, sig, n in
                   zip(traj.t, traj.py, traj.pz, traj.sigma, traj.norm)), args.gnuplot_ready)
    if want_json:
        write_json(out / "report.json", report)
    print(json.dumps(probs.as_dict()))
    return EXIT_OK


def cmd_sg_calibrate(args) -> int:
    cfg = _read_config(args.config)
    params = _sg_params(args, cfg)
    if params.variant == "quadrupole":
        raise UsageError("calibration needs a univariate variant (ideal or corrected)")
    out = _out_dir(args)
    want_json, want_csv = _formats(args)
    lam = sg.calibrate(params)
    report = _sg_report_base(params, "z+/z-", args, cfg)
    report.update({"lambda": lam, "column_sums": lam.sum(axis=0), "J_lambda": ni.row_entropy_J(lam)})
    if args.tomography:
        effects = sg.extract_spin_povm(params)
        lam_t, resid = ni.nonideality_matrix(effects, ops.pauli_pvm("z"))
        report["tomography"] = {"effects": _effects_doc(effects.effects), "lambda": lam_t,
                                "fit_residual": resid,
                                "max_deviation_from_calibration": float(np.max(np.abs(lam_t - lam)))}
    if want_csv:
        write_csv(out / "lambda.csv", ["row", "z+", "z-"],
                  [[lab, *lam[i]] for i, lab in enumerate(sg.UNIVARIATE_LABELS)], args.gnuplot_ready)
    if want_json:
        write_json(out / "report.json", report)
    print(json.dumps({"lambda": lam.tolist()}))
    return EXIT_OK


# ---------------------------------------------------------------------------
# tomography


def _tomography_abstract(model: pm.MeasurementModel, args) -> dict:
    effects = pm.extract_effective_povm(model)
    rng = sampling.generator(args.seed, 1)
    states = list(ops.probe_states(model.object_dim))
    states += [ops.random_density(model.object_dim, rng) for _ in range(10)]
    dev = max(pm.check_probability_identity(model, r, effects).deviation for r in states)
    eye = np.eye(model.object_dim)
    trivial = all(np.max(np.abs(m - np.trace(m).real / model.object_dim * eye)) < 1e-9 for m in effects)
    doc = {"effects": _effects_doc(effects.effects), "labels": list(effects.labels),
           "probability_identity_max_deviation": dev, "no_information_transfer": bool(trivial)}
    if model.object_dim == 2:
        lam, resid = ni.nonideality_matrix(effects, ops.pauli_pvm("z"))
        doc["lambda_vs_sigma_z"] = {"lambda": lam, "fit_residual": resid, "J": ni.row_entropy_J(lam)}
    return doc


def _tomography_sg(params: sg.SgParams, args) -> dict:
    povm = sg.extract_spin_povm(params)
    if params.variant != "quadrupole":
        lam, resid = ni.nonideality_matrix(povm, ops.pauli_pvm("z"))
        doc = {"effects": _effects_doc(povm.effects), "labels": list(povm.labels),
               "lambda": lam, "fit_residual": resid, "J_lambda": ni.row_entropy_J(lam)}
        if args.wigner:
            w = wg.wigner_univariate(povm, lam)
            doc["wigner"] = {"elements": w.elements,
                             "max_deviation_from_pvm": float(np.max(np.abs(w.elements - ops.pauli_pvm("z").effects)))}
        return doc
    pe, pf = ops.pauli_pvm("y"), ops.pauli_pvm("z")
    lam, r_e = ni.nonideality_matrix(povm.row_marginal(), pe)
    mu, r_f = ni.nonideality_matrix(povm.col_marginal(), pf)
    doc = {"effects": povm.effects, "row_labels": list(povm.row_labels), "col_labels": list(povm.col_labels),
           "lambda": lam, "mu": mu, "fit_residuals": [r_e, r_f],
           "min_effect_eigenvalue": float(min(np.linalg.eigvalsh(m)[0] for m in povm.effects.reshape(-1, 2, 2)))}
    if args.wigner:
        res = wg.analyze_joint(povm, pe, pf)
        doc["wigner"] = {"elements": res.wigner.elements, "marginal_residuals": list(res.marginal_residuals),
                         "min_eigenvalue": res.wigner.min_eigenvalue(),
                         "negative": not res.wigner.is_positive()}
        if args.samples:
            rho = np.outer(sg.SPINS["z+"], sg.SPINS["z+"].conj())
            exact = np.clip(povm.probabilities(rho).ravel(), 0.0, None)
            joint = pm.ProbabilityRecord([f"{a},{b}" for a in povm.row_labels for b in povm.col_labels],
                                         exact / exact.sum())
            counts = sampling.sample_outcomes(joint, args.samples, args.seed)
            p_e, p_f = wg.reconstruct_ideal_probs(counts.frequencies.reshape(2, 2), lam, mu, pe.labels, pf.labels)
            doc["wigner"]["sampled_reconstruction"] = {
                "input_state": "z+", "n": args.samples,
                "p_sigma_y": p_e.values, "p_sigma_z": p_f.values,
                "negative_entries": bool(p_e.negative or p_f.negative)}
    return doc


def _quorum_doc(args, d: int = 2) -> dict:
    rng = sampling.generator(args.seed, 2)
    rho = ops.random_density(d, rng)
    meas = []
    for i, axis in enumerate("xyz"):
        pvm = ops.pauli_pvm(axis)
        p = pm.ProbabilityRecord(pvm.labels, np.clip(pvm.probabilities(rho), 0, None))
        if args.samples:
            p = pm.ProbabilityRecord(pvm.labels, sampling.sample_outcomes(p, args.samples, args.seed, 10 + i).frequencies)
        meas.append((pvm, p))
    res = wg.quorum_reconstruct(meas)
    return {"true_rho": rho, "reconstructed_rho": res.rho, "residual": res.residual,
            "projection_distance": res.projection_distance,
            "max_abs_error": float(np.max(np.abs(res.rho - rho))), "samples": args.samples}


def cmd_tomography(args) -> int:
    cfg = _read_config(args.config)
    out = _out_dir(args)
    report = {"config": {"model": args.model, "demo": args.demo, "seed": args.seed, "wigner": args.wigner,
                         "quorum": args.quorum, "samples": args.samples, "file": cfg}}
    if args.model:
        path = Path(args.model)
        if not path.is_file():
            raise UsageError(f"model file not found: {path}")
        try:
            doc = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise UsageError(f"model file is not valid JSON: {exc}") from exc
        report["result"] = _tomography_abstract(pm.model_from_dict(doc), args)
    elif args.demo in ("controlled-flip", "identity", "random"):
        model = {"controlled-flip": pm.controlled_flip_model,
                 "identity": pm.identity_model,
                 "random": lambda: pm.random_model(sampling.generator(args.seed, 3))}[args.demo]()
        report["model"] = pm.model_to_dict(model)
        report["result"] = _tomography_abstract(model, args)
    else:
        params = _sg_params(args, cfg)
        if args.demo in ("sg-quadrupole", "sg-corrected", "sg-ideal"):
            params = params.with_(variant=args.demo[3:])
        report["config"]["sg"] = asdict(params)
        report["result"] = _tomography_sg(params, args)
    if args.quorum:
        report["quorum"] = _quorum_doc(args)
    write_json(out / "report.json", report)
    write_json(out / "effective_povm.json", {"effects": report["result"]["effects"]})
    summary = {k: v for k, v in report["result"].items()
               if k in ("probability_identity_max_deviation", "no_information_transfer", "fit_residual")}
    if "wigner" in report["result"]:
        summary["wigner_marginal_residuals"] = report["result"]["wigner"].get("marginal_residuals")
    print(json.dumps(summary, default=float))
    return EXIT_OK


# ---------------------------------------------------------------------------
# inequalities


def cmd_inequalities(args) -> int:
    cfg = _read_config(args.config)
    out = _out_dir(args)
    reports = []
    source = cfg.get("source", "explicit" if ("lam" in cfg or "pvm_e" in cfg) else "quadrupole")
    if source == "quadrupole":
        params = _sg_params(args, cfg).with_(variant="quadrupole")
        biv = sg.extract_spin_povm(params)
        pe, pf = ops.pauli_pvm("y"), ops.pauli_pvm("z")
        lam, _ = ni.nonideality_matrix(biv.row_marginal(), pe)
        mu, _ = ni.nonideality_matrix(biv.col_marginal(), pf)
    elif source == "explicit":
        if "lam" not in cfg:
            raise UsageError("explicit inequality input needs 'lam'")
        try:
            lam = ni.check_stochastic(np.array(cfg["lam"], dtype=float))
            mu = ni.check_stochastic(np.array(cfg["mu"], dtype=float)) if "mu" in cfg else None
        except (TypeError, ValueError) as exc:
            raise UsageError(f"bad nonideality matrix: {exc}") from exc
        pe = _pvm(cfg["pvm_e"], "pvm_e") if "pvm_e" in cfg else None
        pf = _pvm(cfg["pvm_f"], "pvm_f") if "pvm_f" in cfg else None
    else:
        raise UsageError(f"unknown source {source!r}")
    rho = _matrix(cfg["rho"], "rho") if "rho" in cfg else np.eye(lam.shape[1]) / lam.shape[1]
    rho = ops.density(rho)
    if mu is not None and pe is not None and pf is not None:
        reports.append(ni.check_martens(lam, mu, pe, pf))
    unc = ni.total_uncertainty(rho, lam, mu)
    reports.append(ni.InequalityReport("generalized_martens", unc.Delta, unc.bound, unc.satisfied, unc.slack,
                                       ni.digest(rho, lam, lam if mu is None else mu)))
    rob = cfg.get("robertson", {"A": "sigma_y", "B": "sigma_z", "psi": "x+"})
    a_op = ops.PAULI[rob["A"][-1]] if isinstance(rob["A"], str) else _matrix(rob["A"], "robertson.A")
    b_op = ops.PAULI[rob["B"][-1]] if isinstance(rob["B"], str) else _matrix(rob["B"], "robertson.B")
    psi = sg.SPINS[rob["psi"]] if isinstance(rob["psi"], str) else _vector(rob["psi"], "robertson.psi")
    reports.append(ni.check_robertson(a_op, b_op, psi))
    doc = {"config": {"source": source, "file": cfg, "seed": args.seed},
           "uncertainty": asdict(unc), "lambda": lam, "mu": mu,
           "reports": [r.to_dict() for r in reports]}
    write_json(out / "inequalities.json", doc)
    print(json.dumps([{k: r.to_dict()[k] for k in ("name", "lhs", "rhs", "satisfied")} for r in reports]))
    return EXIT_OK


# ---------------------------------------------------------------------------
# sampling


def _probs_from(args, cfg) -> pm.ProbabilityRecord:
    raw = args.probs if args.probs is not None else cfg.get("probs")
    if raw is None:
        raise UsageError("give --probs or a config with 'probs'")
    if isinstance(raw, str):
        try:
            raw = [float(x) for x in raw.split(",")]
        except ValueError as exc:
            raise UsageError(f"--probs: {exc}") from exc
    labels = cfg.get("labels") or [str(i) for i in range(len(raw))]
    return pm.ProbabilityRecord(labels, raw)


def cmd_sample(args) -> int:
    cfg = _read_config(args.config)
    out = _out_dir(args)
    probs = _probs_from(args, cfg)
    n = int(args.n or cfg.get("n", 1000))
    counts = sampling.sample_outcomes(probs, n, args.seed)
    rows = [[n, lab, int(c), c / n, abs(c / n - p)]
            for lab, c, p in zip(probs.labels, counts.counts, probs.probabilities)]
    write_csv(out / "counts.csv", ["n", "outcome", "count", "frequency", "abs_error"], rows, args.gnuplot_ready)
    write_json(out / "report.json", {"config": {"probs": probs.probabilities, "labels": list(probs.labels),
                                                "n": n, "seed": args.seed, "generator": "PCG64"},
                                     "counts": counts.counts, "frequencies": counts.frequencies})
    print(json.dumps(dict(zip(probs.labels, counts.counts.tolist()))))
    return EXIT_OK


def cmd_convergence(args) -> int:
    cfg = _read_config(args.config)
    out = _out_dir(args)
    probs = _probs_from(args, cfg)
    if args.schedule:
        schedule = tuple(int(float(x)) for x in args.schedule.split(","))
    else:
        schedule = tuple(cfg.get("schedule", sampling.log_schedule()))
    reps = int(args.replicates or cfg.get("replicates", 1))
    rep = sampling.convergence_report(probs, schedule, args.seed, replicates=reps)
    sampling.write_counts_csv(out / "convergence.csv", [rep], probs)
    write_json(out / "report.json", {"config": {"probs": probs.probabilities, "schedule": list(schedule),
                                                "seed": args.seed, "replicates": reps},
                                     "max_errors": rep.max_errors, "slope": rep.slope})
    print(json.dumps({"slope": rep.slope}))
    return EXIT_OK


# ---------------------------------------------------------------------------


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON or key = value config file")
    p.add_argument("--seed", type=int, default=0, help="random seed (u64)")
    p.add_argument("--out", default="out", help="output directory")
    p.add_argument("--json", action="store_true", help="write JSON output")
    p.add_argument("--csv", action="store_true", help="write CSV output")
    p.add_argument("--gnuplot-ready", action="store_true", help="'#'-prefixed, space-separated CSV headers")


def _sg_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--variant", choices=sg.VARIANTS)
    p.add_argument("--set", action="append", metavar="KEY=VALUE", help="override one Stern-Gerlach parameter")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qmeasure", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    sg_p = sub.add_parser("sg", help="Stern-Gerlach simulation")
    sg_sub = sg_p.add_subparsers(dest="sg_command", required=True)
    run_p = sg_sub.add_parser("run", help="simulate one spin input")
    _common(run_p)
    _sg_flags(run_p)
    run_p.add_argument("--spin", help=f"input spin, one of {sorted(sg.SPINS)}")
    run_p.add_argument("--calibrate", action="store_true", help="also compute the nonideality matrix")
    run_p.add_argument("--samples", type=int, default=0, help="draw this many screen events")
    run_p.set_defaults(func=cmd_sg_run)
    cal_p = sg_sub.add_parser("calibrate", help="nonideality matrix from eigenstate inputs")
    _common(cal_p)
    _sg_flags(cal_p)
    cal_p.add_argument("--tomography", action="store_true", help="cross-check against detector tomography")
    cal_p.set_defaults(func=cmd_sg_calibrate)

    tom_p = sub.add_parser("tomography", help="effective object POVM")
    _common(tom_p)
    _sg_flags(tom_p)
    src = tom_p.add_mutually_exclusive_group()
    src.add_argument("--model", help="measurement model JSON")
    src.add_argument("--demo", default="controlled-flip",
                     choices=["controlled-flip", "identity", "random", "sg-ideal", "sg-corrected", "sg-quadrupole"])
    tom_p.add_argument("--wigner", action="store_true", help="Wigner measure from the nonideality matrices")
    tom_p.add_argument("--quorum", action="store_true", help="quorum reconstruction of a random qubit state")
    tom_p.add_argument("--samples", type=int, default=0, help="use sampled instead of exact statistics")
    tom_p.set_defaults(func=cmd_tomography)

    ineq_p = sub.add_parser("inequalities", help="uncertainty inequality reports")
    _common(ineq_p)
    _sg_flags(ineq_p)
    ineq_p.set_defaults(func=cmd_inequalities)

    for name, func in (("sample", cmd_sample), ("convergence", cmd_convergence)):
        p = sub.add_parser(name)
        _common(p)
        p.add_argument("--probs", help="comma-separated probabilities")
        if name == "sample":
            p.add_argument("--n", type=int)
        else:
            p.add_argument("--schedule", help="comma-separated sample sizes")
            p.add_argument("--replicates", type=int)
        p.set_defaults(func=func)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except NumericalGuardError as exc:
        print(f"qmeasure: numerical guard: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ValidationError, KeyError, TypeError, ValueError) as exc:
        print(f"qmeasure: invalid input: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
