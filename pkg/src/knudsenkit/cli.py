"""Command-line entry point: ``knudsenkit <subcommand> [--config FILE] [--out DIR]``.

Exit codes: 0 success, 1 error, 2 an acceptance gate failed.
"""
from __future__ import annotations

import argparse
import logging
import sys

import numpy as np

from . import harness
from .config import RunConfig, load_config
from .errors import ConfigurationError, KnudsenKitError

EXIT_OK, EXIT_ERROR, EXIT_FAIL = 0, 1, 2
PROFILE_COLUMNS = ["x", "rho", "u1", "u2", "u3", "theta"]


def _config(args, experiment: str, **defaults) -> RunConfig:
    cfg = load_config(args.config) if args.config else RunConfig(experiment=experiment, **defaults)
    if args.out:
        cfg = cfg.replace(output_dir=args.out)
    return cfg


def _profile_rows(fields) -> list[dict]:
    return [{"x": float(x), "rho": float(r), "u1": float(u[0]), "u2": float(u[1]), "u3": float(u[2]), "theta": float(t)}
            for x, r, u, t in zip(fields.x, fields.rho, fields.u, fields.theta)]


def cmd_slip_coeffs(args) -> int:
    from .slip import compute_slip_coefficients
    cfg = _config(args, "slip-coeffs")
    coeffs = compute_slip_coefficients(cfg.collision_model(), args.theta_w, args.theta_b)
    row = {"model": cfg.model, **coeffs.as_row()}
    print(", ".join(f"{k}={harness._format(v)}" for k, v in row.items()))
    harness.emit_outputs({"slip_coefficients": [row]}, cfg, cfg.output_dir)
    return EXIT_OK


def cmd_knudsen(args) -> int:
    from .knudsen import HalfSpaceProblem, decay_rate, solve_half_space
    cfg = _config(args, "knudsen")
    problem = HalfSpaceProblem(variant=cfg.variant, model=cfg.collision_model())
    sol = solve_half_space(problem)
    rate = decay_rate(sol)
    coefficient = sol.jump * problem.chi * problem.rho / problem.gradient
    summary = {"variant": cfg.variant, "jump": sol.jump, "coefficient": coefficient, "decay_rate": rate,
               "residual": sol.residual}
    print(", ".join(f"{k}={harness._format(v)}" for k, v in summary.items()))
    norms = sol.norms()
    rows = [{"y": float(y), "norm": float(n)} for y, n in zip(sol.y, norms)]
    harness.emit_outputs({"layer_profile": rows}, cfg, cfg.output_dir, summary, columns={"layer_profile": ["y", "norm"]})
    return EXIT_OK


def cmd_kinetic_run(args) -> int:
    from .couette import measure_walls, steady_couette
    from .kinetic import KineticSolver, WallPair, moments
    from .chapman_enskog import local_maxwellian
    cfg = _config(args, "kinetic-run", epsilons=[0.02], law="power-law")
    eps = cfg.epsilons[-1]
    law = cfg.accommodation()
    ccfg = harness.couette_config(cfg, eps, law)
    if cfg.steady:
        result = steady_couette(ccfg)
        walls = [vars(w) for w in result.walls]
        ledger = [{"outer": k, "residual": r} for k, r in enumerate(result.history)]
        summary = {"converged": result.converged, "residual": result.residual, "steps": result.steps,
                   "plug": result.plug}
        harness.emit_outputs({"profile": _profile_rows(result.fields), "walls": walls, "ledger": ledger}, cfg,
                             cfg.output_dir, summary, columns={"profile": PROFILE_COLUMNS})
        print(f"steady={result.converged} residual={result.residual:.3e} steps={result.steps}")
        for w in result.walls:
            print(f"{w.side}: slip={w.slip:.6g} shear={w.shear:.6g} slip_length={w.slip_length:.6g}")
        return EXIT_OK if result.converged else EXIT_FAIL
    from .lattice import VelocityLattice
    from .state import FluidFields
    lattice = VelocityLattice(tuple(ccfg.lattice_counts), ccfg.v_max)
    pair = WallPair.slab(law, law, -cfg.wall_speed, cfg.wall_speed, cfg.theta_left, cfg.theta_right)
    solver = KineticSolver(lattice, cfg.cells, pair, eps, cfg.collision_model())
    rest = FluidFields(rho=np.ones(cfg.cells), u=np.zeros((cfg.cells, 3)),
                       theta=np.full(cfg.cells, 0.5 * (cfg.theta_left + cfg.theta_right)), x=solver.x)
    F = np.atleast_2d(local_maxwellian(rest, lattice.nodes))
    results, ledger = {}, []
    t = 0.0
    t0 = solver.totals(F)
    for k in range(1, cfg.snapshots + 1):
        F, _ = solver.run(F, cfg.t_end / cfg.snapshots)
        t += cfg.t_end / cfg.snapshots
        fields = moments(solver.distribution(F, t))
        results[f"profile_{k:03d}"] = _profile_rows(fields)
        tot = solver.totals(F)
        ledger.append({"time": t, **{f"total_{n}": v for n, v in zip(("mass", "m1", "m2", "m3", "energy"), tot)},
                       **{f"wall_{n}": v for n, v in zip(("mass", "m1", "m2", "m3", "energy"), solver.ledger.total)},
                       "mass_drift": abs(tot[0] - t0[0]) / t0[0]})
    results["ledger"] = ledger
    results["walls"] = [vars(w) for w in measure_walls(fields, ccfg)]
    harness.emit_outputs(results, cfg, cfg.output_dir, {"t_end": t},
                         columns={k: PROFILE_COLUMNS for k in results if k.startswith("profile")})
    print(f"t={t:.4g} mass_drift={ledger[-1]['mass_drift']:.3e}")
    return EXIT_OK


def cmd_cns_run(args) -> int:
    from .cns import CNSSolver, FluidWall, energy_monitor, steady_couette_cns
    from .slip import WallFrame, boundary_family, compute_slip_coefficients
    from .state import FluidFields
    cfg = _config(args, "cns-run", epsilons=[0.02])
    eps = cfg.epsilons[-1]
    model = cfg.collision_model()
    family = boundary_family(cfg.accommodation(), eps, compute_slip_coefficients(model))
    walls = (FluidWall(family, WallFrame.slab("lower", -cfg.wall_speed, cfg.theta_left)),
             FluidWall(family, WallFrame.slab("upper", cfg.wall_speed, cfg.theta_right)))
    if cfg.steady:
        fields, solver, res = steady_couette_cns(cfg.cells, eps, walls, model)
        fields.x = solver.x
        harness.emit_outputs({"profile": _profile_rows(fields)}, cfg, cfg.output_dir,
                             {"residual": res, "family": family.kind}, columns={"profile": PROFILE_COLUMNS})
        print(f"family={family.kind} residual={res:.3e} u2(wall)={fields.u[0, 1]:.6g},{fields.u[-1, 1]:.6g}")
        return EXIT_OK
    solver = CNSSolver(cfg.cells, eps, model, walls)
    amp = cfg.amplitude_lambda * eps**1.5
    q = harness.convergence_initial_state(solver.x, amp).conserved()
    history = [solver.fields(q, 0.0)]
    t = 0.0
    results = {}
    for k in range(1, cfg.snapshots + 1):
        q = solver.run(q, cfg.t_end / cfg.snapshots)
        t += cfg.t_end / cfg.snapshots
        history.append(solver.fields(q, t))
        results[f"profile_{k:03d}"] = _profile_rows(history[-1])
    diag = energy_monitor(history, eps)
    results["diagnostics"] = [{"time": float(a), "deviation": float(b), "time_derivative": float(c), "gradient": float(d),
                               "second_gradient": float(e)} for a, b, c, d, e in
                              zip(diag.time, diag.deviation, diag.time_derivative, diag.gradient, diag.second_gradient)]
    harness.emit_outputs(results, cfg, cfg.output_dir, {"bounded": diag.bounded, "family": family.kind},
                         columns={k: PROFILE_COLUMNS for k in results if k.startswith("profile")})
    print(f"t={t:.4g} bounded={diag.bounded}")
    return EXIT_OK


def cmd_converge(args) -> int:
    cfg = _config(args, "converge", law="specular")
    report = harness.run_convergence(cfg)
    rows = report.rows + ([dict(report.control, control=True)] if report.control else [])
    summary = {"orders": {k: v for k, v in report.orders.items()}, "passed": report.passed,
               "failures": [r["status"] for r in report.failures]}
    code = EXIT_OK if report.passed else EXIT_FAIL
    harness.emit_outputs({"convergence": rows}, cfg, cfg.output_dir, summary, exit_code=code,
                         columns={"convergence": ["epsilon", "cells", "l2", "linf_w", "r_norm", "status"]})
    for r in rows:
        print(f"eps={r['epsilon']:.4g} cells={r['cells']} l2={r['l2']:.4e} linf_w={r['linf_w']:.4e} r_norm={r['r_norm']:.4e}")
    for key in ("l2", "linf_w"):
        o = report.orders[key]
        print(f"{key} order: median={o['median']:.3f} min={o['min']:.3f} max={o['max']:.3f}")
    return code


def cmd_slip_verify(args) -> int:
    cfg = _config(args, "slip-verify", epsilons=[0.02])
    result = harness.run_slip_verification(cfg)
    code = EXIT_OK if result.passed() else EXIT_FAIL
    cols = ["beta", "epsilon", "measured_slip_length", "predicted_slip_length", "relative_error", "slip_right",
            "shear_right", "status"]
    harness.emit_outputs({"slip_verification": result.rows}, cfg, cfg.output_dir,
                         {"slope": result.slope, "passed": result.passed()}, exit_code=code,
                         columns={"slip_verification": cols})
    for r in result.rows:
        print(f"beta={r['beta']:g} eps={r['epsilon']:g} measured={r.get('measured_slip_length', float('nan')):.5g} "
              f"predicted={r.get('predicted_slip_length', float('nan')):.5g} rel_err={r.get('relative_error', float('nan')):.3f}")
    print(f"scaling slope={result.slope:.4f}")
    return code


def cmd_classify(args) -> int:
    cfg = _config(args, "classify", epsilons=[0.04, 0.02])
    out = harness.run_regime_classification(cfg)
    code = EXIT_OK if out["passed"] else EXIT_FAIL
    offset = {k: v for k, v in out["offset"].items() if k != "runs"}
    classes = [{"case": k, "regime": v[0], "slope": v[1], "expected": out["expected"].get(k, "")}
               for k, v in out["classes"].items()]
    harness.emit_outputs({"classification": classes, "couette_runs": out["rows"] + out["offset"]["runs"]}, cfg,
                         cfg.output_dir, {"offset": offset, "passed": out["passed"]}, exit_code=code)
    for c in classes:
        print(f"{c['case']}: {c['regime']} (slope {c['slope']:.3g}, expected {c['expected']})")
    print(f"critical offset detected={offset['detected']}")
    return code


def cmd_crosscheck(args) -> int:
    cfg = _config(args, "crosscheck")
    rows = harness.run_coefficient_crosscheck()
    bgk = [r for r in rows if r["model"] == "bgk-constant-nu"]
    passed = all(r["relative_gap"] < 0.05 and r["refinement_change"] < 0.01 for r in bgk)
    code = EXIT_OK if passed else EXIT_FAIL
    harness.emit_outputs({"crosscheck": rows}, cfg, cfg.output_dir, {"passed": passed}, exit_code=code,
                         columns={"crosscheck": ["model", "coefficient", "quadrature", "half_space", "relative_gap",
                                                 "refinement_change", "status"]})
    for r in rows:
        print(f"{r['model']} {r['coefficient']}: quadrature={r['quadrature']:.6g} half-space={r['half_space']:.6g} "
              f"gap={r['relative_gap']:.2e} [{r['status'].split(':')[0]}]")
    return code


def cmd_acceptance(args) -> int:
    from .acceptance import CRITERIA, run_criterion
    numbers = sorted(CRITERIA) if args.all or not args.criteria else args.criteria
    unknown = [n for n in numbers if n not in CRITERIA]
    if unknown:
        raise ConfigurationError(f"no acceptance criterion {unknown}; expected 1-10")
    failed = False
    for n in numbers:
        result = run_criterion(n)
        print(result.line(), flush=True)
        failed |= not result.passed
    return EXIT_FAIL if failed else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="knudsenkit", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, help_text):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", help="YAML run configuration (schema_version: 1)")
        p.add_argument("--out", help="output directory (overrides output_dir)")
        p.set_defaults(func=func)
        return p

    p = add("slip-coeffs", cmd_slip_coeffs, "slip coefficients by quadrature")
    p.add_argument("--theta-w", type=float, default=1.0)
    p.add_argument("--theta-b", type=float, default=None)
    add("knudsen", cmd_knudsen, "solve one half-space Knudsen-layer problem")
    add("kinetic-run", cmd_kinetic_run, "kinetic slab run (steady Couette or time march)")
    add("cns-run", cmd_cns_run, "Navier-Stokes-Fourier slab run")
    add("converge", cmd_converge, "kinetic vs fluid convergence study over epsilon")
    add("slip-verify", cmd_slip_verify, "measured kinetic slip vs slip-law prediction")
    add("classify", cmd_classify, "accommodation-regime classification and critical offset experiment")
    add("crosscheck", cmd_crosscheck, "quadrature vs half-space slip coefficients")
    p = sub.add_parser("acceptance", help="run acceptance criteria 1-10")
    p.add_argument("criteria", nargs="*", type=int, help="criterion numbers (default: all)")
    p.add_argument("--all", action="store_true")
    p.set_defaults(func=cmd_acceptance)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (KnudsenKitError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
