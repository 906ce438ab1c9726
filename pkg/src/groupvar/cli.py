"""Command line front end.

Subcommands: solve, verify <suite>, reconstruct, recover-multipliers, report.
Configuration comes from an optional JSON file plus flags; flags win.  Exit
codes are stable across subcommands: 0 success, 1 verification or convergence
failure, 2 usage or configuration error.

Reports are key=value records (floats via repr) with CSV tables alongside;
nothing time- or host-dependent is written, so identical configuration gives
byte-identical output.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import core, harmonic, reduction, sampling, serialization
from .complexes import classify_vertices, triangulated_grid
from .defaults import CONS_TOL, EP_TOL, G_TOL, RANK_TOL, TOL_ADMISSIBLE
from .errors import (
    ConvergenceError,
    DomainError,
    HolonomyError,
    PreconditionError,
    RecoveryConflictError,
)
from .liegroup import CoAlgebraElement, GroupElement, random_algebra
from .reduction import PlaquetteConstraint
from .harmonic import SolverConfig, TraceLagrangian

BOUNDARY_GENERATOR = "uniform-coordinate-geodesic"

SUITES = ("split", "cartan", "flatness", "noether", "multisymplectic",
          "multipliers", "elimination", "regularity")


def _load_config(path: str | None) -> dict:
    if path is None:
        return {}
    try:
        raw = Path(path).read_text()
    except OSError as exc:
        raise ValueError(f"cannot read config file: {exc}") from exc
    try:
        data = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise ValueError(f"config file is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise ValueError("config file must hold a JSON object")
    return data


_DEFAULTS = {
    "n": 3,
    "width": 6,
    "height": 6,
    "boundary": "random",
    "seed": 42,
    "scale": 0.1,
    "g_tol": G_TOL,
    "ep_tol": EP_TOL,
    "cons_tol": CONS_TOL,
    "adm_tol": TOL_ADMISSIBLE,
    "rank_tol": RANK_TOL,
    "max_iterations": 5000,
    "instances": 100,
    "out": ".",
}


def _settings(args) -> dict:
    """Defaults, overridden by the config file, overridden by flags."""
    cfg = dict(_DEFAULTS)
    file_cfg = _load_config(getattr(args, "config", None))
    unknown = set(file_cfg) - set(cfg)
    if unknown:
        raise ValueError(f"unknown config keys: {sorted(unknown)}")
    cfg.update(file_cfg)
    for key in cfg:
        flag = getattr(args, key, None)
        if flag is not None:
            cfg[key] = flag
    if cfg["n"] < 2:
        raise ValueError("group size n must be at least 2")
    if cfg["width"] < 1 or cfg["height"] < 1:
        raise ValueError("grid dimensions must be positive")
    if cfg["scale"] < 0:
        raise ValueError("perturbation scale must be nonnegative")
    if cfg["g_tol"] <= 0 or cfg["ep_tol"] <= 0:
        raise ValueError("tolerances must be positive")
    if cfg["boundary"] not in ("identity", "random") \
            and not Path(str(cfg["boundary"])).exists():
        raise ValueError(f"boundary must be identity, random, or an existing "
                         f"field file, got {cfg['boundary']!r}")
    return cfg


def _out_dir(cfg) -> Path:
    out = Path(cfg["out"])
    out.mkdir(parents=True, exist_ok=True)
    return out


def _boundary_map(cfg, grid) -> dict[int, GroupElement]:
    if cfg["boundary"] == "identity":
        return harmonic.identity_boundary(grid, cfg["n"])
    if cfg["boundary"] == "random":
        return harmonic.random_boundary(grid, cfg["n"], cfg["seed"], cfg["scale"])
    bgrid, field = serialization.load_unreduced_field(cfg["boundary"])
    if (bgrid.width, bgrid.height) != (grid.width, grid.height):
        raise ValueError("boundary file window does not match the requested grid")
    frontier = classify_vertices(grid, grid.full_faceset()).frontier
    missing = sorted(v for v in frontier if v not in field.values)
    if missing:
        raise ValueError(f"boundary file lacks frontier vertices {missing[:4]}")
    return {v: field.values[v] for v in sorted(field.values)}


def _config_records(cfg) -> dict:
    rec = {key: cfg[key] for key in
           ("n", "width", "height", "boundary", "seed", "scale", "g_tol",
            "ep_tol", "max_iterations")}
    rec["boundary_generator"] = BOUNDARY_GENERATOR
    return rec


# ---------------------------------------------------------------------------
# solve


def cmd_solve(args) -> int:
    cfg = _settings(args)
    out = _out_dir(cfg)
    grid = triangulated_grid(cfg["width"], cfg["height"])
    boundary = _boundary_map(cfg, grid)
    solver_cfg = SolverConfig(boundary=boundary, g_tol=cfg["g_tol"],
                              max_iterations=cfg["max_iterations"])
    try:
        field, report = harmonic.solve_unreduced(grid, solver_cfg)
    except ConvergenceError as exc:
        serialization.write_report(out / "solve_report.txt", {
            **_config_records(cfg), "converged": False, "error": str(exc)})
        print(f"solve: {exc}", file=sys.stderr)
        return 1

    y = reduction.reduce_field(grid, field)
    serialization.save_unreduced_field(out / "unreduced_field.txt", grid, field)
    serialization.save_reduced_section(out / "reduced_section.txt", grid, y)
    records = dict(_config_records(cfg))
    records.update({
        "converged": report.converged,
        "iterations": report.iterations,
        "final_action": report.final_action,
        "final_energy": report.final_energy,
        "max_gradient": report.max_gradient,
        "max_ep_residual": report.max_ep_residual,
        "max_constraint_residual": report.max_constraint_residual,
    })
    serialization.write_report(out / "solve_report.txt", records)
    serialization.write_csv(
        out / "residuals.csv", ["i", "j", "ep_residual"],
        [(i, j, r) for (i, j), r in sorted(report.per_vertex_ep.items())])
    serialization.write_csv(
        out / "history.csv",
        ["iteration", "phase", "objective", "action", "max_gradient", "step"],
        [(h["iteration"], h["phase"], h["objective"], h["action"],
          h["max_gradient"], h["step"]) for h in report.history])

    ok = report.converged and report.max_ep_residual <= cfg["ep_tol"] \
        and report.max_constraint_residual <= 1e-12
    print(f"solve: converged={report.converged} iterations={report.iterations} "
          f"max_ep={report.max_ep_residual:.3e} "
          f"max_constraint={report.max_constraint_residual:.3e}")
    return 0 if ok else 1


# ---------------------------------------------------------------------------
# verify suites


def _suite_split(cfg, rng):
    n = cfg["n"]
    grid = triangulated_grid(3, 3)
    problem = reduction.make_reduced_problem(grid, TraceLagrangian(n))
    worst = 0.0
    for _ in range(cfg["instances"]):
        y = sampling.random_section(grid, n, rng)
        lam = sampling.random_multiplier(grid, n, rng)
        dy = sampling.random_variation(grid, n, rng)
        lhs, rhs = problem.split(y, lam, dy)
        worst = max(worst, abs(lhs - rhs) / (1.0 + abs(lhs)))
    return worst <= 1e-12, {"checks": cfg["instances"],
                            "worst_split_defect": worst, "tolerance": 1e-12}


def _suite_cartan(cfg, rng):
    n = cfg["n"]
    grid = triangulated_grid(3, 3)
    constraint = PlaquetteConstraint(n)
    worst = 0.0
    faces = list(grid.faces)
    for k in range(cfg["instances"]):
        y = sampling.random_section(grid, n, rng)
        face = faces[k % len(faces)]
        jet = core.jet_at(y, grid, face)
        for slot in range(3):
            analytic = constraint.cartan_form(grid, jet, slot).matrix
            fd = core.ConstraintMap.cartan_form(constraint, grid, jet, slot).matrix
            worst = max(worst, float(np.linalg.norm(analytic - fd))
                        / (1.0 + float(np.linalg.norm(analytic))))
    return worst <= 1e-6, {"checks": cfg["instances"] * 3,
                           "worst_cartan_defect": worst, "tolerance": 1e-6}


def _suite_flatness(cfg, rng):
    n = cfg["n"]
    grid = triangulated_grid(4, 4)
    instances = max(1, cfg["instances"] // 10)
    worst_round = 0.0
    worst_path = 0.0
    detected = 0
    injected = 0
    for _ in range(instances):
        g = sampling.random_unreduced_field(grid, n, rng)
        y = reduction.reduce_field(grid, g)
        rep = reduction.reconstruction_report(
            grid, y, g.values[grid.vertex_id(0, 0)])
        dev = max(float(np.linalg.norm(rep.field.values[v].matrix
                                       - g.values[v].matrix))
                  for v in g.values)
        worst_round = max(worst_round, dev)
        worst_path = max(worst_path, rep.path_agreement)
        y_back = reduction.reduce_field(grid, rep.field)
        dev2 = max(
            max(float(np.linalg.norm(a.matrix - b.matrix))
                for a, b in zip(y.values[v], y_back.values[v]))
            for v in y.values)
        worst_round = max(worst_round, dev2)

        i = int(rng.integers(0, grid.width))
        j = int(rng.integers(0, grid.height))
        bump = random_algebra(n, rng)
        bump = (1e-6 / bump.norm()) * bump
        tampered = dict(y.values)
        u, v = tampered[grid.vertex_id(i, j)]
        tampered[grid.vertex_id(i, j)] = (
            GroupElement(u.matrix @ (np.eye(n) + bump.matrix
                                     + bump.matrix @ bump.matrix / 2.0),
                         tau=1.0), v)
        y_t = core.Section(y.fiber, tampered)
        injected += 1
        try:
            reduction.reconstruct(grid, y_t, g.values[grid.vertex_id(0, 0)])
        except HolonomyError:
            detected += 1
    passed = worst_round <= 1e-12 and worst_path <= 1e-12 and detected == injected
    return passed, {"checks": instances, "worst_roundtrip": worst_round,
                    "worst_path_agreement": worst_path,
                    "tampered_injected": injected, "tampered_detected": detected,
                    "tolerance": 1e-12}


def _solve_for_suite(cfg, g_tol=1e-11):
    grid = triangulated_grid(cfg["width"], cfg["height"])
    boundary = _boundary_map(cfg, grid)
    solver_cfg = SolverConfig(boundary=boundary, g_tol=g_tol,
                              max_iterations=cfg["max_iterations"])
    field, report = harmonic.solve_unreduced(grid, solver_cfg)
    return grid, solver_cfg, field, report


def _suite_noether(cfg, rng, break_symmetry=False):
    n = cfg["n"]
    grid, solver_cfg, field, _ = _solve_for_suite(cfg)
    xi = random_algebra(n, rng)
    bad = None
    if break_symmetry:
        y = reduction.reduce_field(grid, field)
        bad = sampling.random_variation(grid, n, rng)
        bad.values = {v: bad.values[v] for v in y.values}
    scenario = harmonic.run_noether_scenario(grid, solver_cfg, xi,
                                             symmetry_field=bad)
    return scenario.passed, {
        "boundary_sum": scenario.boundary_sum,
        "threshold": scenario.threshold,
        "lagrangian_symmetry_defect": scenario.noether.lagrangian_defect,
        "constraint_symmetry_defect": scenario.noether.constraint_defect,
        "symmetry_ok": scenario.noether.symmetry_ok,
        "broken_field": break_symmetry,
    }


def _suite_multisymplectic(cfg, rng):
    n = cfg["n"]
    grid, solver_cfg, _, _ = _solve_for_suite(cfg)
    frontier = sorted(classify_vertices(grid, grid.full_faceset()).frontier)
    picks = rng.choice(len(frontier), size=2, replace=False)
    bump1 = {frontier[int(picks[0])]: random_algebra(n, rng)}
    bump2 = {frontier[int(picks[1])]: random_algebra(n, rng)}
    scenario = harmonic.run_multisymplectic_scenario(grid, solver_cfg, bump1, bump2)
    antisym = abs(scenario.defect + scenario.defect_swapped)
    passed = scenario.passed and antisym <= 1e-12 \
        and abs(scenario.defect_repeated) <= 1e-12
    return passed, {
        "jacobi_residual_1": scenario.jacobi_residual_1,
        "jacobi_residual_2": scenario.jacobi_residual_2,
        "two_form_defect": scenario.defect,
        "antisymmetry_defect": antisym,
        "repeated_field_defect": scenario.defect_repeated,
        "threshold": scenario.threshold,
    }


def _recovery_residuals(lagrangian, grid, y, lam):
    klass = classify_vertices(grid, grid.full_faceset())
    worst = 0.0
    for v in sorted(klass.interior):
        i, j = grid.vertex_ij(v)
        r1, r2 = reduction.multiplier_system_residual(lagrangian, grid, y, lam, i, j)
        worst = max(worst, r1.norm(), r2.norm())
    return worst


def _suite_multipliers(cfg, rng):
    n = cfg["n"]
    grid, _, field, _ = _solve_for_suite(cfg)
    lagrangian = TraceLagrangian(n)
    y = reduction.reduce_field(grid, field)
    zero = CoAlgebraElement(np.zeros((n, n)))
    lam0, rep0 = reduction.recover_multipliers(lagrangian, grid, y, zero)
    worst0 = _recovery_residuals(lagrangian, grid, y, lam0)
    seed = CoAlgebraElement(random_algebra(n, rng, 0.3).matrix)
    lam1, rep1 = reduction.recover_multipliers(lagrangian, grid, y, seed)
    worst1 = _recovery_residuals(lagrangian, grid, y, lam1)
    distance = max((lam0.values[f] - lam1.values[f]).norm() for f in grid.faces)
    passed = worst0 <= 1e-10 and worst1 <= 1e-10 \
        and rep0.max_discrepancy <= cfg["cons_tol"] \
        and rep1.max_discrepancy <= cfg["cons_tol"] and distance > 1e-3
    return passed, {
        "system_residual_zero_seed": worst0,
        "system_residual_nonzero_seed": worst1,
        "sweep_consistency_zero_seed": rep0.max_discrepancy,
        "sweep_consistency_nonzero_seed": rep1.max_discrepancy,
        "multiplier_distance": distance,
        "unconstrained_faces": ",".join(map(str, rep0.unconstrained_faces)),
    }


def _suite_elimination(cfg, rng):
    n = cfg["n"]
    grid, _, field, _ = _solve_for_suite(cfg)
    lagrangian = TraceLagrangian(n)
    y = reduction.reduce_field(grid, field)
    zero = CoAlgebraElement(np.zeros((n, n)))
    lam, _ = reduction.recover_multipliers(lagrangian, grid, y, zero)
    klass = classify_vertices(grid, grid.full_faceset())
    worst_combo = 0.0
    worst_cancel = 0.0
    for v in sorted(klass.interior):
        i, j = grid.vertex_ij(v)
        defects = reduction.multiplier_elimination_check(lagrangian, grid, y, lam, i, j)
        worst_combo = max(worst_combo, defects.ep_combination)
        worst_cancel = max(worst_cancel, defects.cancellation)
    passed = worst_cancel <= 1e-12 and worst_combo <= 1e-9
    return passed, {"worst_ep_combination": worst_combo,
                    "worst_cancellation": worst_cancel}


def _suite_regularity(cfg, rng):
    n = cfg["n"]
    records = {}
    passed = True
    for w, h in ((3, 3), (4, 4)):
        grid = triangulated_grid(w, h)
        g = sampling.random_unreduced_field(grid, n, rng)
        y = reduction.reduce_field(grid, g)
        constraint = PlaquetteConstraint(n)
        free = core.regularity_report(constraint, y, grid.full_faceset(),
                                      boundary_fixed=False,
                                      rank_tol=cfg["rank_tol"])
        fixed = core.regularity_report(constraint, y, grid.full_faceset(),
                                       boundary_fixed=True,
                                       rank_tol=cfg["rank_tol"])
        records[f"sigma_min_{w}x{h}"] = free.sigma_min
        records[f"regular_{w}x{h}"] = free.regular
        records[f"sigma_min_boundary_fixed_{w}x{h}"] = fixed.sigma_min
        records[f"unreachable_faces_boundary_fixed_{w}x{h}"] = \
            ",".join(map(str, fixed.unreachable_faces))
        passed = passed and free.sigma_min > cfg["rank_tol"]
    return passed, records


def cmd_verify(args) -> int:
    cfg = _settings(args)
    out = _out_dir(cfg)
    rng = np.random.default_rng(cfg["seed"])
    suite = args.suite
    runners = {
        "split": _suite_split,
        "cartan": _suite_cartan,
        "flatness": _suite_flatness,
        "noether": lambda c, r: _suite_noether(
            c, r, break_symmetry=getattr(args, "break_symmetry", False)),
        "multisymplectic": _suite_multisymplectic,
        "multipliers": _suite_multipliers,
        "elimination": _suite_elimination,
        "regularity": _suite_regularity,
    }
    passed, records = runners[suite](cfg, rng)
    report = {"suite": suite, "seed": cfg["seed"], "passed": passed}
    report.update(records)
    serialization.write_report(out / f"verify_{suite}.txt", report)
    worst_key = max((k for k, v in records.items()
                     if isinstance(v, float) and k not in ("tolerance", "threshold")),
                    key=lambda k: abs(records[k]), default=None)
    status = "ok" if passed else "FAILED"
    extra = f" worst={worst_key}={records[worst_key]:.3e}" if worst_key else ""
    print(f"verify {suite}: {status}{extra}")
    return 0 if passed else 1


# ---------------------------------------------------------------------------
# reconstruct / recover-multipliers / report


def cmd_reconstruct(args) -> int:
    cfg = _settings(args)
    out = _out_dir(cfg)
    grid, y = serialization.load_reduced_section(args.section)
    if args.seed_file:
        sgrid, sfield = serialization.load_unreduced_field(args.seed_file)
        seed = sfield.at(sgrid.vertex_id(0, 0))
    else:
        seed = GroupElement(np.eye(y.fiber.n))
    try:
        rep = reduction.reconstruction_report(grid, y, seed, tol=cfg["adm_tol"])
    except HolonomyError as exc:
        i, j = grid.face_ij(exc.face)
        print(f"reconstruct: holonomy defect {exc.defect:.3e} at plaquette "
              f"({i}, {j})", file=sys.stderr)
        return 1
    serialization.save_unreduced_field(out / "unreduced_field.txt", grid, rep.field)
    serialization.write_report(out / "reconstruct_report.txt", {
        "max_plaquette_defect": rep.max_plaquette_defect,
        "path_agreement": rep.path_agreement,
    })
    print(f"reconstruct: ok path_agreement={rep.path_agreement:.3e}")
    return 0


def cmd_recover_multipliers(args) -> int:
    cfg = _settings(args)
    out = _out_dir(cfg)
    grid, y = serialization.load_reduced_section(args.section)
    n = y.fiber.n
    lagrangian = TraceLagrangian(n)
    seed = CoAlgebraElement(np.zeros((n, n)))
    if args.seed_scale:
        rng = np.random.default_rng(cfg["seed"])
        seed = CoAlgebraElement(random_algebra(n, rng, args.seed_scale).matrix)
    try:
        lam, rep = reduction.recover_multipliers(
            lagrangian, grid, y, seed,
            ep_tol=cfg["ep_tol"], cons_tol=cfg["cons_tol"])
    except (PreconditionError, RecoveryConflictError) as exc:
        print(f"recover-multipliers: {exc}", file=sys.stderr)
        return 1
    serialization.save_multiplier(out / "multiplier.txt", grid, lam)
    worst = _recovery_residuals(lagrangian, grid, y, lam)
    serialization.write_report(out / "recovery_report.txt", {
        "seed_face": rep.seed_face,
        "max_sweep_discrepancy": rep.max_discrepancy,
        "unconstrained_faces": ",".join(map(str, rep.unconstrained_faces)),
        "max_system_residual": worst,
    })
    print(f"recover-multipliers: ok max_system_residual={worst:.3e}")
    return 0


def cmd_report(args) -> int:
    try:
        text = Path(args.file).read_text()
    except OSError as exc:
        raise ValueError(f"cannot read report: {exc}") from exc
    rows = [line.partition("=") for line in text.splitlines() if line.strip()]
    width = max((len(k) for k, _, _ in rows), default=0)
    for key, _, value in rows:
        print(f"{key.ljust(width)}  {value}")
    return 0


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="groupvar",
        description="Discrete variational problems with group-valued "
                    "constraints on the triangulated plane window.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="JSON config file")
        p.add_argument("--n", type=int, help="group size")
        p.add_argument("--width", type=int, help="window width")
        p.add_argument("--height", type=int, help="window height")
        p.add_argument("--boundary", help="identity, random, or a field file")
        p.add_argument("--seed", type=int, help="random seed")
        p.add_argument("--scale", type=float, help="boundary perturbation scale")
        p.add_argument("--g-tol", dest="g_tol", type=float,
                       help="solver gradient tolerance")
        p.add_argument("--ep-tol", dest="ep_tol", type=float,
                       help="accepted reduced residual")
        p.add_argument("--cons-tol", dest="cons_tol", type=float,
                       help="sweep consistency tolerance")
        p.add_argument("--max-iterations", dest="max_iterations", type=int)
        p.add_argument("--instances", type=int, help="checks per suite")
        p.add_argument("--out", help="output directory")

    p_solve = sub.add_parser("solve", help="solve the boundary problem")
    common(p_solve)
    p_solve.set_defaults(func=cmd_solve)

    p_verify = sub.add_parser("verify", help="run an identity suite")
    p_verify.add_argument("suite", choices=SUITES)
    p_verify.add_argument("--break-symmetry", action="store_true",
                          help="negative control: use a non-symmetry field")
    common(p_verify)
    p_verify.set_defaults(func=cmd_verify)

    p_rec = sub.add_parser("reconstruct", help="rebuild a vertex field")
    p_rec.add_argument("--section", required=True, help="reduced section file")
    p_rec.add_argument("--seed-file", dest="seed_file",
                       help="field file providing the origin value")
    common(p_rec)
    p_rec.set_defaults(func=cmd_reconstruct)

    p_mul = sub.add_parser("recover-multipliers",
                           help="solve the multiplier system along a section")
    p_mul.add_argument("--section", required=True, help="reduced section file")
    p_mul.add_argument("--seed-scale", dest="seed_scale", type=float, default=0.0,
                       help="scale of a seeded random corner multiplier")
    common(p_mul)
    p_mul.set_defaults(func=cmd_recover_multipliers)

    p_rep = sub.add_parser("report", help="pretty-print a report file")
    p_rep.add_argument("file")
    p_rep.set_defaults(func=cmd_report)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, DomainError, OSError) as exc:
        print(f"groupvar: {exc}", file=sys.stderr)
        return 2
    except (ConvergenceError, HolonomyError, PreconditionError,
            RecoveryConflictError) as exc:
        print(f"groupvar: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
