"""Command-line front end: solve, verify, squeeze, convergence, ineq, doc-lint.

Exit status: 0 all asserted checks pass, 1 a check failed (reports are still
written), 2 a solve failed, 3 configuration or output error.
"""

import argparse
import dataclasses
import logging
import math
import sys
import time
from pathlib import Path

from . import __version__
from .config import dump_config, load_config, validate
from .discretization import boundary_from_tag, build_time_grid
from .errors import ConfigError, InvalidArgument, NumericFailure, OracleFailure, SolveFailure
from .estimates import check_average_contraction, check_galerkin_estimate, gronwall_trace
from .geometry import build_uniform_mesh
from .model import sweep_vector_inequalities
from .report import Table, emit_report, sha256_of
from .solver import ProblemSpec, refine_study, solve, step_problem
from .stepper import step_residual
from .verification import (ZETA_REGISTRY, error_vs_oracle, gamma_squeeze, heat_oracle,
                           max_principle_check, separable_oracle, weak_form_residual,
                           zero_propagation)

log = logging.getLogger("trudinger")

COMMANDS = ("solve", "verify", "squeeze", "convergence", "ineq")
EXIT_OK, EXIT_CHECK, EXIT_SOLVE, EXIT_CONFIG = 0, 1, 2, 3


def _check(name, passed, worst_slack=None):
    return {"name": name, "pass": bool(passed),
            "worst_slack": None if worst_slack is None else float(worst_slack)}


def build_problem(cfg):
    """ProblemSpec and optional exact solution described by the config."""
    pr, ex = cfg.problem, cfg.experiment
    exact = None
    if ex.oracle == "heat":
        exact = heat_oracle()
    elif ex.oracle == "separable":
        exact = separable_oracle(pr.p)
    psi = exact.as_boundary() if pr.boundary == "oracle" else boundary_from_tag(pr.boundary, pr.params)
    return ProblemSpec(pr.p, pr.a, pr.b, pr.T, psi), exact


def _discretisation(cfg):
    d = cfg.discretization
    return (build_time_grid(cfg.problem.T, d.m_t),
            build_uniform_mesh(d.n_elements, cfg.problem.a, cfg.problem.b))


def _solve(cfg, spec):
    grid, mesh = _discretisation(cfg)
    d = cfg.discretization
    return solve(spec, grid, mesh, cfg.solver, d.quad_order, d.lumped)


def _solution_table(sol):
    return Table("solution", tuple(sol.to_rows()))


def _residual_check(sol):
    """Recompute every step's weak-form residual from the stored states."""
    worst = math.inf
    for k in range(1, sol.grid.m_t + 1):
        sp = step_problem(sol, k)
        alpha = sol.states[k][1:-1] - sp.psi_slice[1:-1]
        r = step_residual(sp, alpha)
        worst = min(worst, sol.steps[k - 1].tol - r)
    return _check("step_residual", worst >= 0, worst)


def _principle_check(report):
    """Order checks on consistent-mass runs are advisory: logged, never failed."""
    if report.advisory and not report.passed:
        log.warning("%s principle violated by %g on a consistent-mass run (advisory)",
                    report.principle, -report.worst)
    return _check(f"{report.principle}_principle", report.passed or report.advisory, report.worst)


def _estimate_checks(reports):
    finite = all(math.isfinite(r.ratio) for r in reports)
    link = min((r.linkage_constant * r.ledger.term_A - r.power_time_energy) for r in reports)
    return [_check("estimate_ratio_finite", finite),
            _check("time_derivative_linkage", all(r.linkage_ok for r in reports), link)]


def _cutoffs(cfg):
    return list(cfg.experiment.cutoffs) or None


def _cmd_solve(cfg, ctx):
    spec, _ = build_problem(cfg)
    with ctx.phase("solve"):
        sol = _solve(cfg, spec)
    with ctx.phase("checks"):
        reports = check_galerkin_estimate(sol, cutoffs=_cutoffs(cfg))
        trace = gronwall_trace(sol)
        mp = max_principle_check(sol)
    ctx.tables["solution"] = _solution_table(sol)
    ctx.tables["trace"] = Table("trace", tuple(zip(trace["tau"], trace["xi"])))
    ctx.results = {"summary": sol.summary(), "estimates": reports, "gronwall": trace,
                   "maximum_principle": mp}
    ctx.checks = [_check("converged", sol.converged), _principle_check(mp)] + _estimate_checks(reports)


def _cmd_verify(cfg, ctx, solution=None):
    spec, exact = build_problem(cfg)
    with ctx.phase("solve"):
        sol = _solve(cfg, spec) if solution is None else solution
    with ctx.phase("checks"):
        mp = max_principle_check(sol)
        contraction = check_average_contraction(spec.psi, sol.mesh, sol.grid, sol.p, sol.quad_order)
        zeta = ZETA_REGISTRY[cfg.experiment.zeta](sol.mesh.a, sol.mesh.b)
        weak = weak_form_residual(sol, zeta, (0.0, sol.grid.T))
        reports = check_galerkin_estimate(sol, cutoffs=_cutoffs(cfg))
        results = {"maximum_principle": mp, "average_contraction": contraction,
                   "weak_form_residual": weak, "estimates": reports,
                   "zero_propagation": zero_propagation(sol)}
        if exact is not None:
            results["oracle_error"] = error_vs_oracle(sol, exact)
        checks = [_residual_check(sol), _principle_check(mp),
                  _check("average_contraction", contraction.passed,
                         min(contraction.value_slack, contraction.grad_slack))]
        checks += _estimate_checks(reports)
    ctx.tables["solution"] = _solution_table(sol)
    ctx.results, ctx.checks = results, checks


def _cmd_squeeze(cfg, ctx):
    spec, _ = build_problem(cfg)
    grid, mesh = _discretisation(cfg)
    d = cfg.discretization
    with ctx.phase("solve"):
        rep = gamma_squeeze(spec, cfg.experiment.gammas, grid, mesh, cfg.solver, d.quad_order, d.lumped)
    ctx.tables["squeeze"] = Table("squeeze", tuple(zip(rep.gammas, rep.gaps)))
    ctx.results = {"squeeze": rep}
    drops = [a - b for a, b in zip(rep.gaps, rep.gaps[1:])]
    if rep.advisory and not rep.ordered:
        log.warning("squeeze ordering violated on a consistent-mass run (advisory)")
    ctx.checks = [_check("squeeze_ordering", rep.ordered or rep.advisory, min(rep.ordering, default=None)),
                  _check("squeeze_gaps_decreasing", rep.gaps_decreasing, min(drops, default=None))]
    if not rep.complete:
        raise SolveFailure(rep.failure, step=None)


def _cmd_convergence(cfg, ctx):
    spec, exact = build_problem(cfg)
    d = cfg.discretization
    with ctx.phase("solve"):
        rep = refine_study(spec, cfg.experiment.ladder, cfg.solver, exact, d.quad_order, d.lumped)
    rows = []
    for i, (m_t, n) in enumerate(rep.ladder):
        err = rep.errors[i] if i < len(rep.errors) else None
        red = rep.reductions[i - 1] if 0 < i <= len(rep.reductions) else None
        rows.append((m_t, n, err, red))
    ctx.tables["convergence"] = Table("convergence", tuple(rows))
    results = {"convergence": rep}
    if exact is not None:
        results["final_time_linf"] = [error_vs_oracle(s, exact)["linf_final"] for s in rep.solutions]
    ctx.results = results
    drops = [a - b for a, b in zip(rep.errors, rep.errors[1:])]
    ctx.checks = [_check("errors_decreasing", rep.strictly_decreasing(), min(drops, default=None))]
    if not rep.complete:
        raise SolveFailure(rep.failure, step=None)


def _cmd_ineq(cfg, ctx):
    ex = cfg.experiment
    if ex.seed is None:
        raise ConfigError("experiment.seed: the ineq sweep needs a fixed seed (config or --seed)")
    with ctx.phase("sweep"):
        sweep = sweep_vector_inequalities(ex.ineq_p, ex.samples, tuple(ex.dims), ex.seed)
    ctx.results = {"sweep": sweep, "seed": ex.seed}
    ctx.checks = [_check(f"inequalities_p={s['p']:g}", sum(s["violations"].values()) == 0,
                         min(s["worst_relative_slack"].values())) for s in sweep]


_HANDLERS = {"solve": _cmd_solve, "verify": _cmd_verify, "squeeze": _cmd_squeeze,
             "convergence": _cmd_convergence, "ineq": _cmd_ineq}


class _Context:
    def __init__(self):
        self.timings = {}
        self.tables = {}
        self.results = {}
        self.checks = []

    def phase(self, name):
        ctx = self

        class _Timer:
            def __enter__(self):
                self.t0 = time.perf_counter()

            def __exit__(self, *exc):
                ctx.timings[name] = ctx.timings.get(name, 0.0) + time.perf_counter() - self.t0

        return _Timer()


def _write_outputs(command, cfg, ctx, out_dir, status, failure=""):
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    fmt = cfg.output.format
    written = []
    (out_dir / "config.ini").write_text(dump_config(cfg), encoding="utf-8")
    written.append(out_dir / "config.ini")
    if fmt in ("csv", "both"):
        for name, table in ctx.tables.items():
            written.append(emit_report(table, "csv", out_dir / f"{name}.csv"))
    if fmt in ("json", "both") or not ctx.tables:
        report = {"command": command, "config": cfg.to_dict(), "results": ctx.results,
                  "checks": ctx.checks, "timings": ctx.timings, "status": status, "failure": failure}
        written.append(emit_report(report, "json", out_dir / "report.json"))
    manifest = {
        "artifact": "artifact", "version": __version__, "command": command,
        "config": cfg.to_dict(), "config_text": dump_config(cfg), "timings": ctx.timings,
        "status": status,
        "files": [{"path": p.name, "sha256": sha256_of(p), "bytes": p.stat().st_size} for p in written],
    }
    emit_report(manifest, "json", out_dir / "manifest.json")
    return written


def run_command(command, config, out_dir=None, solution=None):
    """Run one experiment, write its reports and manifest, return the exit status.

    ``solution`` lets ``verify`` check a stored DiscreteSolution instead of a
    fresh solve.
    """
    if command not in _HANDLERS:
        raise InvalidArgument(f"unknown command {command!r}; choose from {COMMANDS}")
    cfg = validate(config)
    out_dir = Path(out_dir or cfg.output.dir)
    ctx = _Context()
    t0 = time.perf_counter()
    status, failure = EXIT_OK, ""
    try:
        if command == "verify":
            _cmd_verify(cfg, ctx, solution)
        else:
            _HANDLERS[command](cfg, ctx)
        if not all(c["pass"] for c in ctx.checks):
            status = EXIT_CHECK
    except SolveFailure as exc:
        status, failure = EXIT_SOLVE, str(exc)
    except (NumericFailure, OracleFailure) as exc:
        status, failure = EXIT_SOLVE, f"{type(exc).__name__}: {exc}"
    except ConfigError as exc:
        status, failure = EXIT_CONFIG, str(exc)
    ctx.timings["total"] = time.perf_counter() - t0
    try:
        _write_outputs(command, cfg, ctx, out_dir, status, failure)
    except OSError as exc:
        log.error("cannot write outputs to %s: %s", out_dir, exc)
        return EXIT_CONFIG
    if failure:
        log.error("%s", failure)
    for c in ctx.checks:
        log.info("%-28s %s  worst slack %s", c["name"], "pass" if c["pass"] else "FAIL", c["worst_slack"])
    return status


def _parser():
    ap = argparse.ArgumentParser(prog="trudinger", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", required=True, help="INI configuration file")
        sp.add_argument("--out", help="output directory (overrides output.dir)")
        sp.add_argument("--seed", type=int, help="RNG seed (overrides experiment.seed)")
        sp.add_argument("--format", choices=("csv", "json", "both"), help="overrides output.format")
    lint = sub.add_parser("doc-lint", help="check the math-to-code table against the package")
    lint.add_argument("--root", default=".", help="repository root")
    return ap


def main(argv=None):
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    if args.command == "doc-lint":
        from .docs import doc_coverage_lint
        report = doc_coverage_lint(args.root)
        for name in report.missing:
            print(f"missing from math-to-code table: {name}")
        for name in report.stale:
            print(f"table row without code: {name}")
        return 0 if report.ok else 1
    try:
        cfg = load_config(args.config)
        changes = {}
        if args.seed is not None:
            changes["experiment"] = dataclasses.replace(cfg.experiment, seed=args.seed)
        if args.format is not None:
            changes["output"] = dataclasses.replace(cfg.output, format=args.format)
        cfg = validate(dataclasses.replace(cfg, **changes))
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    status = run_command(args.command, cfg, args.out)
    print(f"{args.command}: exit {status}")
    return status


if __name__ == "__main__":
    sys.exit(main())
