"""Command-line entry point: ``nonlocal-plate <subcommand> [--config PATH] ...``.

Exit status: 0 success, 1 failed check or solve, 2 configuration error.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from . import analysis, config as cfgmod, kernel as kern, operators as ops, solver as slv
from .errors import ConfigurationError, KernelDomainError, SolverError
from .geometry import OMEGA_2DELTA, OMEGA_DELTA, build_grid, write_nodes_csv

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2

MASS_TOL = 1e-8
SIGMA_C_TOL = 1e-6
IBP_TOL = 1e-12
SEMIDEF_TOL = 1e-12
ROWSUM_TOL = 1e-12


def _out(cfg, args, default):
    return args.out or cfg["output.csv"] or default


def _grid_and_operator(cfg):
    delta = float(cfg.single("kernel.delta"))
    disc = build_grid(cfg.domain, cfg.h, delta)
    spec = kern.KernelSpec(cfg.single("kernel.family"), delta, int(cfg.single("kernel.dim")))
    op = ops.assemble_laplacian(disc, spec, cfg["grid.quadrature"],
                                break_symmetry=cfg["debug.break_symmetry"] == "true")
    if cfg["output.nodes"]:
        write_nodes_csv(disc, cfg["output.nodes"])
    if cfg["output.matrix"]:
        ops.write_matrix_market(op, cfg["output.matrix"])
    return disc, op


def cmd_kernel_check(cfg, args):
    ok = True
    print("family      dim  delta     mass                C(delta)            sigma  sigma*C")
    for fam in cfg.families:
        for dim in cfg.dims:
            for delta in cfg.deltas:
                spec = kern.KernelSpec(fam, delta, dim)
                m = kern.mass(spec)
                c = kern.c_delta(spec)
                good = abs(m - 1) <= MASS_TOL and abs(spec.sigma * c - 1) <= SIGMA_C_TOL
                ok &= good
                print(f"{fam.value:<11} {dim:<4} {delta:<9g} {m:<19.16f} {c:<19.16f} "
                      f"{spec.sigma:<6g} {spec.sigma * c:.16f}  |C-1/(2d)|={abs(c - 0.5 / dim):.2e}"
                      f"  {'ok' if good else 'FAIL'}")
    return EXIT_OK if ok else EXIT_FAIL


def identity_checks(op, seed, pairs=20, fields=1000):
    """Run the structural checks; returns a list of (name, passed, detail)."""
    rng = np.random.default_rng(seed)
    A = op.matrix
    results = []
    D = (A - A.T).tocsr()
    D.eliminate_zeros()
    results.append(("symmetry", D.nnz == 0, f"{D.nnz} asymmetric entries"))
    scale = float(abs(A).sum(axis=1).max()) or 1.0
    rs = float(np.abs(A @ np.ones(op.n)).max())
    results.append(("null-space", rs <= ROWSUM_TOL * scale,
                    f"max |row sum| = {rs:.3e} (matrix norm {scale:.3e})"))
    U = rng.standard_normal((op.n, fields))
    quad = np.einsum("ij,ij->j", A @ U, U)
    worst = float(np.max(quad / np.einsum("ij,ij->j", U, U)))
    results.append(("semidefiniteness", worst <= SEMIDEF_TOL,
                    f"max <Au,u>/|u|^2 over {fields} fields = {worst:.3e}"))
    res = [ops.ibp_residual(op, rng.standard_normal(op.n), rng.standard_normal(op.n))
           for _ in range(pairs)]
    results.append(("integration-by-parts", max(res) <= IBP_TOL,
                    f"max relative residual over {pairs} pairs = {max(res):.3e}"))
    return results


def cmd_identities(cfg, args):
    disc, op = _grid_and_operator(cfg)
    print(f"grid {disc.nx}x{disc.ny}, {disc.n} in-domain nodes, {op.pairs.nnz} pair weights")
    results = identity_checks(op, args.seed, int(cfg["identities.pairs"]),
                              int(cfg["identities.fields"]))
    for name, good, detail in results:
        print(f"{name}: {'ok' if good else 'FAILED'} ({detail})")
    failed = [name for name, good, _ in results if not good]
    if failed:
        print("failed checks: " + ", ".join(failed))
        return EXIT_FAIL
    return EXIT_OK


def cmd_solve(cfg, args):
    disc, op = _grid_and_operator(cfg)
    f = cfgmod.parse_forcing(cfg["problem.forcing"])
    kind = cfg["problem.kind"]
    kw = {}
    if kind == "poisson":
        kw["collar_width"] = cfg["problem.collar"]
    if kind != "hinged_monolithic":
        kw.update(max_iter=cfg.max_iter, preconditioner=cfg.preconditioner)
    out = _out(cfg, args, "solution.csv")
    try:
        rep = slv.solve(kind, disc, op, f, tol=cfg.tol, **kw)
    except SolverError as exc:
        hist_path = out + ".residuals.txt"
        np.savetxt(hist_path, np.asarray(exc.residual_history), header="relative residual")
        print(f"solver failed: {exc}; residual history written to {hist_path}")
        return EXIT_FAIL
    slv.write_solution_csv(disc, rep.solution, out)
    i_max = int(np.argmax(np.abs(rep.solution)))
    print(f"solved {kind}: iterations={rep.iterations} residual={rep.residual:.3e} "
          f"max|u|={abs(rep.solution[i_max]):.6g} at ({disc.xs[i_max]:.4g}, {disc.ys[i_max]:.4g}) "
          f"-> {out}")
    return EXIT_OK


def cmd_study(cfg, args):
    kind = cfg["study.kind"]
    case = analysis.make_case(cfg["study.case"])
    m = int(cfg["grid.m"])
    family = cfg.single("kernel.family")
    q = cfg["grid.quadrature"]
    if kind == "pointwise_laplacian":
        res = analysis.run_pointwise_laplacian_study(cfg.domain, case, cfg.study_deltas, m, q, family)
    elif kind == "pointwise_biharmonic":
        res = analysis.run_pointwise_biharmonic_study(cfg.domain, case, cfg.study_deltas, m, q,
                                                      family)
    else:
        res = analysis.run_solution_study(cfg["problem.kind"], cfg.domain, case, cfg.study_deltas,
                                          m, cfg.tol, q, family, cfg.preconditioner)
    out = _out(cfg, args, "study.csv")
    text = analysis.write_study_csv(res, out)
    sys.stdout.write(text)
    for note in res.warnings:
        print(f"note: {note}")
    if not res.passed:
        row = res.rows[res.failing_row or 0]
        print(f"study failed; first failing row: delta={row.delta!r} error_l2={row.error_l2:.4g} "
              f"error_linf={row.error_linf:.4g}")
        return EXIT_FAIL
    return EXIT_OK


COMMANDS = {"kernel-check": cmd_kernel_check, "identities": cmd_identities,
            "solve": cmd_solve, "study": cmd_study}


def build_parser():
    p = argparse.ArgumentParser(prog="nonlocal-plate", description=__doc__.splitlines()[0])
    p.add_argument("command", choices=sorted(COMMANDS))
    p.add_argument("--config", help="config file of 'section.key = value' lines")
    p.add_argument("--seed", type=int, default=0, help="seed for random-field checks")
    p.add_argument("--quadrature", choices=ops.QUADRATURES, help="override grid.quadrature")
    p.add_argument("--out", help="output CSV path (overrides output.csv)")
    return p


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    if args.seed < 0 or args.seed >= 2 ** 64:
        print("error: --seed must be an unsigned 64-bit integer", file=sys.stderr)
        return EXIT_CONFIG
    overrides = {"grid.quadrature": args.quadrature} if args.quadrature else {}
    try:
        cfg = cfgmod.load(args.config, overrides)
        print("# resolved config")
        print(cfg.echo())
        print(f"# seed = {args.seed}")
        sys.stdout.flush()
        return COMMANDS[args.command](cfg, args)
    except (ConfigurationError, KernelDomainError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
