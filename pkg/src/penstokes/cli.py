"""Command line: ``penstokes sweep`` and ``penstokes analyze``.

Exit codes: 0 success, 1 configuration error, 2 at least one cell failed.
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import harness
from .conditioning import kappa_eff
from .sparse_linalg import BandedCholesky, SolverError, extreme_eigenvalues, read_matrix_market, solve_spd

OK_STATUSES = {"ok", "roundoff"}


def build_parser():
    p = argparse.ArgumentParser(prog="penstokes", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("sweep", help="run the eps-h sweep and write tables")
    s.add_argument("--problem", choices=["1", "2", "all"], default="all")
    s.add_argument("--element", choices=["p1", "p2", "all"], default="all")
    s.add_argument("--max-n", type=int, default=None,
                   help="finest mesh (n = 1/h); default 128 for P1 and 64 for P2")
    s.add_argument("--min-eps", type=float, default=5.96e-8)
    s.add_argument("--quad-degree", type=int, default=8, help="quadrature degree for load vectors")
    s.add_argument("--fh-mode", choices=harness.FH_MODES, default="quadrature")
    s.add_argument("--solver", choices=["direct", "pcg"], default="direct")
    s.add_argument("--tol", type=float, default=1e-10)
    s.add_argument("--eigen", choices=["off", "on"], default="off")
    s.add_argument("--eigen-max-n", type=int, default=8000,
                   help="largest DOF count N for which eigenvalues are computed")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--format", choices=["csv", "md", "both"], default="both")
    s.add_argument("--out", type=Path, default=None,
                   help="output path prefix (.csv / .md appended); stdout if omitted")
    s.add_argument("--all-eps", action="store_true",
                   help="solve every halving of eps, not only the tabulated factor-16 steps")
    s.add_argument("-v", "--verbose", action="store_true")

    a = sub.add_parser("analyze", help="kappa and kappa_eff of a MatrixMarket system")
    a.add_argument("--matrix", type=Path, required=True)
    a.add_argument("--rhs", type=Path, required=True,
                   help="MatrixMarket array file or plain text, one value per line")
    a.add_argument("--tol", type=float, default=1e-10)
    a.add_argument("--seed", type=int, default=0)
    return p


def config_from_args(args) -> harness.SweepConfig:
    eps = harness.halving(1.0, args.min_eps)
    stride = 4
    if not args.all_eps:
        eps = eps[::stride]
        stride = 1
    cfg = harness.SweepConfig(
        eps=eps,
        problems=(1, 2) if args.problem == "all" else (int(args.problem),),
        elements=(1, 2) if args.element == "all" else (int(args.element[1]),),
        load_quad_degree=args.quad_degree,
        fh_mode=args.fh_mode,
        solver=args.solver,
        tol=args.tol,
        eigen=args.eigen == "on",
        eigen_max_dofs=args.eigen_max_n,
        seed=args.seed,
        eps_stride=stride,
    )
    if args.max_n is not None:
        if args.max_n < 1:
            raise ValueError("--max-n must be positive")
        cfg.ns = [n for n in harness.default_ns() if n <= args.max_n] or [1]
        cfg.max_n = None
    if args.quad_degree < 1:
        raise ValueError("--quad-degree must be positive")
    return cfg.validate()


def cmd_sweep(args) -> int:
    try:
        cfg = config_from_args(args)
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1

    def progress(rec):
        logging.getLogger("penstokes").info(
            "problem=%d P%d h=%.3g eps=%.3g status=%s %.2fs",
            rec.problem, rec.element, rec.h, rec.eps, rec.solve_status, rec.wall_time)

    records = harness.run_sweep(cfg, progress=progress)
    out = harness.emit_tables(records, args.format,
                              harness.TableSelection(eps_stride=cfg.eps_stride, min_n=cfg.table_min_n))
    if args.out is None:
        for text in out.values():
            sys.stdout.write(text)
    else:
        args.out.parent.mkdir(parents=True, exist_ok=True)
        for ext, text in out.items():
            args.out.with_suffix("." + ext).write_text(text)
    failed = [r for r in records if r.solve_status not in OK_STATUSES]
    for r in failed:
        print(f"cell failed: problem={r.problem} P{r.element} h={r.h:g} eps={r.eps:g}: "
              f"{r.solve_status} {r.message}", file=sys.stderr)
    return 2 if failed else 0


def _read_vector(path: Path) -> np.ndarray:
    with open(path) as fh:
        head = fh.readline()
    if head.startswith("%%MatrixMarket"):
        return np.asarray(read_matrix_market(path)).ravel()
    return np.loadtxt(path, ndmin=1)


def cmd_analyze(args) -> int:
    try:
        A = read_matrix_market(args.matrix)
        b = _read_vector(args.rhs)
        if not hasattr(A, "tocsr") or A.shape[0] != A.shape[1] or A.shape[0] != len(b):
            raise ValueError(f"matrix {getattr(A, 'shape', None)} and rhs of length {len(b)} do not match")
    except (OSError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    try:
        factor = BandedCholesky(A)
        sol = solve_spd(A, b, tol=args.tol, factor=factor)
        eig = extreme_eigenvalues(A, factor, seed=args.seed)
    except SolverError as exc:
        print(f"solver failure ({exc.status}): {exc}", file=sys.stderr)
        return 2
    print(f"n               {A.shape[0]}")
    print(f"residual        {sol.residual:.3e} ({sol.status})")
    print(f"lambda_min      {eig.lambda_min:.10e}")
    print(f"lambda_max      {eig.lambda_max:.10e}")
    print(f"kappa           {eig.kappa:.10e}")
    print(f"kappa_eff       {kappa_eff(eig.lambda_min, sol.solution, b):.10e}")
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if getattr(args, "verbose", False) else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.command == "sweep":
        return cmd_sweep(args)
    return cmd_analyze(args)


if __name__ == "__main__":
    sys.exit(main())
