"""Test problems, the eps-h sweep and table output."""
from __future__ import annotations

import csv
import io
import logging
import math
import time
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .assembly import (
    AssembledSystem,
    InfeasibleDiscretization,
    assemble_load,
    assemble_matrices,
    assemble_system,
    build_dof_map,
    field_l2_norm,
)
from .conditioning import ConditioningReport, condition_report, fh_norm, quadratic_form
from .element import quadrature
from .mesh import StructuredMesh, build_mesh
from .sparse_linalg import BandedCholesky, SolverError, extreme_eigenvalues, solve_spd

log = logging.getLogger(__name__)

CSV_COLUMNS = (
    "problem", "element", "eps", "h", "n_dofs", "u_norm", "div_norm", "fh_norm",
    "est1", "est2", "est3", "lambda_min", "lambda_max", "kappa", "kappa_eff",
    "solver_iters", "solve_status",
)
FH_MODES = ("quadrature", "projection", "dirichlet")


@dataclass(frozen=True)
class TestProblem:
    __test__ = False  # not a pytest class

    id: int
    description: str
    make_field: Callable = field(repr=False)

    def field(self, h: float):
        return self.make_field(h)


def _smooth(h):
    def f(x, y):
        return np.sin(x + y), np.cos(x + y)
    return f


def _oscillating(h):
    k = 2 * np.pi / h

    def f(x, y):
        s = 10.0 + 50.0 * np.sin(k * x + k * y)
        return s, s
    return f


PROBLEMS = {
    1: TestProblem(1, "smooth forcing (sin(x+y), cos(x+y))", _smooth),
    2: TestProblem(2, "forcing 10 + 50 sin(2 pi (x+y) / h) in both components", _oscillating),
}


def forcing(problem: int, h: float | None = None):
    """Vector field ``f(x, y) -> (fx, fy)`` of test problem ``problem`` on mesh width ``h``."""
    if problem not in PROBLEMS:
        raise ValueError(f"unknown test problem {problem!r}; expected one of {sorted(PROBLEMS)}")
    if problem == 2 and not (h is not None and h > 0):
        raise ValueError("problem 2 needs the mesh width h > 0")
    return PROBLEMS[problem].field(h)


def halving(start: float, stop: float) -> list:
    """``start, start/2, ...`` down to the last value >= ``stop``."""
    out = [float(start)]
    while out[-1] / 2 >= stop:
        out.append(out[-1] / 2)
    return out


def default_eps():
    return [2.0 ** -k for k in range(25)]


def default_ns():
    return [2 ** k for k in range(10)]


@dataclass
class SweepConfig:
    eps: list = field(default_factory=default_eps)
    ns: list = field(default_factory=default_ns)
    elements: tuple = (1, 2)
    problems: tuple = (1, 2)
    # finest n per element degree; None lifts the cap
    max_n: Optional[dict] = field(default_factory=lambda: {1: 128, 2: 64})
    load_quad_degree: int = 8
    fh_mode: str = "quadrature"
    fh_quad_degree: int = 5
    solver: str = "direct"
    tol: float = 1e-10
    eigen: bool = False
    eigen_max_dofs: int = 8000
    eigen_tol: float = 1e-6
    eigen_maxiter: int = 500
    cg_maxiter: int = 10_000
    seed: int = 0
    eps_stride: int = 4  # table rows: every 4th eps, i.e. factor-16 steps
    table_min_n: int = 8

    def validate(self):
        if not self.eps or not self.ns or not self.elements or not self.problems:
            raise ValueError("eps, ns, elements and problems must be non-empty")
        if any(not e > 0 for e in self.eps):
            raise ValueError("all eps must be positive")
        if any(int(n) != n or n < 1 for n in self.ns):
            raise ValueError("all n must be positive integers")
        if any(d not in (1, 2) for d in self.elements):
            raise ValueError("elements must be degrees 1 and/or 2")
        if any(p not in PROBLEMS for p in self.problems):
            raise ValueError(f"problems must be among {sorted(PROBLEMS)}")
        if self.fh_mode not in FH_MODES:
            raise ValueError(f"fh_mode must be one of {FH_MODES}")
        if self.solver not in ("direct", "pcg"):
            raise ValueError("solver must be 'direct' or 'pcg'")
        if not 0 < self.tol < 1:
            raise ValueError("tol must lie in (0, 1)")
        return self

    def mesh_sizes(self, degree):
        cap = None if self.max_n is None else self.max_n.get(degree)
        return [n for n in self.ns if cap is None or n <= cap]


@dataclass
class SweepRecord:
    report: ConditioningReport
    element: int
    solve_status: str = "ok"
    solver_iters: int = 0
    residual: float = float("nan")
    wall_time: float = 0.0
    # c^T A c and c^T b; equal for an exact Galerkin solve
    energy: float = float("nan")
    work: float = float("nan")
    message: str = ""

    @property
    def problem(self):
        return self.report.problem

    @property
    def eps(self):
        return self.report.eps

    @property
    def h(self):
        return self.report.h

    def row(self) -> dict:
        r = self.report
        out = {c: getattr(r, c, None) for c in CSV_COLUMNS}
        out["element"] = f"p{self.element}"
        out["solver_iters"] = self.solver_iters
        out["solve_status"] = self.solve_status
        return out


def _canonical_key(rec):
    return (rec.problem, rec.element, -rec.h, -rec.eps)


def projected_rhs_norm(system: AssembledSystem, f, config: SweepConfig) -> float:
    """Numerator of est2 according to ``config.fh_mode``."""
    if config.fh_mode == "quadrature":
        return field_l2_norm(system.mesh, f, quadrature(config.fh_quad_degree))
    if config.fh_mode == "dirichlet":
        return fh_norm(system.M, system.b)
    full = build_dof_map(system.mesh, system.dof_map.degree, dirichlet=False)
    _, _, Mf = assemble_matrices(system.mesh, full)
    bf = assemble_load(system.mesh, full, f, quadrature(config.load_quad_degree))
    return fh_norm(Mf, bf)


@dataclass
class _Group:
    problem: int
    system: AssembledSystem
    fh: float


def prepare(problem: int, degree: int, mesh: StructuredMesh, config: SweepConfig) -> _Group:
    """Assemble everything shared by the eps column of one mesh."""
    f = forcing(problem, mesh.h)
    system = assemble_system(mesh, degree, f, quadrature(config.load_quad_degree))
    return _Group(problem, system, projected_rhs_norm(system, f, config))


def run_cell(problem, element, eps, mesh, config: SweepConfig, group: _Group | None = None) -> SweepRecord:
    """Solve one (problem, element, eps, h) cell; failures are recorded, not raised."""
    t0 = time.perf_counter()
    if group is None:
        group = prepare(problem, element, mesh, config)
    sysm = group.system
    A = sysm.matrix(eps)
    b = sysm.b
    empty = ConditioningReport(eps, mesh.h, element, problem, sysm.n_dofs,
                               float("nan"), float("nan"), group.fh,
                               est1=(1.0 + 1.0 / eps) / mesh.h ** 2)
    factor = None
    try:
        if config.solver == "direct":
            factor = BandedCholesky(A)
        sol = solve_spd(A, b, tol=config.tol, method=config.solver, factor=factor,
                        maxiter=config.cg_maxiter)
    except SolverError as exc:
        log.warning("cell problem=%s P%s eps=%g h=%g failed: %s", problem, element, eps, mesh.h, exc)
        return SweepRecord(empty, element, exc.status, 0, wall_time=time.perf_counter() - t0,
                           message=str(exc))

    c = sol.solution
    eigen = None
    status = sol.status
    message = ""
    if config.eigen and sysm.n_dofs <= config.eigen_max_dofs:
        try:
            eigen = extreme_eigenvalues(A, factor, tol=config.eigen_tol,
                                        maxiter=config.eigen_maxiter, seed=config.seed)
        except SolverError as exc:
            status, message = "eigen_" + exc.status, str(exc)
    rep = condition_report(eps, mesh.h, element, problem, sysm.K, sysm.D, sysm.M, b, c, group.fh, eigen)
    if "degenerate" in rep.flags:
        status = "degenerate"
    return SweepRecord(
        rep, element, status, sol.iterations, sol.residual,
        wall_time=time.perf_counter() - t0,
        energy=quadratic_form(A, c), work=float(np.dot(c.astype(np.longdouble), b)), message=message,
    )


def run_sweep(config: SweepConfig, progress: Callable | None = None) -> list:
    """Every feasible cell of the configured grid, in canonical order."""
    config.validate()
    records = []
    for problem in config.problems:
        for degree in config.elements:
            for n in config.mesh_sizes(degree):
                mesh = build_mesh(n)
                try:
                    group = prepare(problem, degree, mesh, config)
                except InfeasibleDiscretization as exc:
                    log.info("skipping problem=%s P%s n=%s: %s", problem, degree, n, exc)
                    continue
                for eps in config.eps:
                    rec = run_cell(problem, degree, eps, mesh, config, group)
                    records.append(rec)
                    if progress is not None:
                        progress(rec)
    records.sort(key=_canonical_key)
    return records


# -- output -------------------------------------------------------------------

def format_sci(x) -> str:
    """Two significant digits in the compact ``1.9E2`` style; values in [1, 100) print as integers."""
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return "-"
    if x == 0:
        return "0"
    mant, exp = f"{x:.1E}".split("E")
    exp = int(exp)
    if 0 <= exp <= 1:
        return f"{float(f'{x:.2g}'):.0f}"
    return f"{mant}E{exp}"


@dataclass
class TableSelection:
    quantities: tuple = ("est2", "est3")
    eps_stride: int = 4
    min_n: int = 8


def _fmt_csv(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return "" if math.isnan(v) else repr(v)
    return str(v)


def records_to_csv(records) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for rec in records:
        row = rec.row() if isinstance(rec, SweepRecord) else rec
        w.writerow([_fmt_csv(row.get(c)) for c in CSV_COLUMNS])
    return buf.getvalue()


def read_csv(text_or_path) -> list:
    """Parse CSV produced by :func:`records_to_csv` into dicts (floats, ints, or None)."""
    if "\n" not in str(text_or_path):
        with open(text_or_path, newline="") as fh:
            text = fh.read()
    else:
        text = text_or_path
    rows = []
    for raw in csv.DictReader(io.StringIO(text)):
        row = {}
        for k, v in raw.items():
            if v == "":
                row[k] = None
            elif k in ("problem", "n_dofs", "solver_iters"):
                row[k] = int(v)
            elif k in ("element", "solve_status"):
                row[k] = v
            else:
                row[k] = float(v)
        rows.append(row)
    return rows


def grid(records, problem, element, quantity, selection: TableSelection | None = None):
    """``(eps_rows, h_cols, values)`` for one quantity; missing cells are NaN."""
    sel = selection or TableSelection()
    recs = [r for r in records if r.problem == problem and r.element == element
            and round(1 / r.h) >= sel.min_n]
    if not recs:
        return [], [], np.zeros((0, 0))
    all_eps = sorted({r.eps for r in recs}, reverse=True)
    eps_rows = all_eps[::sel.eps_stride]
    h_cols = sorted({r.h for r in recs}, reverse=True)
    vals = np.full((len(eps_rows), len(h_cols)), np.nan)
    ei = {e: i for i, e in enumerate(eps_rows)}
    hi = {h: j for j, h in enumerate(h_cols)}
    for r in recs:
        if r.eps in ei:
            v = getattr(r.report, quantity)
            vals[ei[r.eps], hi[r.h]] = np.nan if v is None else v
    return eps_rows, h_cols, vals


def records_to_markdown(records, selection: TableSelection | None = None) -> str:
    sel = selection or TableSelection()
    blocks = []
    for problem in sorted({r.problem for r in records}):
        for element in sorted({r.element for r in records if r.problem == problem}):
            for q in sel.quantities:
                eps_rows, h_cols, vals = grid(records, problem, element, q, sel)
                if not eps_rows:
                    continue
                lines = [f"### {q}, problem {problem}, P{element}", ""]
                lines.append("| eps \\ h | " + " | ".join(format_sci(h) for h in h_cols) + " |")
                lines.append("|---" * (len(h_cols) + 1) + "|")
                for e, row in zip(eps_rows, vals):
                    lines.append(f"| {format_sci(e)} | " + " | ".join(format_sci(v) for v in row) + " |")
                blocks.append("\n".join(lines))
    return "\n\n".join(blocks) + ("\n" if blocks else "")


def emit_tables(records, format="both", selection: TableSelection | None = None) -> dict:
    """Render records; returns ``{"csv": text}``, ``{"md": text}`` or both."""
    if format not in ("csv", "md", "both"):
        raise ValueError(f"unknown output format {format!r}")
    out = {}
    if format in ("csv", "both"):
        out["csv"] = records_to_csv(records)
    if format in ("md", "both"):
        out["md"] = records_to_markdown(records, selection)
    return out
