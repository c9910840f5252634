"""Acceptance criteria, one marked group per criterion.

The session sweep covers both problems and both elements at acceptance
scale (P1 up to n = 128, P2 up to n = 64) on the seven tabulated eps rows,
with eigenvalues for every cell of at most 8000 DOFs.
"""
import math
import time
from math import factorial

import numpy as np
import pytest
import scipy.sparse as sp

from penstokes.assembly import assemble_system, build_dof_map, element_matrices
from penstokes.conditioning import kappa, kappa_eff
from penstokes.element import quadrature
from penstokes.harness import SweepConfig, default_eps, format_sci, forcing, run_sweep
from penstokes.mesh import build_mesh
from penstokes.sparse_linalg import extreme_eigenvalues, solve_spd

TABLE_EPS = default_eps()[::4]  # 1, 6.3E-2, 3.9E-3, 2.4E-4, 1.5E-5, 9.5E-7, 6.0E-8


@pytest.fixture(scope="session")
def sweep():
    cfg = SweepConfig(eps=TABLE_EPS, eps_stride=1, eigen=True, eigen_max_dofs=8000)
    t0 = time.perf_counter()
    records = run_sweep(cfg)
    return records, time.perf_counter() - t0


def cell(records, problem, element, eps_row, n):
    eps = TABLE_EPS[eps_row]
    for r in records:
        if (r.problem, r.element, r.eps, round(1 / r.h)) == (problem, element, eps, n):
            return r.report
    raise KeyError((problem, element, eps_row, n))


def rel(a, b):
    return abs(a - b) / abs(b)


# -- 1 ------------------------------------------------------------------------

@pytest.mark.criterion(1)
def test_table1_spots(sweep, measured):
    records, _ = sweep
    spots = [(0, 8, 39.0), (1, 16, 1.7e2), (2, 32, 4.3e2), (3, 64, 8.0e2)]
    for row, n, ref in spots:
        v = cell(records, 1, 1, row, n).est2
        measured(f"est2(eps={format_sci(TABLE_EPS[row])}, h=1/{n}) = {v:.4g} vs {ref:g}")
        assert rel(v, ref) <= 0.10


# -- 2 ------------------------------------------------------------------------

@pytest.mark.criterion(2)
def test_table1_eps_scaling(sweep, measured):
    records, _ = sweep
    a = cell(records, 1, 1, 5, 64).est2
    b = cell(records, 1, 1, 6, 64).est2
    measured(f"est2 ratio at h=1/64: {b / a:.3f}")
    assert 12 <= b / a <= 20


# -- 3 ------------------------------------------------------------------------

@pytest.mark.criterion(3)
def test_table2_first_row(sweep, measured):
    records, _ = sweep
    vals = [cell(records, 1, 1, 0, n).est3 for n in (8, 16, 32, 64)]
    measured("est3(eps=1): " + ", ".join(f"{v:.4g}" for v in vals))
    for v, ref in zip(vals, (25, 50, 1.0e2, 2.0e2)):
        assert rel(v, ref) <= 0.10
    for a, b in zip(vals, vals[1:]):
        assert rel(b / a, 2.0) <= 0.10


# -- 4 ------------------------------------------------------------------------

@pytest.mark.criterion(4)
def test_table3a_plateau(sweep, measured):
    records, _ = sweep
    col = [cell(records, 1, 2, row, 8).est3 for row in range(7)]
    change = rel(col[-1], col[-2])
    measured(f"P2 est3 at h=1/8, eps={format_sci(TABLE_EPS[-1])}: {col[-1]:.4g} vs 7.1E2; "
             f"last-row change {change:.2%}")
    assert rel(col[-1], 7.1e2) <= 0.15
    assert change < 0.05


@pytest.mark.criterion(4)
def test_table3a_est2_limit(sweep, measured):
    records, _ = sweep
    v = cell(records, 1, 2, 6, 64).est2
    measured(f"P2 est2 at the finest cell (h=1/64, eps=6.0E-8): {v:.4g} vs 1.13 +- 0.05")
    assert abs(v - 1.13) <= 0.05


# -- 5 ------------------------------------------------------------------------

@pytest.mark.criterion(5)
def test_est1_exact(sweep):
    records, _ = sweep
    for r in records:
        exact = (1.0 + 1.0 / r.eps) / (r.h * r.h)
        assert abs(r.report.est1 - exact) <= 1e-12 * exact


@pytest.mark.criterion(5)
def test_est1_listing(sweep, measured):
    records, _ = sweep
    vals = [cell(records, 1, 1, 6, n).est1 for n in (8, 16, 32, 64)]
    refs = (1.0e9, 4.3e9, 1.7e10, 6.9e10)
    measured("est1(eps=6.0E-8): " + ", ".join(
        f"{v:.3g} ({rel(v, r):.1%} off {r:.1E})" for v, r in zip(vals, refs)))
    for v, ref in zip(vals, refs):
        assert rel(v, ref) <= 0.05


# -- 6 ------------------------------------------------------------------------

@pytest.mark.criterion(6)
def test_problem2_magnitudes(sweep, measured):
    records, _ = sweep
    p1 = cell(records, 2, 1, 6, 8).est2
    p2 = cell(records, 2, 2, 6, 8).est3
    measured(f"P1 est2 = {p1:.3g} vs 4.7E8; P2 est3 = {p2:.3g} vs 3.9E8")
    assert 0.5 <= p1 / 4.7e8 <= 2
    assert 0.5 <= p2 / 3.9e8 <= 2


@pytest.mark.criterion(6)
@pytest.mark.parametrize("row", [0, 6])
def test_problem2_p2_row_growth(sweep, measured, row):
    records, _ = sweep
    vals = [cell(records, 2, 2, row, n).est3 for n in (8, 16, 32, 64)]
    ratios = [b / a for a, b in zip(vals, vals[1:])]
    measured(f"P2 est3 growth per halving, eps={format_sci(TABLE_EPS[row])}: "
             + ", ".join(f"{q:.3f}" for q in ratios))
    for q in ratios:
        assert abs(q - 2) <= 0.4


# -- 7 ------------------------------------------------------------------------

def _random_system(rng, max_log_kappa=5.0):
    # the dense oracle resolves lambda_min only to about kappa * 1e-16, so the
    # spread is capped where a 1e-8 comparison is still meaningful
    n = int(rng.integers(5, 201))
    Q, _ = np.linalg.qr(rng.standard_normal((n, n)))
    w = np.logspace(0, rng.uniform(1, max_log_kappa), n) * rng.uniform(0.1, 10)
    A = (Q * w) @ Q.T
    return (A + A.T) / 2, rng.standard_normal(n)


@pytest.mark.criterion(7)
def test_kappa_oracle(measured):
    rng = np.random.default_rng(20240607)
    worst = 0.0
    for _ in range(20):
        A, b = _random_system(rng)
        Asp = sp.csr_matrix(A)
        eig = extreme_eigenvalues(Asp)
        c = solve_spd(Asp, b).solution
        w = np.linalg.eigvalsh(A)
        k_ref = w[-1] / w[0]
        c_ref = np.linalg.solve(A, b)
        ke_ref = np.linalg.norm(b) / (w[0] * np.linalg.norm(c_ref))
        k, ke = kappa(eig), kappa_eff(eig.lambda_min, c, b)
        worst = max(worst, rel(k, k_ref), rel(ke, ke_ref))
        assert rel(k, k_ref) <= 1e-8
        assert rel(ke, ke_ref) <= 1e-8
        assert ke <= k * (1 + 1e-12)
    measured(f"worst relative deviation from dense oracle: {worst:.1e}")


# -- 8 ------------------------------------------------------------------------

@pytest.mark.criterion(8)
@pytest.mark.parametrize("n", [2, 4, 8, 16])
@pytest.mark.parametrize("eps", [1.0, 1e-3])
def test_fem_eigen_oracle(n, eps):
    A = assemble_system(build_mesh(n), 1, forcing(1)).matrix(eps)
    w = np.linalg.eigvalsh(A.toarray())
    e = extreme_eigenvalues(A)
    assert rel(e.lambda_min, w[0]) <= 1e-5
    assert rel(e.lambda_max, w[-1]) <= 1e-5


# -- 9 ------------------------------------------------------------------------

@pytest.mark.criterion(9)
def test_dof_counts():
    for n in (2, 3, 8, 16, 64):
        mesh = build_mesh(n)
        assert build_dof_map(mesh, 1).n_interior == (n - 1) ** 2
        assert build_dof_map(mesh, 2).n_interior == (2 * n - 1) ** 2


@pytest.mark.criterion(9)
@pytest.mark.parametrize("degree", [1, 2, 4, 5, 6, 8])
def test_quadrature_exactness(degree):
    q = quadrature(degree)
    x, y = q.points.T
    for a in range(degree + 1):
        for b in range(degree + 1 - a):
            exact = factorial(a) * factorial(b) / factorial(a + b + 2)
            assert abs(q.weights @ (x ** a * y ** b) - exact) <= 1e-14 * exact


@pytest.mark.criterion(9)
def test_p1_element_symbolic():
    import sympy
    s, t = sympy.symbols("s t")
    phis = [1 - s - t, s, t]
    grads = [(sympy.diff(p, s), sympy.diff(p, t)) for p in phis]
    for h in (sympy.Integer(1), sympy.Rational(1, 8)):
        def integ(e):
            return sympy.integrate(sympy.integrate(e * h * h, (t, 0, 1 - s)), (s, 0, 1))
        # on the leg-h triangle the physical gradient is grad_ref / h
        K = sympy.Matrix(3, 3, lambda a, b: integ((grads[a][0] * grads[b][0] + grads[a][1] * grads[b][1]) / h ** 2))
        M = sympy.Matrix(3, 3, lambda a, b: integ(phis[a] * phis[b]))
        hf = float(h)
        k, m, _ = element_matrices(np.array([[[0, 0], [hf, 0], [0, hf]]]), 1, quadrature(2))
        np.testing.assert_array_equal(k[0], np.array(K, dtype=float))
        np.testing.assert_allclose(m[0], np.array(M, dtype=float), rtol=1e-15)


@pytest.mark.criterion(9)
def test_energy_identity(sweep, measured):
    records, _ = sweep
    worst = max(abs(r.energy - r.work) / abs(r.work) for r in records)
    measured(f"worst |c'Ac - c'b| / |c'b| over {len(records)} cells: {worst:.1e}")
    assert worst <= 1e-8


@pytest.mark.criterion(9)
def test_divergence_energy_bound(sweep):
    records, _ = sweep
    for r in records:
        assert r.report.div_norm ** 2 <= r.eps * r.work * (1 + 1e-8)


# -- 10 -----------------------------------------------------------------------

@pytest.mark.criterion(10)
@pytest.mark.parametrize("element", [1, 2])
def test_band_witness(sweep, measured, element):
    records, _ = sweep
    cells = [r for r in records
             if r.problem == 1 and r.element == element and r.report.kappa_eff is not None]

    def band(min_n):
        ratios = [r.report.kappa_eff / r.report.est2 for r in cells if round(1 / r.h) >= min_n]
        return max(ratios) / min(ratios), len(ratios)

    full, count = band(1)
    measured(f"P{element}: kappa_eff/est2 band over all {count} eigen cells = {full:.3g}; "
             f"n >= 4: {band(4)[0]:.3g}; n >= 8: {band(8)[0]:.3g}")
    assert count and full < 100


@pytest.mark.criterion(10)
def test_runtime(sweep, measured):
    _, elapsed = sweep
    measured(f"acceptance sweep wall time {elapsed:.1f} s")
    assert elapsed < 600
