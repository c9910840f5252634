"""
Condition numbers and the three estimates
=========================================

For one mesh, compare the classical condition number kappa with the
effective condition number kappa_eff = |b| / (lambda_min |c|) and with
est1, est2, est3 across eps, for both element families.
"""
import numpy as np
import scipy.linalg as sla

from penstokes.assembly import assemble_matrices, build_dof_map
from penstokes.harness import SweepConfig, format_sci, run_cell
from penstokes.mesh import build_mesh

mesh = build_mesh(8)
cfg = SweepConfig(eigen=True)

for degree in (1, 2):
    print(f"\nP{degree}, problem 1, h=1/8")
    print("    eps    kappa   kappa_eff   est1    est2    est3")
    for eps in (1.0, 2.0 ** -8, 2.0 ** -16, 2.0 ** -24):
        r = run_cell(1, degree, eps, mesh, cfg).report
        print("  " + "  ".join(f"{format_sci(v):>7}" for v in
                               (eps, r.kappa, r.kappa_eff, r.est1, r.est2, r.est3)))

# The difference between the families comes from D: the smallest
# generalized eigenvalue of (D, M) is positive for P1 and zero for P2.
small = build_mesh(4)
for degree in (1, 2):
    _, D, M = assemble_matrices(small, build_dof_map(small, degree))
    w = sla.eigh(D.toarray(), M.toarray(), eigvals_only=True)
    print(f"P{degree}, n=4: min ||div v||^2/||v||^2 = {max(w[0], 0):.2e}, "
          f"{np.sum(w < 1e-10)} divergence-free directions")
