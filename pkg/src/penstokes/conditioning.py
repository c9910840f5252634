"""Condition numbers, function-space norms and the three conditioning estimates.

``kappa`` and ``kappa_eff`` use the euclidean norm of coefficient vectors;
the estimates use L2 norms of the finite-element functions. Unknown O(1)
constants are dropped throughout.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np
import scipy.sparse as sp

from .sparse_linalg import EigenEstimate, solve_spd


class DegenerateSolution(ValueError):
    """The solution vanished, so ratios against ``|c|`` or ``||u||`` are undefined."""


def quadratic_form(A, c, name="quadratic_form") -> float:
    """``c^T A c`` accumulated in extended precision.

    In double precision the form carries an absolute error near
    ``u |A| |c|^2``, which swamps ``c^T D c`` for nearly divergence-free
    ``c`` under large penalties.
    """
    c = np.asarray(c, dtype=float)
    if A.shape[0] != A.shape[1] or A.shape[1] != c.shape[0]:
        raise ValueError(f"{name}: matrix {A.shape} does not match vector of length {c.shape[0]}")
    cx = c.astype(np.longdouble)
    Ax = sp.csr_matrix(A).astype(np.longdouble)
    # roundoff can push a PSD form slightly negative
    return max(float(cx @ (Ax @ cx)), 0.0)


def l2_norm(M, c) -> float:
    """``||u_h|| = sqrt(c^T M c)``."""
    return math.sqrt(quadratic_form(M, c, "l2_norm"))


def div_norm(D, c) -> float:
    """``||div u_h|| = sqrt(c^T D c)``."""
    return math.sqrt(quadratic_form(D, c, "div_norm"))


def fh_norm(M, b, solver=None, tol=1e-12) -> float:
    """L2 norm of the projection whose load vector is ``b``: ``sqrt(b^T M^-1 b)``.

    ``solver(M, b)`` may be supplied; it must return the coefficient vector.
    """
    b = np.asarray(b, dtype=float)
    if not np.any(b):
        return 0.0
    if solver is None:
        a = solve_spd(M, b, tol=tol).solution
    else:
        a = solver(M, b)
    return math.sqrt(max(float(b @ a), 0.0))


def kappa(eigen: EigenEstimate) -> float:
    if eigen is None or eigen.lambda_min is None or eigen.lambda_max is None:
        raise ValueError("eigenvalue estimates are missing")
    return eigen.lambda_max / eigen.lambda_min


def kappa_eff(lambda_min: float, c, b) -> float:
    """Condition number at the solution: ``|b| / (lambda_min |c|)`` with ``b = A c``."""
    if not lambda_min > 0:
        raise ValueError(f"lambda_min must be positive, got {lambda_min!r}")
    nc = float(np.linalg.norm(c))
    if nc == 0:
        raise DegenerateSolution("zero solution vector")
    return float(np.linalg.norm(b)) / (lambda_min * nc)


def estimates(eps: float, h: float, u_norm: float, div_norm: float, fh_norm: float):
    """``(est1, est2, est3)``.

    est1 = h^-2 + h^-2/eps, est2 = ||f^h|| / ||u||,
    est3 = ||div u|| / (eps h ||u||).
    """
    if not (eps > 0 and h > 0):
        raise ValueError("eps and h must be positive")
    if not u_norm > 0:
        raise DegenerateSolution("||u|| = 0, estimates are undefined")
    est1 = (1.0 + 1.0 / eps) / (h * h)
    est2 = fh_norm / u_norm
    est3 = div_norm / (eps * h * u_norm)
    return est1, est2, est3


def adaptive_bounds(tol: float, eps: float, h: float):
    """Bounds on the effective condition number when eps is tuned to a tolerance.

    ``bound_u`` applies when ``||div u||/||u|| <= tol``, ``bound_grad`` when
    ``||div u||/||grad u|| <= tol``.
    """
    bound_u = (1.0 + h * tol / eps) / (h * h)
    bound_grad = (1.0 + tol / eps) / (h * h)
    return bound_u, bound_grad


@dataclass
class ConditioningReport:
    eps: float
    h: float
    degree: int
    problem: int
    n_dofs: int
    u_norm: float
    div_norm: float
    fh_norm: float
    est1: Optional[float] = None
    est2: Optional[float] = None
    est3: Optional[float] = None
    lambda_min: Optional[float] = None
    lambda_max: Optional[float] = None
    kappa: Optional[float] = None
    kappa_eff: Optional[float] = None
    flags: list = field(default_factory=list)

    def as_dict(self):
        return asdict(self)


def condition_report(eps, h, degree, problem, K, D, M, b, c, fh, eigen=None) -> ConditioningReport:
    """Collect every conditioning quantity for one solved system ``(K + D/eps) c = b``."""
    u = l2_norm(M, c)
    dv = div_norm(D, c)
    rep = ConditioningReport(eps, h, degree, problem, len(c), u, dv, fh)
    try:
        rep.est1, rep.est2, rep.est3 = estimates(eps, h, u, dv, fh)
    except DegenerateSolution:
        rep.est1 = (1.0 + 1.0 / eps) / (h * h)
        rep.flags.append("degenerate")
    if eigen is not None:
        rep.lambda_min = eigen.lambda_min
        rep.lambda_max = eigen.lambda_max
        rep.kappa = kappa(eigen)
        if "degenerate" not in rep.flags:
            rep.kappa_eff = kappa_eff(eigen.lambda_min, c, b)
    return rep
