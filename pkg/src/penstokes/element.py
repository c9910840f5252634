"""Lagrange P1/P2 bases and quadrature on the reference triangle.

The reference triangle has vertices (0, 0), (1, 0), (0, 1) and barycentric
coordinates ``l0 = 1 - x - y``, ``l1 = x``, ``l2 = y``. P2 local nodes are
the three vertices followed by the midpoints of sides (0,1), (1,2), (2,0).
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import roots_jacobi, roots_legendre

# d(l0, l1, l2)/d(x, y)
_DLAMBDA = np.array([[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]])
_P2_SIDES = ((0, 1), (1, 2), (2, 0))


@dataclass(frozen=True)
class ReferenceElement:
    degree: int

    @property
    def n_nodes(self) -> int:
        return 3 if self.degree == 1 else 6

    def nodes(self) -> np.ndarray:
        """Reference coordinates of the local nodes."""
        verts = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
        if self.degree == 1:
            return verts
        mids = [(verts[a] + verts[b]) / 2 for a, b in _P2_SIDES]
        return np.vstack([verts, mids])

    def eval(self, points):
        return eval_basis(self.degree, points)


def _check_degree(degree):
    if degree not in (1, 2):
        raise ValueError(f"unsupported element degree {degree!r}; expected 1 or 2")


def eval_basis(degree: int, points):
    """Values and reference gradients of the scalar basis.

    ``points`` is a single ``(x, y)`` pair or an ``(q, 2)`` array. Returns
    ``values`` of shape ``(q, nb)`` and ``grads`` of shape ``(q, nb, 2)``
    (leading axis dropped for a single point).
    """
    _check_degree(degree)
    pts = np.asarray(points, dtype=float)
    single = pts.ndim == 1
    pts = np.atleast_2d(pts)
    x, y = pts[:, 0], pts[:, 1]
    lam = np.column_stack([1.0 - x - y, x, y])
    q = len(pts)

    if degree == 1:
        values = lam
        grads = np.broadcast_to(_DLAMBDA, (q, 3, 2)).copy()
    else:
        values = np.empty((q, 6))
        grads = np.empty((q, 6, 2))
        for a in range(3):
            values[:, a] = lam[:, a] * (2 * lam[:, a] - 1)
            grads[:, a] = (4 * lam[:, a] - 1)[:, None] * _DLAMBDA[a]
        for k, (a, b) in enumerate(_P2_SIDES):
            values[:, 3 + k] = 4 * lam[:, a] * lam[:, b]
            grads[:, 3 + k] = 4 * (lam[:, b, None] * _DLAMBDA[a] + lam[:, a, None] * _DLAMBDA[b])

    if single:
        return values[0], grads[0]
    return values, grads


@dataclass(frozen=True)
class QuadratureRule:
    """Rule on the reference triangle; weights sum to its area 1/2."""

    barycentric: np.ndarray
    weights: np.ndarray
    degree: int

    @property
    def points(self) -> np.ndarray:
        """Cartesian reference coordinates, ``(q, 2)``."""
        return self.barycentric[:, 1:]

    def __len__(self):
        return len(self.weights)


def _conical_product(m: int):
    # Duffy map x = u, y = v (1 - u); Gauss-Jacobi absorbs the (1 - u) Jacobian
    xi, wj = roots_jacobi(m, 1.0, 0.0)
    eta, wl = roots_legendre(m)
    u = (1 + xi) / 2
    v = (1 + eta) / 2
    U, V = np.meshgrid(u, v, indexing="ij")
    W = np.outer(wj / 4, wl / 2)
    x = U.ravel()
    y = (V * (1 - U)).ravel()
    return np.column_stack([x, y]), W.ravel()


def _radon7():
    r = np.sqrt(15.0)
    a, b = (6 - r) / 21, (9 + 2 * r) / 21
    c, d = (6 + r) / 21, (9 - 2 * r) / 21
    pts = np.array([[1 / 3, 1 / 3], [a, a], [b, a], [a, b], [c, c], [d, c], [c, d]])
    w = np.array([9 / 80] + [(155 - r) / 2400] * 3 + [(155 + r) / 2400] * 3)
    return pts, w


@lru_cache(maxsize=None)
def quadrature(degree: int) -> QuadratureRule:
    """Positive interior rule integrating total degree ``degree`` exactly.

    Degrees 1, 2 and 5 are the centroid, the 3-point interior rule and the
    7-point Radon rule. Other degrees use a collapsed Gauss-Jacobi x
    Gauss-Legendre product with ``ceil((degree + 1) / 2)`` points per
    direction.
    """
    if int(degree) != degree or degree < 1:
        raise ValueError(f"unsupported quadrature degree {degree!r}")
    degree = int(degree)
    if degree == 1:
        pts = np.array([[1 / 3, 1 / 3]])
        w = np.array([0.5])
    elif degree == 2:
        pts = np.array([[1 / 6, 1 / 6], [2 / 3, 1 / 6], [1 / 6, 2 / 3]])
        w = np.full(3, 1 / 6)
    elif degree == 5:
        pts, w = _radon7()
    else:
        pts, w = _conical_product((degree + 2) // 2)
    bary = np.column_stack([1 - pts[:, 0] - pts[:, 1], pts])
    bary.setflags(write=False)
    w.setflags(write=False)
    return QuadratureRule(bary, w, degree)


def matrix_quadrature_degree(element_degree: int) -> int:
    """Smallest degree integrating the element's gradient and mass products exactly."""
    _check_degree(element_degree)
    return 2 * element_degree
