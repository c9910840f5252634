"""Sparse assembly of the penalized vector-Laplacian system.

Scalar nodes live on the lattice of the once-refined grid: P1 node ``(i, j)``
sits at lattice point ``(i, j)`` of an ``(n+1) x (n+1)`` lattice, P2 nodes at
``(I, J)`` of a ``(2n+1) x (2n+1)`` lattice (vertices at even coordinates,
edge midpoints elsewhere). Global node ``J * side + I`` keeps the matrix
bandwidth O(n). Vector DOFs are interleaved node-major: the x and y DOFs of
interior node ``k`` are ``2k`` and ``2k + 1``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.io
import scipy.sparse as sp

from .element import QuadratureRule, eval_basis, matrix_quadrature_degree, quadrature
from .mesh import StructuredMesh


class InfeasibleDiscretization(ValueError):
    """The mesh has no interior nodes for the requested element."""


@dataclass(frozen=True)
class DofMap:
    degree: int
    n: int
    side: int  # lattice points per direction
    node_coords: np.ndarray = field(repr=False)  # (n_nodes, 2)
    boundary_node: np.ndarray = field(repr=False)
    node_dof: np.ndarray = field(repr=False)  # interior index per node, -1 on the boundary
    cell_nodes: np.ndarray = field(repr=False)  # (n_triangles, 3 or 6) global scalar nodes
    dirichlet: bool = True

    @property
    def n_nodes(self) -> int:
        return len(self.node_coords)

    @property
    def n_interior(self) -> int:
        return int(self.node_dof.max()) + 1

    @property
    def n_dofs(self) -> int:
        return 2 * self.n_interior

    def dof(self, component: int, node) -> np.ndarray:
        """Global DOF of ``component`` (0 = x, 1 = y) at scalar ``node``; -1 if constrained."""
        d = self.node_dof[node]
        return np.where(d >= 0, 2 * d + component, -1)

    def cell_dofs(self) -> np.ndarray:
        """``(n_triangles, 2 * nb)`` vector DOFs, local order ``(node a, component c) -> 2a + c``."""
        d = self.node_dof[self.cell_nodes]
        out = np.empty((d.shape[0], 2 * d.shape[1]), dtype=np.int64)
        out[:, 0::2] = np.where(d >= 0, 2 * d, -1)
        out[:, 1::2] = np.where(d >= 0, 2 * d + 1, -1)
        return out

    def interior_coords(self) -> np.ndarray:
        """Coordinates of the interior nodes in DOF order."""
        order = np.argsort(self.node_dof)
        order = order[self.node_dof[order] >= 0]
        return self.node_coords[order]


def build_dof_map(mesh: StructuredMesh, degree: int, dirichlet: bool = True) -> DofMap:
    """Number the velocity DOFs; ``dirichlet=False`` keeps boundary nodes (for checks)."""
    if degree not in (1, 2):
        raise ValueError(f"unsupported element degree {degree!r}; expected 1 or 2")
    n = mesh.n
    lat = mesh.vertex_lattice()
    if degree == 1:
        side = n + 1
        cell_nodes = mesh.triangles.copy()
    else:
        side = 2 * n + 1
        lat2 = 2 * lat
        vnode = lat2[:, 1] * side + lat2[:, 0]
        mid = lat[mesh.edges[:, 0]] + lat[mesh.edges[:, 1]]
        enode = mid[:, 1] * side + mid[:, 0]
        cell_nodes = np.column_stack([vnode[mesh.triangles], enode[mesh.triangle_edges]])

    I, J = np.meshgrid(np.arange(side), np.arange(side))
    I = I.ravel()
    J = J.ravel()
    coords = np.column_stack([I, J]) / (side - 1)
    boundary = (I == 0) | (I == side - 1) | (J == 0) | (J == side - 1)
    constrained = boundary if dirichlet else np.zeros_like(boundary)
    if constrained.all():
        raise InfeasibleDiscretization(
            f"P{degree} on n={n} has no interior nodes; discretization is infeasible"
        )
    node_dof = np.full(len(coords), -1, dtype=np.int64)
    node_dof[~constrained] = np.arange(int((~constrained).sum()))

    for a in (coords, boundary, node_dof, cell_nodes):
        a.setflags(write=False)
    return DofMap(degree, n, side, coords, boundary, node_dof, cell_nodes, dirichlet)


def _geometry(mesh_or_points):
    if isinstance(mesh_or_points, StructuredMesh):
        p = mesh_or_points.vertices[mesh_or_points.triangles]
    else:
        p = np.asarray(mesh_or_points, dtype=float).reshape(-1, 3, 2)
    jac = np.stack([p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]], axis=2)  # (t, 2, 2), columns = edges
    det = jac[:, 0, 0] * jac[:, 1, 1] - jac[:, 0, 1] * jac[:, 1, 0]
    inv_t = np.linalg.inv(jac).transpose(0, 2, 1)
    return p, det, inv_t


def element_matrices(mesh, degree: int, rule: QuadratureRule):
    """Scalar stiffness, scalar mass and vector div-div element matrices.

    ``mesh`` is a :class:`StructuredMesh` or an array of triangle vertex
    coordinates of shape ``(t, 3, 2)``. Returns ``(k, m, d)`` with shapes ``(t, nb, nb)``, ``(t, nb, nb)`` and
    ``(t, 2nb, 2nb)``; ``d`` uses local order ``2a + c``.
    """
    _, det, inv_t = _geometry(mesh)
    vals, dref = eval_basis(degree, rule.points)
    # physical gradients (t, q, nb, 2)
    g = np.einsum("tij,qnj->tqni", inv_t, dref)
    wq = rule.weights[None, :] * np.abs(det)[:, None]
    k = np.einsum("tq,tqai,tqbi->tab", wq, g, g)
    m = np.einsum("tq,qa,qb->tab", wq, vals, vals)
    nb = vals.shape[1]
    d = np.einsum("tq,tqac,tqbd->tacbd", wq, g, g).reshape(len(det), 2 * nb, 2 * nb)
    return k, m, d


def _vectorize_block(ks: np.ndarray) -> np.ndarray:
    """Scalar element matrix -> component-diagonal vector matrix (order ``2a + c``)."""
    t, nb, _ = ks.shape
    out = np.zeros((t, nb, 2, nb, 2))
    out[:, :, 0, :, 0] = ks
    out[:, :, 1, :, 1] = ks
    return out.reshape(t, 2 * nb, 2 * nb)


def _scatter(local: np.ndarray, dofs: np.ndarray, size: int) -> sp.csr_matrix:
    rows = np.broadcast_to(dofs[:, :, None], local.shape)
    cols = np.broadcast_to(dofs[:, None, :], local.shape)
    keep = (rows >= 0) & (cols >= 0)
    mat = sp.coo_matrix((local[keep], (rows[keep], cols[keep])), shape=(size, size)).tocsr()
    mat.sum_duplicates()
    mat.sort_indices()
    return mat


def assemble_matrices(mesh: StructuredMesh, dof_map: DofMap, rule: QuadratureRule | None = None):
    """Assemble ``(K, D, M)`` as CSR matrices over the DOFs of ``dof_map``.

    All three are scattered from the same index arrays, so they share one
    sparsity pattern (explicit zeros included) and ``K + D/eps`` is formed
    on the data arrays directly.
    """
    need = matrix_quadrature_degree(dof_map.degree)
    if rule is None:
        rule = quadrature(need)
    if rule.degree < need:
        raise ValueError(
            f"quadrature degree {rule.degree} is too low for P{dof_map.degree} matrices (need >= {need})"
        )
    ks, ms, dv = element_matrices(mesh, dof_map.degree, rule)
    dofs = dof_map.cell_dofs()
    N = dof_map.n_dofs
    K = _scatter(_vectorize_block(ks), dofs, N)
    M = _scatter(_vectorize_block(ms), dofs, N)
    D = _scatter(dv, dofs, N)
    return K, D, M


def assemble_load(mesh: StructuredMesh, dof_map: DofMap, f, rule: QuadratureRule | None = None) -> np.ndarray:
    """Load vector ``b_i = (f, phi_i)``.

    ``f(x, y)`` takes coordinate arrays and returns the two components
    ``(fx, fy)``, each broadcastable to the shape of ``x``.
    """
    if rule is None:
        rule = quadrature(8)
    p, det, _ = _geometry(mesh)
    vals, _ = eval_basis(dof_map.degree, rule.points)
    lam = rule.barycentric
    xq = np.einsum("qv,tvk->tqk", lam, p)
    fx, fy = f(xq[..., 0], xq[..., 1])
    fx = np.broadcast_to(fx, xq.shape[:2])
    fy = np.broadcast_to(fy, xq.shape[:2])
    wq = rule.weights[None, :] * np.abs(det)[:, None]
    loc = np.empty((len(det), vals.shape[1], 2))
    loc[:, :, 0] = np.einsum("tq,tq,qa->ta", wq, fx, vals)
    loc[:, :, 1] = np.einsum("tq,tq,qa->ta", wq, fy, vals)
    loc = loc.reshape(len(det), -1)
    dofs = dof_map.cell_dofs()
    keep = dofs >= 0
    return np.bincount(dofs[keep], weights=loc[keep], minlength=dof_map.n_dofs)


def penalty_matrix(K: sp.spmatrix, D: sp.spmatrix, eps: float) -> sp.csr_matrix:
    """``A(eps) = K + D / eps``."""
    if not eps > 0:
        raise ValueError(f"penalty parameter must be positive, got {eps!r}")
    K = sp.csr_matrix(K)
    D = sp.csr_matrix(D)
    if K.shape != D.shape or not (
        np.array_equal(K.indptr, D.indptr) and np.array_equal(K.indices, D.indices)
    ):
        raise ValueError("K and D must share one sparsity pattern")
    return sp.csr_matrix((K.data + D.data / eps, K.indices.copy(), K.indptr.copy()), shape=K.shape)


def write_matrix_market(path, A, comment: str = "") -> None:
    """Symmetric coordinate MatrixMarket file, lower triangle, 1-based."""
    scipy.io.mmwrite(path, sp.coo_matrix(A), comment=comment, field="real", symmetry="symmetric")


def field_l2_norm(mesh: StructuredMesh, f, rule: QuadratureRule | None = None) -> float:
    """``||f||`` of a vector field, integrated with ``rule`` on every triangle."""
    if rule is None:
        rule = quadrature(5)
    p, det, _ = _geometry(mesh)
    xq = np.einsum("qv,tvk->tqk", rule.barycentric, p)
    fx, fy = f(xq[..., 0], xq[..., 1])
    sq = np.broadcast_to(np.asarray(fx) ** 2 + np.asarray(fy) ** 2, xq.shape[:2])
    return float(np.sqrt(np.sum(sq * rule.weights[None, :] * np.abs(det)[:, None])))


@dataclass(frozen=True)
class AssembledSystem:
    """Everything about one (mesh, element, forcing) triple that does not depend on eps."""

    mesh: StructuredMesh
    dof_map: DofMap
    K: sp.csr_matrix = field(repr=False)
    D: sp.csr_matrix = field(repr=False)
    M: sp.csr_matrix = field(repr=False)
    b: np.ndarray = field(repr=False)

    @property
    def h(self) -> float:
        return self.mesh.h

    @property
    def n_dofs(self) -> int:
        return self.dof_map.n_dofs

    def matrix(self, eps: float) -> sp.csr_matrix:
        return penalty_matrix(self.K, self.D, eps)


def assemble_system(mesh: StructuredMesh, degree: int, f, load_rule: QuadratureRule | None = None) -> AssembledSystem:
    dof_map = build_dof_map(mesh, degree)
    K, D, M = assemble_matrices(mesh, dof_map)
    b = assemble_load(mesh, dof_map, f, load_rule)
    return AssembledSystem(mesh, dof_map, K, D, M, b)
