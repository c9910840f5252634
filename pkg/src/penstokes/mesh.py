"""Uniform right-triangle meshes of the unit square.

Every square cell of an ``n x n`` grid is cut along its lower-left to
upper-right diagonal. Vertex ``(i, j)`` sits at ``(i/n, j/n)`` and has
index ``j*(n+1) + i``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class StructuredMesh:
    n: int
    vertices: np.ndarray = field(repr=False)
    triangles: np.ndarray = field(repr=False)
    edges: np.ndarray = field(repr=False)
    boundary_vertex: np.ndarray = field(repr=False)
    boundary_edge: np.ndarray = field(repr=False)
    # edge index of each triangle side: columns are sides (0,1), (1,2), (2,0)
    triangle_edges: np.ndarray = field(repr=False)

    @property
    def h(self) -> float:
        return 1.0 / self.n

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_triangles(self) -> int:
        return len(self.triangles)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    def vertex_lattice(self) -> np.ndarray:
        """Integer grid coordinates ``(i, j)`` of every vertex."""
        idx = np.arange(self.n_vertices)
        return np.column_stack([idx % (self.n + 1), idx // (self.n + 1)])

    def signed_areas(self) -> np.ndarray:
        p = self.vertices[self.triangles]
        e1 = p[:, 1] - p[:, 0]
        e2 = p[:, 2] - p[:, 0]
        return 0.5 * (e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])


def build_mesh(n: int) -> StructuredMesh:
    if int(n) != n or n < 1:
        raise ValueError(f"mesh needs n >= 1 subdivisions, got {n!r}")
    n = int(n)

    i, j = np.meshgrid(np.arange(n + 1), np.arange(n + 1))
    i = i.ravel()
    j = j.ravel()
    vertices = np.column_stack([i / n, j / n])
    boundary_vertex = (i == 0) | (i == n) | (j == 0) | (j == n)

    ci, cj = np.meshgrid(np.arange(n), np.arange(n))
    ci = ci.ravel()
    cj = cj.ravel()
    ll = cj * (n + 1) + ci
    lr = ll + 1
    ur = ll + n + 2
    ul = ll + n + 1
    lower = np.column_stack([ll, lr, ur])
    upper = np.column_stack([ll, ur, ul])
    triangles = np.empty((2 * n * n, 3), dtype=np.int64)
    triangles[0::2] = lower
    triangles[1::2] = upper

    sides = np.concatenate([triangles[:, [0, 1]], triangles[:, [1, 2]], triangles[:, [2, 0]]])
    sides.sort(axis=1)
    edges, inverse = np.unique(sides, axis=0, return_inverse=True)
    inverse = inverse.ravel()
    nt = len(triangles)
    triangle_edges = np.column_stack([inverse[:nt], inverse[nt:2 * nt], inverse[2 * nt:]])

    # midpoint test in doubled lattice coordinates; a diagonal joining two
    # boundary vertices in a corner cell is still an interior edge
    mi = i[edges[:, 0]] + i[edges[:, 1]]
    mj = j[edges[:, 0]] + j[edges[:, 1]]
    boundary_edge = (mi == 0) | (mi == 2 * n) | (mj == 0) | (mj == 2 * n)

    arrays = (vertices, triangles, edges, boundary_vertex, boundary_edge, triangle_edges)
    for a in arrays:
        a.setflags(write=False)
    return StructuredMesh(n, *arrays)


def refine_once(mesh: StructuredMesh) -> StructuredMesh:
    """Mesh with half the width of ``mesh``."""
    return build_mesh(2 * mesh.n)


def write_mesh(mesh: StructuredMesh, path) -> None:
    """Plain-text dump: vertex lines ``x y`` then triangle lines ``i j k`` (0-based)."""
    with open(path, "w") as fh:
        fh.write(f"{mesh.n_vertices} {mesh.n_triangles}\n")
        for x, y in mesh.vertices:
            fh.write(f"{float(x)!r} {float(y)!r}\n")
        for a, b, c in mesh.triangles:
            fh.write(f"{a} {b} {c}\n")
