"""
Meshes, bases and quadrature
============================

A tour of the geometric building blocks: the structured triangle mesh of
the unit square, the P1/P2 Lagrange bases and the triangle rules.
"""
from math import factorial

import numpy as np

from penstokes.assembly import build_dof_map
from penstokes.element import eval_basis, quadrature
from penstokes.mesh import build_mesh

# every cell of the n x n grid is split along its lower-left to
# upper-right diagonal
mesh = build_mesh(8)
print(f"n=8: h={mesh.h}, {mesh.n_vertices} vertices, "
      f"{mesh.n_triangles} triangles, {mesh.n_edges} edges")
print("total area:", mesh.signed_areas().sum())

# velocity DOFs vanish on the boundary: 2 (n-1)^2 for P1, 2 (2n-1)^2 for P2
for degree in (1, 2):
    print(f"P{degree} DOFs at n=8:", build_dof_map(mesh, degree).n_dofs)

# P2 basis at the centroid: vertex functions -1/9, edge functions 4/9
vals, _ = eval_basis(2, (1 / 3, 1 / 3))
print("P2 at the centroid:", np.round(vals, 6))

# each rule integrates monomials x^a y^b exactly up to its degree
q = quadrature(5)
x, y = q.points.T
worst = max(abs(q.weights @ (x ** a * y ** b) - factorial(a) * factorial(b) / factorial(a + b + 2))
            for a in range(6) for b in range(6 - a))
print(f"degree-5 rule: {len(q)} points, worst monomial error {worst:.1e}")
