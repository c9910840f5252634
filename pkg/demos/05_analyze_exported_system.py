"""
Conditioning of an exported system
==================================

Writes one assembled system to MatrixMarket and runs the standalone
analyzer on it, as one would for a matrix produced by another code.
"""
import tempfile
from pathlib import Path

import numpy as np

from penstokes.assembly import assemble_system, write_matrix_market
from penstokes.cli import main
from penstokes.harness import forcing
from penstokes.mesh import build_mesh

system = assemble_system(build_mesh(16), 2, forcing(1))
with tempfile.TemporaryDirectory() as tmp:
    mtx = Path(tmp) / "A.mtx"
    rhs = Path(tmp) / "b.txt"
    write_matrix_market(mtx, system.matrix(1e-6), comment="P2, n=16, eps=1e-6")
    np.savetxt(rhs, system.b)
    # same as: penstokes analyze --matrix A.mtx --rhs b.txt
    main(["analyze", "--matrix", str(mtx), "--rhs", str(rhs)])
