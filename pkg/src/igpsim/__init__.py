"""Intraguild-predation reaction-diffusion-taxis simulator.

Three interacting species on a rectangle: a logistic resource u, an
intermediate consumer v feeding on u, and a top predator w feeding on v
while also competing with it for u's habitat through directed movement.
Two dispersal models are supported: the top predator either climbs
gradients of its prey v with sensitivity e1*w - e2*v (model 1) or
climbs gradients of the shared resource u with sensitivity q*u*w
(model 2). The package provides linear triangular finite elements,
semi-implicit time stepping, closed-form equilibria with eigenvalue
classification, and a small CLI (``igpsim``).
"""

from ._kernels import BACKEND
from .dynamics import FieldState, Params, reaction
from .equilibria import compute_equilibria, scan_table1
from .fem import build_operators, mms_study
from .mesh import TriMesh, build_rect_mesh
from .sparse_la import SolverReport, SparseMatrix, solve_bicgstab, solve_cg
from .stepper import RunResult, TimeGrid, run

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "FieldState",
    "Params",
    "reaction",
    "compute_equilibria",
    "scan_table1",
    "build_operators",
    "mms_study",
    "TriMesh",
    "build_rect_mesh",
    "SolverReport",
    "SparseMatrix",
    "solve_bicgstab",
    "solve_cg",
    "RunResult",
    "TimeGrid",
    "run",
    "__version__",
]
