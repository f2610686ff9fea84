"""P1 finite-element operators on triangle meshes.

Consistent mass uses the exact local block (area/12)*[[2,1,1],[1,2,1],
[1,1,2]]; the lumping switch replaces it by the row-sum diagonal
(area/3 per vertex). Stiffness entries are coeff*area*(grad_i . grad_j)
with the constant P1 gradients. The chemotaxis vector assembles

    r_i = sum_e chibar(e) * area(e) * (grad s_h)|_e . grad phi_i

with chibar the vertex average of the nodal sensitivity; after
integrating the no-flux taxis term by parts this is exactly the
contribution the w-equation right-hand side receives (with + sign:
for chi > 0 the top predator drifts up the attractant gradient).
Entries of r sum to zero, so taxis moves mass without creating it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import dynamics, sparse_la
from ._kernels import taxis_rhs as _taxis_backend
from .dynamics import FieldState, Params
from .mesh import TriMesh, build_rect_mesh
from .sparse_la import SparseMatrix, from_coo, solve_cg

__all__ = [
    "AssembledOperators",
    "assemble_mass",
    "assemble_stiffness",
    "assemble_chemotaxis_rhs",
    "build_operators",
    "mms_study",
]

_LOCAL_MASS = np.array([[2.0, 1.0, 1.0], [1.0, 2.0, 1.0], [1.0, 1.0, 2.0]]) / 12.0


@dataclass(frozen=True)
class AssembledOperators:
    """Mesh plus the assembled mass and stiffness matrices.

    lumped_mass holds the row sums of the consistent mass matrix, i.e.
    the nodal quadrature weights; 1^T M x == lumped_mass . x.
    """

    mesh: TriMesh
    M: SparseMatrix
    S: SparseMatrix
    lumped_mass: np.ndarray


def _coo_from_blocks(mesh: TriMesh, blocks: np.ndarray) -> SparseMatrix:
    """Scatter (ne, 3, 3) local blocks into CSR."""
    tri = mesh.elements.astype(np.int64)
    rows = np.repeat(tri, 3, axis=1).ravel()
    cols = np.tile(tri, (1, 3)).ravel()
    return from_coo(mesh.n_nodes, mesh.n_nodes, rows, cols, blocks.ravel())


def assemble_mass(mesh: TriMesh, lumped: bool = False) -> SparseMatrix:
    """Consistent P1 mass matrix, or its row-sum lumped diagonal."""
    if lumped:
        tri = mesh.elements.astype(np.int64).ravel()
        vals = np.repeat(mesh.area / 3.0, 3)
        diag = np.bincount(tri, weights=vals, minlength=mesh.n_nodes)
        n = mesh.n_nodes
        idx = np.arange(n, dtype=np.int64)
        return from_coo(n, n, idx, idx, diag)
    blocks = mesh.area[:, None, None] * _LOCAL_MASS[None, :, :]
    return _coo_from_blocks(mesh, blocks)


def assemble_stiffness(mesh: TriMesh, coeff=None) -> SparseMatrix:
    """Stiffness matrix with an optional piecewise-constant coefficient.

    coeff is a per-element array (or None for 1). Zero-valued couplings
    stay in the pattern so all operators share the mesh adjacency.
    """
    if coeff is None:
        w = mesh.area
    else:
        coeff = np.asarray(coeff, dtype=float)
        if coeff.shape != (mesh.n_elements,):
            raise ValueError(
                f"coefficient shape {coeff.shape} != ({mesh.n_elements},)"
            )
        w = mesh.area * coeff
    gx, gy = mesh.grad_x, mesh.grad_y
    blocks = w[:, None, None] * (
        gx[:, :, None] * gx[:, None, :] + gy[:, :, None] * gy[:, None, :]
    )
    return _coo_from_blocks(mesh, blocks)


def assemble_chemotaxis_rhs(mesh: TriMesh, p: Params, state: FieldState) -> np.ndarray:
    """Taxis vector r for the active model (1: chi1 toward v; 2: chi2 toward u)."""
    if state.n != mesh.n_nodes:
        raise ValueError(f"state has {state.n} nodes, mesh has {mesh.n_nodes}")
    if p.model_id == 1:
        chi = dynamics.chi1(p, state.v, state.w)
        s = state.v
    else:
        chi = dynamics.chi2(p, state.u, state.w)
        s = state.u
    return _taxis_backend(
        mesh.elements,
        mesh.area,
        mesh.grad_x,
        mesh.grad_y,
        np.ascontiguousarray(chi, dtype=float),
        np.ascontiguousarray(s, dtype=float),
        mesh.n_nodes,
    )


def build_operators(mesh: TriMesh, lumped: bool = False) -> AssembledOperators:
    m = assemble_mass(mesh, lumped=lumped)
    s = assemble_stiffness(mesh)
    ones = np.ones(mesh.n_nodes)
    return AssembledOperators(mesh=mesh, M=m, S=s, lumped_mass=m.matvec(ones))


def mms_study(
    levels: int = 3, nx0: int = 16, mu: float = 1.0, tol: float = 1e-12
) -> list[dict]:
    """Convergence study for -laplace(u) + mu*u = f on [-1,1]^2.

    The reference solution u* = cos(pi x) cos(pi y) satisfies the
    natural no-flux condition; f = (2 pi^2 + mu) u* is loaded by nodal
    interpolation. Returns one record per level with the nodal-L2 error
    and the observed order against the previous level.
    """
    if levels < 1:
        raise ValueError("levels must be >= 1")
    out: list[dict] = []
    prev_err = None
    for lvl in range(levels):
        nx = nx0 * (2**lvl)
        m = build_rect_mesh(nx, nx)
        mass = assemble_mass(m)
        stiff = assemble_stiffness(m)
        x, y = m.nodes[:, 0], m.nodes[:, 1]
        exact = np.cos(np.pi * x) * np.cos(np.pi * y)
        f = (2.0 * np.pi**2 + mu) * exact
        a = stiff.with_data(stiff.data + mu * mass.data)
        b = mass.matvec(f)
        uh, report = solve_cg(a, b, tol=tol)
        if not report.converged:
            raise RuntimeError(f"MMS solve failed at nx={nx}: {report}")
        e = uh - exact
        err = float(np.sqrt(e @ mass.matvec(e)))
        rec = {"nx": nx, "h": m.h, "l2_error": err}
        rec["order"] = float(np.log2(prev_err / err)) if prev_err else None
        prev_err = err
        out.append(rec)
    return out
