"""Structured triangulation of an axis-aligned rectangle.

Nodes are numbered row by row from the bottom-left corner (x fastest).
Each grid cell is split along its SW-NE diagonal into two triangles,
listed cell by cell in the same row-major order, lower triangle first.
All triangles are counterclockwise. Node coordinates, connectivity and
the per-element P1 geometry (areas, constant basis gradients) are
precomputed once and frozen.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = ["TriMesh", "build_rect_mesh", "element_geometry"]

Rect = tuple[float, float, float, float]


@dataclass(frozen=True)
class TriMesh:
    """Immutable triangle mesh with cached P1 element geometry.

    nodes          (n, 2) coordinates
    elements       (ne, 3) CCW vertex indices
    boundary_nodes sorted indices of nodes on the rectangle boundary
    h              longest edge over all elements
    area           (ne,) triangle areas
    grad_x, grad_y (ne, 3) components of the constant P1 basis gradients
    """

    nodes: np.ndarray
    elements: np.ndarray
    boundary_nodes: np.ndarray
    h: float
    area: np.ndarray = field(repr=False)
    grad_x: np.ndarray = field(repr=False)
    grad_y: np.ndarray = field(repr=False)

    @property
    def n_nodes(self) -> int:
        return self.nodes.shape[0]

    @property
    def n_elements(self) -> int:
        return self.elements.shape[0]

    @classmethod
    def from_arrays(cls, nodes, elements) -> "TriMesh":
        """Build a mesh from raw coordinate and CCW connectivity arrays.

        Boundary nodes are found as endpoints of edges that belong to a
        single triangle.
        """
        nodes = np.ascontiguousarray(nodes, dtype=float)
        elements = np.ascontiguousarray(elements, dtype=np.int32)
        if nodes.ndim != 2 or nodes.shape[1] != 2:
            raise ValueError(f"nodes must be (n, 2), got {nodes.shape}")
        if elements.ndim != 2 or elements.shape[1] != 3:
            raise ValueError(f"elements must be (ne, 3), got {elements.shape}")
        if elements.min() < 0 or elements.max() >= nodes.shape[0]:
            raise ValueError("element vertex index out of range")

        p1 = nodes[elements[:, 0]]
        p2 = nodes[elements[:, 1]]
        p3 = nodes[elements[:, 2]]
        det = (p2[:, 0] - p1[:, 0]) * (p3[:, 1] - p1[:, 1]) - (
            p3[:, 0] - p1[:, 0]
        ) * (p2[:, 1] - p1[:, 1])
        area = 0.5 * det
        if np.any(area <= 0.0):
            raise ValueError("non-positive triangle area; orientation broken")

        # grad phi_i = (y_j - y_k, x_k - x_j) / (2A) for (i, j, k) cyclic
        inv2a = 1.0 / det
        grad_x = np.column_stack(
            [
                (p2[:, 1] - p3[:, 1]) * inv2a,
                (p3[:, 1] - p1[:, 1]) * inv2a,
                (p1[:, 1] - p2[:, 1]) * inv2a,
            ]
        )
        grad_y = np.column_stack(
            [
                (p3[:, 0] - p2[:, 0]) * inv2a,
                (p1[:, 0] - p3[:, 0]) * inv2a,
                (p2[:, 0] - p1[:, 0]) * inv2a,
            ]
        )

        edge_sq = np.maximum(
            np.maximum(
                ((p2 - p1) ** 2).sum(axis=1),
                ((p3 - p2) ** 2).sum(axis=1),
            ),
            ((p1 - p3) ** 2).sum(axis=1),
        )
        h = float(np.sqrt(edge_sq.max()))

        pairs = np.concatenate(
            [elements[:, [0, 1]], elements[:, [1, 2]], elements[:, [2, 0]]]
        )
        pairs.sort(axis=1)
        _, first, counts = np.unique(
            pairs, axis=0, return_index=True, return_counts=True
        )
        boundary = np.unique(pairs[first[counts == 1]]).astype(np.int32)

        return cls(
            nodes=_freeze(nodes),
            elements=_freeze(elements),
            boundary_nodes=_freeze(boundary),
            h=h,
            area=_freeze(area),
            grad_x=_freeze(grad_x),
            grad_y=_freeze(grad_y),
        )


def _freeze(a: np.ndarray) -> np.ndarray:
    a.flags.writeable = False
    return a


def build_rect_mesh(nx: int, ny: int, rect: Rect = (-1.0, 1.0, -1.0, 1.0)) -> TriMesh:
    """Triangulate [x0,x1] x [y0,y1] with nx-by-ny cells (2*nx*ny triangles)."""
    if nx < 1 or ny < 1:
        raise ValueError(f"cell counts must be positive, got nx={nx}, ny={ny}")
    x0, x1, y0, y1 = map(float, rect)
    if not (x1 > x0 and y1 > y0):
        raise ValueError(f"degenerate rectangle {rect}")

    xs = np.linspace(x0, x1, nx + 1)
    ys = np.linspace(y0, y1, ny + 1)
    X, Y = np.meshgrid(xs, ys)  # row-major: node = iy*(nx+1) + ix
    nodes = np.column_stack([X.ravel(), Y.ravel()])

    elements = np.empty((2 * nx * ny, 3), dtype=np.int32)
    e = 0
    for cy in range(ny):
        for cx in range(nx):
            n00 = cy * (nx + 1) + cx
            n10 = n00 + 1
            n01 = n00 + (nx + 1)
            n11 = n01 + 1
            elements[e] = (n00, n10, n11)      # lower triangle
            elements[e + 1] = (n00, n11, n01)  # upper triangle
            e += 2

    return TriMesh.from_arrays(nodes, elements)


def element_geometry(m: TriMesh, e: int) -> tuple[float, np.ndarray]:
    """Area and (3, 2) P1 basis gradients of element e."""
    if not 0 <= e < m.n_elements:
        raise IndexError(f"element {e} out of range [0, {m.n_elements})")
    grads = np.column_stack([m.grad_x[e], m.grad_y[e]])
    return float(m.area[e]), grads
