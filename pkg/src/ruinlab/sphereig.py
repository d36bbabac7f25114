"""Smallest Dirichlet eigenvalue of the Laplace-Beltrami operator on a geodesic triangle of S^2.

Piecewise-linear finite elements on a geodesically refined mesh: each level
splits every triangle into four through edge midpoints pushed back onto the
sphere.  Element matrices are computed on the flat (chordal) triangles and,
with ``surface_correction``, rescaled by the ratio of spherical to flat area.
The discrete eigenvalue converges like ``h^2``, so the two finest levels are
combined by Richardson extrapolation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from ._validation import ConvergenceError, ValidationError, check_int, check_positive
from .profile import alpha_from_lambda

__all__ = [
    "SphericalTriangle",
    "TriMesh",
    "EigenSolution",
    "tetrahedral_triangle",
    "octant_triangle",
    "initial_mesh",
    "refine",
    "assemble",
    "dirichlet_lambda",
    "derive_alpha",
    "DirichletEigensolver",
    "write_mesh",
    "write_eigenfunction_csv",
]


@dataclass(frozen=True, eq=False)
class SphericalTriangle:
    """Geodesic triangle given by three unit vertices (rows of ``vertices``)."""

    vertices: np.ndarray

    def __post_init__(self):
        V = np.array(self.vertices, dtype=np.float64)
        if V.shape != (3, 3):
            raise ValidationError("a spherical triangle needs three vertices in R^3")
        if np.any(np.abs(np.linalg.norm(V, axis=1) - 1.0) > 1e-14):
            raise ValidationError("vertices must be unit vectors")
        if abs(np.linalg.det(V)) < 1e-12:
            raise ValidationError("degenerate triangle")
        V.setflags(write=False)
        object.__setattr__(self, "vertices", V)

    @property
    def side_lengths(self) -> np.ndarray:
        """Geodesic lengths of sides ``(v0v1, v1v2, v2v0)``."""
        V = self.vertices
        dots = [V[0] @ V[1], V[1] @ V[2], V[2] @ V[0]]
        return np.arccos(np.clip(dots, -1.0, 1.0))

    @property
    def angles(self) -> np.ndarray:
        """Interior angles at ``v0, v1, v2``."""
        a01, a12, a20 = self.side_lengths
        opposite = [a12, a20, a01]
        adjacent = [(a01, a20), (a01, a12), (a12, a20)]
        out = []
        for opp, (b, c) in zip(opposite, adjacent):
            out.append(math.acos((math.cos(opp) - math.cos(b) * math.cos(c)) / (math.sin(b) * math.sin(c))))
        return np.array(out)

    @property
    def area(self) -> float:
        """Spherical excess."""
        return float(self.angles.sum() - math.pi)

    @classmethod
    def equilateral(cls, side: float) -> "SphericalTriangle":
        """Equilateral triangle with geodesic side ``side`` in ``(0, 2*pi/3)``, symmetric about the z-axis."""
        side = check_positive(side, "side")
        if side >= 2.0 * math.pi / 3.0:
            raise ValidationError("equilateral side must be below 2*pi/3")
        h = math.sqrt((2.0 * math.cos(side) + 1.0) / 3.0)
        r = math.sqrt(1.0 - h * h)
        t = 2.0 * math.pi / 3.0 * np.arange(3)
        return cls(np.stack([r * np.cos(t), r * np.sin(t), np.full(3, h)], axis=1))

    def rotated(self, R) -> "SphericalTriangle":
        return SphericalTriangle(self.vertices @ np.asarray(R, dtype=np.float64).T)


def tetrahedral_triangle() -> SphericalTriangle:
    """Triangle cut on S^2 by the cone over a regular tetrahedron at one vertex.

    Vertices are the unit edge directions leaving that vertex, so they are
    pairwise at geodesic distance ``pi/3`` and the corner angles are ``arccos(1/3)``.
    """
    return SphericalTriangle(
        np.array(
            [
                [1.0, 0.0, 0.0],
                [0.5, math.sqrt(3.0) / 2.0, 0.0],
                [0.5, math.sqrt(3.0) / 6.0, math.sqrt(2.0 / 3.0)],
            ]
        )
    )


def octant_triangle() -> SphericalTriangle:
    """The first-octant triangle; its first Dirichlet eigenfunction is ``xyz`` with eigenvalue 12."""
    return SphericalTriangle(np.eye(3))


@dataclass(frozen=True, eq=False)
class TriMesh:
    """Triangulation of a spherical triangle.

    ``side_mask`` has bit ``j`` set for nodes on side ``j`` of the parent
    triangle (side 0 joins vertices 0 and 1, side 1 joins 1 and 2, side 2
    joins 2 and 0); corners carry two bits.
    """

    nodes: np.ndarray = field(repr=False)
    triangles: np.ndarray = field(repr=False)
    side_mask: np.ndarray = field(repr=False)
    level: int = 0

    @property
    def boundary(self) -> np.ndarray:
        return self.side_mask != 0

    @property
    def node_count(self) -> int:
        return len(self.nodes)

    def edges(self) -> np.ndarray:
        T = self.triangles
        E = np.concatenate([T[:, [0, 1]], T[:, [1, 2]], T[:, [2, 0]]])
        return np.unique(np.sort(E, axis=1), axis=0)

    def is_conforming(self) -> bool:
        T = self.triangles
        E = np.sort(np.concatenate([T[:, [0, 1]], T[:, [1, 2]], T[:, [2, 0]]]), axis=1)
        _, counts = np.unique(E, axis=0, return_counts=True)
        return bool(np.all(counts <= 2))

    def max_element_diameter(self) -> float:
        P = self.nodes[self.triangles]
        lengths = np.linalg.norm(P - np.roll(P, -1, axis=1), axis=2)
        return float(lengths.max())


def initial_mesh(tri: SphericalTriangle) -> TriMesh:
    side_mask = np.array([0b101, 0b011, 0b110], dtype=np.uint8)
    return TriMesh(tri.vertices.copy(), np.array([[0, 1, 2]], dtype=np.int64), side_mask, 0)


def refine(mesh: TriMesh) -> TriMesh:
    """Split each triangle into four through normalized edge midpoints."""
    T = mesh.triangles
    m = len(T)
    local = np.concatenate([T[:, [0, 1]], T[:, [1, 2]], T[:, [2, 0]]])
    edges, inverse = np.unique(np.sort(local, axis=1), axis=0, return_inverse=True)
    inverse = inverse.ravel()
    mids = mesh.nodes[edges[:, 0]] + mesh.nodes[edges[:, 1]]
    mids /= np.linalg.norm(mids, axis=1, keepdims=True)
    # a midpoint is on a side only when both endpoints are on that same side
    mid_mask = mesh.side_mask[edges[:, 0]] & mesh.side_mask[edges[:, 1]]

    n = mesh.node_count
    ab = n + inverse[:m]
    bc = n + inverse[m : 2 * m]
    ca = n + inverse[2 * m :]
    a, b, c = T[:, 0], T[:, 1], T[:, 2]
    new_T = np.concatenate(
        [
            np.stack([a, ab, ca], axis=1),
            np.stack([ab, b, bc], axis=1),
            np.stack([ca, bc, c], axis=1),
            np.stack([ab, bc, ca], axis=1),
        ]
    )
    return TriMesh(
        np.vstack([mesh.nodes, mids]),
        new_T,
        np.concatenate([mesh.side_mask, mid_mask]).astype(np.uint8),
        mesh.level + 1,
    )


def _spherical_areas(P: np.ndarray) -> np.ndarray:
    a, b, c = P[:, 0], P[:, 1], P[:, 2]
    triple = np.abs(np.einsum("ij,ij->i", a, np.cross(b, c)))
    denom = 1.0 + np.einsum("ij,ij->i", a, b) + np.einsum("ij,ij->i", b, c) + np.einsum("ij,ij->i", c, a)
    return 2.0 * np.arctan2(triple, denom)


def assemble(mesh: TriMesh, surface_correction: bool = True) -> tuple[sp.csr_matrix, sp.csr_matrix]:
    """P1 stiffness and consistent mass matrices over all nodes."""
    T = mesh.triangles
    P = mesh.nodes[T]
    # edge opposite to each local vertex
    e = [P[:, 2] - P[:, 1], P[:, 0] - P[:, 2], P[:, 1] - P[:, 0]]
    flat = 0.5 * np.linalg.norm(np.cross(e[2], -e[1]), axis=1)
    if np.any(flat <= 1e-300):
        raise ValidationError("degenerate mesh element")
    weight = _spherical_areas(P) / flat if surface_correction else np.ones(len(T))

    rows, cols, kvals, mvals = [], [], [], []
    for i in range(3):
        for j in range(3):
            rows.append(T[:, i])
            cols.append(T[:, j])
            kvals.append(np.einsum("ij,ij->i", e[i], e[j]) / (4.0 * flat) * weight)
            mvals.append(flat * (2.0 if i == j else 1.0) / 12.0 * weight)
    n = mesh.node_count
    r, c = np.concatenate(rows), np.concatenate(cols)
    A = sp.csr_matrix((np.concatenate(kvals), (r, c)), shape=(n, n))
    M = sp.csr_matrix((np.concatenate(mvals), (r, c)), shape=(n, n))

    scale = abs(A).max()
    if abs(A - A.T).max() > 1e-12 * scale or abs(M - M.T).max() > 1e-12 * abs(M).max():
        raise AssertionError("assembled matrices are not symmetric")
    if np.abs(np.asarray(A.sum(axis=1))).max() > 1e-10 * scale:
        raise AssertionError("stiffness matrix does not annihilate constants")
    if np.any(M.diagonal() <= 0):
        raise AssertionError("mass matrix has a nonpositive diagonal")
    return A, M


def _cg_solver(A: sp.csr_matrix, rtol: float):
    diag = A.diagonal()
    jacobi = spla.LinearOperator(A.shape, matvec=lambda r: r / diag, dtype=np.float64)

    def solve(b, x0=None):
        x, info = spla.cg(A, b, x0=x0, rtol=rtol, atol=0.0, M=jacobi, maxiter=20 * A.shape[0] + 100)
        if info != 0:
            raise ConvergenceError("inner CG solve failed", float(np.linalg.norm(b - A @ x)), info)
        return x

    return solve


def _smallest_eigenpair(A: sp.csr_matrix, M: sp.csr_matrix, tol: float, max_iter: int):
    """Inverse iteration (shift 0) for ``A x = lam M x`` with CG inner solves."""
    solve = _cg_solver(A, rtol=min(1e-12, tol * 1e-2))
    x = np.ones(A.shape[0])
    x /= math.sqrt(x @ (M @ x))
    lam_prev = x @ (A @ x)
    for it in range(1, max_iter + 1):
        y = solve(M @ x, x0=x / lam_prev if lam_prev > 0 else None)
        x = y / math.sqrt(y @ (M @ y))
        lam = float(x @ (A @ x))
        if abs(lam - lam_prev) <= tol * abs(lam):
            break
        lam_prev = lam
    else:
        raise ConvergenceError("inverse iteration did not converge", abs(lam - lam_prev), max_iter)
    if x.sum() < 0:
        x = -x
    return lam, x, it


@dataclass(frozen=True, eq=False)
class EigenSolution:
    """First Dirichlet eigenpair on the finest mesh plus refinement history.

    ``level_lambdas[L]`` is the discrete eigenvalue at refinement level ``L``;
    ``convergence_order`` is ``log2`` of the ratio of successive differences
    over the three finest levels (``None`` with fewer than three).
    """

    lam: float
    eigenvector: np.ndarray = field(repr=False)
    level: int
    extrapolated_lambda: float
    level_lambdas: dict = field(default_factory=dict)
    convergence_order: float | None = None
    mesh: TriMesh | None = field(default=None, repr=False)
    iterations: int = 0

    def nodal_values(self) -> np.ndarray:
        """Eigenvector extended by zero to every node of the finest mesh."""
        out = np.zeros(self.mesh.node_count)
        out[~self.mesh.boundary] = self.eigenvector
        return out


def dirichlet_lambda(
    tri: SphericalTriangle,
    levels: int = 6,
    surface_correction: bool = True,
    tol: float = 1e-10,
    max_iter: int = 500,
) -> EigenSolution:
    """Smallest Dirichlet eigenvalue of ``tri`` from ``levels`` uniform refinements.

    Levels 2 through ``levels`` are solved (level 1 has no interior node);
    the result carries the finest-level eigenpair and the Richardson value
    ``(4 lam_L - lam_{L-1}) / 3``.
    """
    levels = check_int(levels, "levels", minimum=3)
    tol = check_positive(tol, "tol")
    mesh = initial_mesh(tri)
    history: dict[int, float] = {}
    lam = vec = None
    iterations = 0
    for level in range(1, levels + 1):
        mesh = refine(mesh)
        if level < 2:
            continue
        A, M = assemble(mesh, surface_correction=surface_correction)
        inner = ~mesh.boundary
        Ai = A[inner][:, inner].tocsr()
        Mi = M[inner][:, inner].tocsr()
        lam, vec, iterations = _smallest_eigenpair(Ai, Mi, tol, max_iter)
        history[level] = lam

    extrapolated = (4.0 * history[levels] - history[levels - 1]) / 3.0
    order = None
    if levels >= 4:
        d1 = history[levels - 1] - history[levels - 2]
        d2 = history[levels] - history[levels - 1]
        if d1 != 0 and d2 != 0 and d1 / d2 > 0:
            order = math.log2(d1 / d2)
    return EigenSolution(
        lam=lam,
        eigenvector=vec,
        level=levels,
        extrapolated_lambda=extrapolated,
        level_lambdas=history,
        convergence_order=order,
        mesh=mesh,
        iterations=iterations,
    )


def derive_alpha(sol: EigenSolution, k: int = 4) -> float:
    """Exponent implied by the extrapolated eigenvalue."""
    return alpha_from_lambda(k, sol.extrapolated_lambda)


TRIANGLES = {"octant": octant_triangle, "tetra": tetrahedral_triangle}


class DirichletEigensolver(BaseEstimator):
    """Estimator-style wrapper: ``fit(triangle)`` computes the first Dirichlet eigenpair.

    ``triangle`` may be a :class:`SphericalTriangle` or one of ``"octant"``, ``"tetra"``.
    """

    def __init__(self, levels=6, surface_correction=True, tol=1e-10):
        self.levels = levels
        self.surface_correction = surface_correction
        self.tol = tol

    def fit(self, X="tetra", y=None):
        tri = X
        if isinstance(X, str):
            if X not in TRIANGLES:
                raise ValidationError(f"unknown triangle {X!r}; expected one of {sorted(TRIANGLES)}")
            tri = TRIANGLES[X]()
        self.triangle_ = tri
        self.solution_ = dirichlet_lambda(tri, self.levels, self.surface_correction, self.tol)
        self.lambda_ = self.solution_.lam
        self.extrapolated_lambda_ = self.solution_.extrapolated_lambda
        self.convergence_order_ = self.solution_.convergence_order
        return self

    def alpha(self, k: int = 4) -> float:
        check_is_fitted(self, "solution_")
        return derive_alpha(self.solution_, k)


def write_mesh(path: str | Path, mesh: TriMesh) -> None:
    """Plain-text mesh: node block ``x y z side_mask`` then element block ``a b c``."""
    lines = ["# ruinlab-schema: 1 mesh", f"level {mesh.level}", f"nodes {mesh.node_count}"]
    lines += [f"{x!r} {y!r} {z!r} {int(m)}" for (x, y, z), m in zip(mesh.nodes.tolist(), mesh.side_mask)]
    lines.append(f"triangles {len(mesh.triangles)}")
    lines += [f"{a} {b} {c}" for a, b, c in mesh.triangles.tolist()]
    Path(path).write_text("\n".join(lines) + "\n")


def read_mesh(path: str | Path) -> TriMesh:
    lines = Path(path).read_text().splitlines()
    if lines[0] != "# ruinlab-schema: 1 mesh":
        raise ValidationError(f"{path}: unsupported mesh header {lines[0]!r}")
    level = int(lines[1].split()[1])
    n = int(lines[2].split()[1])
    node_rows = [ln.split() for ln in lines[3 : 3 + n]]
    nodes = np.array([[float(v) for v in r[:3]] for r in node_rows])
    mask = np.array([int(r[3]) for r in node_rows], dtype=np.uint8)
    m = int(lines[3 + n].split()[1])
    tris = np.array([[int(v) for v in ln.split()] for ln in lines[4 + n : 4 + n + m]], dtype=np.int64)
    return TriMesh(nodes, tris.reshape(-1, 3), mask, level)


def write_eigenfunction_csv(path: str | Path, sol: EigenSolution) -> None:
    from .io import write_csv

    values = sol.nodal_values()
    rows = ((x, y, z, v) for (x, y, z), v in zip(sol.mesh.nodes.tolist(), values.tolist()))
    write_csv(path, "eigenfunction", ["x", "y", "z", "value"], rows)
