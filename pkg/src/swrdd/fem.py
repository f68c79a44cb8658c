"""P1 finite elements on a uniform 1D mesh."""

from dataclasses import dataclass

import numpy as np

from .linalg import TriDiag


@dataclass(frozen=True)
class SubMesh:
    a: float
    b: float
    n_nodes: int

    def __post_init__(self):
        if self.n_nodes < 2:
            raise ValueError("a mesh needs at least two nodes")
        if not self.b > self.a:
            raise ValueError("mesh endpoints must satisfy a < b")

    @property
    def h(self):
        return (self.b - self.a) / (self.n_nodes - 1)

    @property
    def nodes(self):
        x = self.a + self.h * np.arange(self.n_nodes)
        x[-1] = self.b
        return x


def assemble_mass(mesh: SubMesh) -> TriDiag:
    h = mesh.h
    d = np.full(mesh.n_nodes, 4.0 * h / 6.0)
    d[0] = d[-1] = 2.0 * h / 6.0
    off = np.full(mesh.n_nodes - 1, h / 6.0)
    return TriDiag(off, d, off.copy())


def assemble_stiffness(mesh: SubMesh) -> TriDiag:
    """Matrix of ``int v' phi'`` (positive semidefinite)."""
    h = mesh.h
    d = np.full(mesh.n_nodes, 2.0 / h)
    d[0] = d[-1] = 1.0 / h
    off = np.full(mesh.n_nodes - 1, -1.0 / h)
    return TriDiag(off, d, off.copy())


def assemble_weighted_mass(mesh: SubMesh, w) -> TriDiag:
    """Matrix of ``int w v phi`` with ``w`` interpolated linearly between nodes.

    On an element with end values (w0, w1) the exact integrals of the cubic
    integrands give the local matrix
    ``h/12 * [[3 w0 + w1, w0 + w1], [w0 + w1, w0 + 3 w1]]``.
    """
    w = np.asarray(w)
    if w.shape == ():
        w = np.full(mesh.n_nodes, w)
    if not np.all(np.isfinite(w)):
        raise ValueError("weight samples must be finite")
    h = mesh.h
    w0, w1 = w[:-1], w[1:]
    dtype = np.result_type(w, float)
    d = np.zeros(mesh.n_nodes, dtype=dtype)
    d[:-1] += h * (3.0 * w0 + w1) / 12.0
    d[1:] += h * (w0 + 3.0 * w1) / 12.0
    off = h * (w0 + w1) / 12.0
    return TriDiag(off, d, off.copy())


def load_vector(mass: TriDiag, values) -> np.ndarray:
    """``int F phi_i`` for F given by its nodal interpolant."""
    return mass.matvec(np.asarray(values, dtype=complex))
