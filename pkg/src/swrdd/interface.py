"""
Global interface problem ``g = R(g)``, and ``g = L g + d`` for linear potentials.

Layout of ``g``: slots ``(r_1, l_2, r_2, l_3, ..., r_{N-1}, l_N)``, each a run
of ``N_T`` values.  Subdomain ``j`` reads its own slots ``l_j``/``r_j`` and
writes the neighbour slots ``r_{j-1}`` (from its left end) and ``l_{j+1}``
(from its right end).

For a time independent potential every block of ``L`` is lower triangular
Toeplitz, so it is stored by its first column, obtained from one impulse
response per interface end of every subdomain.
"""

import csv
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

from .errors import InnerNotConverged, UnsupportedPotential
from .linalg import LinOp, bicgstab, gmres
from .potentials import STATIC
from .subdomain import FluxSeries, SubdomainProblem, solve_subdomain


@dataclass(frozen=True)
class InterfaceLayout:
    n_sub: int
    n_steps: int

    @property
    def n_slots(self):
        return 2 * self.n_sub - 2

    @property
    def size(self):
        return self.n_slots * self.n_steps

    def slot_r(self, j):
        if not 1 <= j <= self.n_sub - 1:
            raise IndexError("subdomain %d has no right interface" % j)
        return 2 * (j - 1)

    def slot_l(self, j):
        if not 2 <= j <= self.n_sub:
            raise IndexError("subdomain %d has no left interface" % j)
        return 2 * j - 3

    def span(self, slot):
        return slice(slot * self.n_steps, (slot + 1) * self.n_steps)

    def owner(self, slot):
        """(subdomain, side) owning ``slot``; side is 'l' or 'r'."""
        return (slot // 2 + 1, "r") if slot % 2 == 0 else ((slot + 3) // 2, "l")

    def scatter(self, g) -> List[FluxSeries]:
        """Split ``g`` into the incoming flux series of every subdomain."""
        g = np.asarray(g)
        if g.shape != (self.size,):
            raise ValueError("interface vector has size %s, expected %d" % (g.shape, self.size))
        out = []
        for j in range(1, self.n_sub + 1):
            fs = FluxSeries.zeros(self.n_steps)
            if j >= 2:
                fs.l[:] = g[self.span(self.slot_l(j))]
            if j <= self.n_sub - 1:
                fs.r[:] = g[self.span(self.slot_r(j))]
            out.append(fs)
        return out

    def pack(self, fluxes: List[FluxSeries]):
        """Inverse of :meth:`scatter`."""
        g = np.zeros(self.size, dtype=complex)
        for j, fs in enumerate(fluxes, start=1):
            if j >= 2:
                g[self.span(self.slot_l(j))] = fs.l
            if j <= self.n_sub - 1:
                g[self.span(self.slot_r(j))] = fs.r
        return g

    def gather(self, outgoing: List[FluxSeries]):
        """Route outgoing fluxes to the neighbours' slots."""
        g = np.zeros(self.size, dtype=complex)
        for j, fs in enumerate(outgoing, start=1):
            if j >= 2:
                g[self.span(self.slot_r(j - 1))] = fs.l
            if j <= self.n_sub - 1:
                g[self.span(self.slot_l(j + 1))] = fs.r
        return g


class Decomposition:
    """Subdomain problems plus restricted initial data; owns the sweep fan-out."""

    def __init__(self, problems: List[SubdomainProblem], u0s, threads=1):
        self.problems = problems
        self.u0s = [np.asarray(u, dtype=complex) for u in u0s]
        self.layout = InterfaceLayout(len(problems), problems[0].n_steps)
        self.threads = max(1, int(threads))
        self.timings: Dict[str, float] = {}
        self.sweeps = 0

    @property
    def n_sub(self):
        return len(self.problems)

    @property
    def n_steps(self):
        return self.layout.n_steps

    def _tick(self, key, t0):
        self.timings[key] = self.timings.get(key, 0.0) + time.perf_counter() - t0

    def map(self, fn, items):
        """Apply ``fn`` to ``items`` (possibly concurrently), results in input order."""
        items = list(items)
        if self.threads == 1 or len(items) == 1:
            return [fn(*it) for it in items]
        with ThreadPoolExecutor(max_workers=min(self.threads, len(items))) as ex:
            return list(ex.map(lambda it: fn(*it), items))

    def sweep(self, g, zero_initial=False):
        """Solve every subdomain with incoming fluxes taken from ``g``."""
        t0 = time.perf_counter()
        fluxes = self.layout.scatter(g)
        u0s = [np.zeros_like(u) for u in self.u0s] if zero_initial else self.u0s
        res = self.map(solve_subdomain, zip(self.problems, fluxes, u0s))
        self.sweeps += 1
        self._tick("subdomain_solves", t0)
        return res

    def potential_kind(self):
        return self.problems[0].potential.kind

    @property
    def solve_counts(self):
        return [p.solve_count for p in self.problems]


def apply_R(g, dd: Decomposition):
    """One SWR sweep: ``g -> R(g)``."""
    if dd.layout.size == 0:
        return np.zeros(0, dtype=complex)
    return dd.layout.gather([r.flux_out for r in dd.sweep(g)])


def build_d(dd: Decomposition):
    """``d = R(0)``: one solve per subdomain."""
    return apply_R(np.zeros(dd.layout.size, dtype=complex), dd)


@dataclass
class ToeplitzBlock:
    """Lower triangular Toeplitz matrix given by its first column."""

    first_col: np.ndarray

    def matvec(self, x):
        return np.convolve(self.first_col, x)[: self.first_col.shape[0]]

    def to_dense(self):
        c = self.first_col
        n = c.shape[0]
        idx = np.arange(n)
        diff = idx[:, None] - idx[None, :]
        out = np.where(diff >= 0, c[np.clip(diff, 0, n - 1)], 0)
        return out.astype(complex)


# block q of subdomain j: source slot side, destination (neighbour, side)
_BLOCK_SRC = {1: "l", 2: "r", 3: "l", 4: "r"}


@dataclass
class InterfaceMatrix:
    layout: InterfaceLayout
    blocks: Dict[Tuple[int, int], ToeplitzBlock] = field(default_factory=dict)

    def src_slot(self, j, q):
        return self.layout.slot_l(j) if _BLOCK_SRC[q] == "l" else self.layout.slot_r(j)

    def dst_slot(self, j, q):
        return self.layout.slot_r(j - 1) if q in (1, 2) else self.layout.slot_l(j + 1)

    def to_dense(self):
        lay = self.layout
        A = np.zeros((lay.size, lay.size), dtype=complex)
        for (j, q), blk in sorted(self.blocks.items()):
            A[lay.span(self.dst_slot(j, q)), lay.span(self.src_slot(j, q))] += blk.to_dense()
        return A


def probe(dd: Decomposition, j, side, step=1):
    """Response of subdomain ``j`` (zero initial data) to a unit flux at ``step``.

    ``side`` is 'l' or 'r'.  Returns the outgoing :class:`FluxSeries`.
    """
    prob = dd.problems[j - 1]
    fs = FluxSeries.zeros(dd.n_steps)
    (fs.l if side == "l" else fs.r)[step - 1] = 1.0
    return solve_subdomain(prob, fs, np.zeros_like(dd.u0s[j - 1])).flux_out


def build_L(dd: Decomposition) -> InterfaceMatrix:
    """First columns of all blocks by impulse probing (static potentials only).

    With zero initial data the affine part vanishes, so each impulse
    response is directly a first column.  Interior subdomains need two
    solves, the extreme ones a single solve.
    """
    for p in dd.problems:
        if p.potential.kind != STATIC:
            raise UnsupportedPotential("the interface matrix can only be probed for a "
                                       "time independent linear potential")
    t0 = time.perf_counter()
    jobs = []
    for j, p in enumerate(dd.problems, start=1):
        if p.has_left:
            jobs.append((j, "l"))
        if p.has_right:
            jobs.append((j, "r"))
    outs = dd.map(lambda j, side: probe(dd, j, side), jobs)
    L = InterfaceMatrix(dd.layout)
    for (j, side), out in zip(jobs, outs):
        p = dd.problems[j - 1]
        q_left, q_right = (1, 3) if side == "l" else (2, 4)
        if p.has_left:
            L.blocks[(j, q_left)] = ToeplitzBlock(out.l.copy())
        if p.has_right:
            L.blocks[(j, q_right)] = ToeplitzBlock(out.r.copy())
    dd._tick("build_L", t0)
    return L


def apply_L(L: InterfaceMatrix, g):
    """Blockwise causal convolution ``y = L g``."""
    lay = L.layout
    g = np.asarray(g)
    if g.shape != (lay.size,):
        raise ValueError("layout mismatch")
    y = np.zeros(lay.size, dtype=complex)
    for (j, q) in sorted(L.blocks):
        blk = L.blocks[(j, q)]
        y[lay.span(L.dst_slot(j, q))] += blk.matvec(g[lay.span(L.src_slot(j, q))])
    return y


def apply_I_minus_L_matfree(g, dd: Decomposition, d):
    """``(I - L) g`` evaluated as ``g - R(g) + d`` (linear potentials)."""
    return g - apply_R(g, dd) + d


def dump_L(L: InterfaceMatrix, directory):
    """One CSV per block: step index, real and imaginary part of the first column."""
    os.makedirs(directory, exist_ok=True)
    paths = []
    for (j, q) in sorted(L.blocks):
        path = os.path.join(directory, "X_%d_%d.csv" % (j, q))
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["step", "re", "im"])
            for n, val in enumerate(L.blocks[(j, q)].first_col, start=1):
                w.writerow([n, "%.17g" % val.real, "%.17g" % val.imag])
        paths.append(path)
    return paths


@dataclass
class Preconditioner:
    """``P = I - L0`` with ``L0`` probed for the zero potential."""

    L0: InterfaceMatrix
    method: str = "gmres"
    tol: float = 1e-12
    maxit: int = 2000
    restart: int = 30
    d0: Optional[np.ndarray] = None
    applications: int = 0
    inner_iterations: int = 0
    seconds: float = 0.0

    @property
    def operator(self):
        L0 = self.L0
        return LinOp(lambda x: x - apply_L(L0, x), L0.layout.size)


def build_preconditioner(dd_zero: Decomposition, method="gmres", tol=1e-12, maxit=2000,
                         restart=30) -> Preconditioner:
    for p in dd_zero.problems:
        if p.potential.kind != STATIC or p.potential.name != "zero":
            raise UnsupportedPotential("the preconditioner must be built with the zero potential")
    return Preconditioner(build_L(dd_zero), method, tol, maxit, restart)


def precond_apply(P: Preconditioner, y):
    """Solve ``(I - L0) x = y`` from the zero vector."""
    t0 = time.perf_counter()
    y = np.asarray(y, dtype=complex)
    if P.method == "gmres":
        x, rep = gmres(P.operator, y, tol=P.tol, restart=P.restart, maxit=P.maxit)
    elif P.method == "bicgstab":
        x, rep = bicgstab(P.operator, y, tol=P.tol, maxit=P.maxit)
    else:
        raise ValueError("unknown preconditioner solver %r" % P.method)
    P.applications += 1
    P.inner_iterations += rep.iterations
    P.seconds += time.perf_counter() - t0
    if not rep.converged:
        raise InnerNotConverged("preconditioner solve stalled after %d iterations" % rep.iterations,
                                rep)
    return x
