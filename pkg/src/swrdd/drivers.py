"""
End-to-end solvers: classical SWR (fixed point or Krylov on ``I - L``), the
explicit interface matrix algorithm, the preconditioned algorithm and the
single domain reference.
"""

import math
import time
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional

import numpy as np

from . import potentials as pot
from .errors import GridMismatch, NotConverged, UnsupportedPotential
from .fem import SubMesh
from .interface import (Decomposition, apply_I_minus_L_matfree, apply_L, apply_R,
                        build_d, build_L, build_preconditioner, precond_apply)
from .linalg import IterReport, LinOp, bicgstab, fixed_point, gmres
from .potentials import DYNAMIC, NONLINEAR, STATIC, Potential
from .subdomain import FluxSeries, SubdomainProblem, solve_subdomain
from .transmission import TransmissionSpec

ALGORITHMS = ("classical_fp", "classical_krylov", "new", "preconditioned", "preconditioned_fp")
KRYLOV = ("gmres", "bicgstab", "fixed_point")


def gaussian(x):
    y = x + 10.0
    return np.exp(-y ** 2 + 20j * y)


def soliton(x):
    y = x + 10.0
    return 2.0 / np.cosh(np.sqrt(2.0) * y) * np.exp(20j * y)


def zero_data(x):
    return np.zeros(np.shape(x), dtype=complex)


INITIAL_DATA = {"gaussian": gaussian, "soliton": soliton, "zero": zero_data}


@dataclass
class RunConfig:
    a0: float = -21.0
    b0: float = 21.0
    n_sub: int = 2
    T: float = 0.5
    dt: float = 1e-3
    dx: float = 1e-2
    potential: str = "harmonic_neg"   # preset name or "expr:<sympy expression>"
    u0: str = "gaussian"
    transmission: TransmissionSpec = field(default_factory=TransmissionSpec)
    algorithm: str = "classical_fp"
    krylov: str = "fixed_point"
    tol: float = 1e-10
    maxit: int = 2000
    restart: int = 30
    g0: str = "zero"
    seed: int = 0
    threads: int = 1
    precond_method: str = "gmres"
    precond_tol: float = 1e-12
    tol_fp: float = 1e-12
    maxit_fp: int = 50
    out_dir: Optional[str] = None

    def __post_init__(self):
        if not self.b0 > self.a0:
            raise ValueError("domain must satisfy a0 < b0")
        for name in ("T", "dt", "dx", "tol"):
            if not getattr(self, name) > 0:
                raise ValueError("%s must be positive" % name)
        if self.n_sub < 1:
            raise ValueError("n_sub must be >= 1")
        if self.algorithm not in ALGORITHMS:
            raise ValueError("unknown algorithm %r" % self.algorithm)
        if self.krylov not in KRYLOV:
            raise ValueError("unknown krylov method %r" % self.krylov)
        if self.g0 not in ("zero", "random"):
            raise ValueError("g0 must be 'zero' or 'random'")
        if self.u0 not in INITIAL_DATA:
            raise ValueError("unknown initial datum %r" % self.u0)

    @property
    def n_steps(self):
        n = int(round(self.T / self.dt))
        if n < 1 or abs(n * self.dt - self.T) > 1e-9 * self.T:
            raise ValueError("T = %g is not a multiple of dt = %g" % (self.T, self.dt))
        return n

    @property
    def cells_per_subdomain(self):
        width = (self.b0 - self.a0) / self.n_sub
        return max(1, int(math.ceil(width / self.dx - 1e-9)))

    @property
    def h(self):
        """Actual mesh size (dx shrunk so every subdomain holds whole cells)."""
        return (self.b0 - self.a0) / (self.n_sub * self.cells_per_subdomain)

    def make_potential(self) -> Potential:
        if self.potential.startswith("expr:"):
            return pot.from_expression(self.potential[5:])
        return pot.by_name(self.potential)


@dataclass
class RunReport:
    algorithm: str
    krylov: str
    iterations: int = 0
    residual_history: List[float] = field(default_factory=list)
    converged: bool = True
    r_applications: int = 0
    subdomain_solves: List[int] = field(default_factory=list)
    precond_applications: int = 0
    precond_inner_iterations: int = 0
    timings: Dict[str, float] = field(default_factory=dict)
    rel_l2_error: Optional[float] = None
    interface_norm: float = 0.0

    def rows(self):
        """(key, value) pairs for report.csv; wall times are kept out for reproducibility."""
        out = [("algorithm", self.algorithm), ("krylov", self.krylov),
               ("iterations", self.iterations), ("converged", int(self.converged)),
               ("r_applications", self.r_applications),
               ("subdomain_solves", " ".join(str(c) for c in self.subdomain_solves)),
               ("precond_applications", self.precond_applications),
               ("precond_inner_iterations", self.precond_inner_iterations),
               ("final_residual", self.residual_history[-1] if self.residual_history else 0.0),
               ("interface_norm", self.interface_norm)]
        if self.rel_l2_error is not None:
            out.append(("rel_l2_error", self.rel_l2_error))
        return out


@dataclass
class RunResult:
    x: np.ndarray
    u: np.ndarray                    # reconstructed global solution at T
    parts: List[np.ndarray]          # per-subdomain solutions at T
    g: np.ndarray
    report: RunReport


@dataclass
class MonodomainResult:
    x: np.ndarray
    u: np.ndarray
    mass: Optional[np.ndarray] = None
    inner_iterations: int = 0


def global_nodes(config: RunConfig):
    n_cells = config.n_sub * config.cells_per_subdomain
    return SubMesh(config.a0, config.b0, n_cells + 1).nodes


def make_decomposition(config: RunConfig, potential: Optional[Potential] = None,
                       n_sub: Optional[int] = None) -> Decomposition:
    potential = config.make_potential() if potential is None else potential
    n_sub = config.n_sub if n_sub is None else n_sub
    cells = config.cells_per_subdomain * config.n_sub // n_sub
    width = (config.b0 - config.a0) / n_sub
    u0 = INITIAL_DATA[config.u0]
    problems, u0s = [], []
    for j in range(1, n_sub + 1):
        a = config.a0 + (j - 1) * width
        b = config.b0 if j == n_sub else config.a0 + j * width
        mesh = SubMesh(a, b, cells + 1)
        problems.append(SubdomainProblem(j, n_sub, mesh, config.dt, config.n_steps, potential,
                                         config.transmission, config.tol_fp, config.maxit_fp))
        u0s.append(u0(mesh.nodes))
    return Decomposition(problems, u0s, threads=config.threads)


def initial_interface(config: RunConfig, size: int):
    if config.g0 == "zero":
        return np.zeros(size, dtype=complex)
    rng = np.random.default_rng(config.seed)
    re = rng.random(size)
    im = rng.random(size)
    return re + 1j * im


def reconstruct(parts: List[np.ndarray]):
    """Concatenate subdomain vectors, averaging the duplicated interface nodes."""
    out = [np.asarray(parts[0], dtype=complex)]
    for p in parts[1:]:
        p = np.asarray(p, dtype=complex)
        prev = out[-1].copy()
        prev[-1] = 0.5 * (prev[-1] + p[0])
        out[-1] = prev
        out.append(p[1:])
    return np.concatenate(out)


def rel_l2_error(u_dd, u_ref):
    """Relative discrete L2 distance; ``u_dd`` may be a list of subdomain vectors."""
    if isinstance(u_dd, (list, tuple)):
        u_dd = reconstruct(u_dd)
    u_dd = np.asarray(u_dd)
    u_ref = np.asarray(u_ref)
    if u_dd.shape != u_ref.shape:
        raise GridMismatch("solution has %d nodes, reference has %d"
                           % (u_dd.size, u_ref.size))
    nref = np.linalg.norm(u_ref)
    if nref == 0:
        return float(np.linalg.norm(u_dd))
    return float(np.linalg.norm(u_dd - u_ref) / nref)


def solve_monodomain(config: RunConfig, record_mass=False) -> MonodomainResult:
    """Crank-Nicolson (or the nonlinear midpoint scheme) on (a0, b0) with Neumann ends."""
    potential = config.make_potential()
    x = global_nodes(config)
    mesh = SubMesh(config.a0, config.b0, x.size)
    prob = SubdomainProblem(1, 1, mesh, config.dt, config.n_steps, potential,
                            config.transmission, config.tol_fp, config.maxit_fp)
    res = solve_subdomain(prob, FluxSeries.zeros(config.n_steps), INITIAL_DATA[config.u0](x),
                          record_mass=record_mass)
    return MonodomainResult(x, res.u_final, res.mass, res.inner_iterations)


# -- helpers -------------------------------------------------------------------

def _krylov(method, A, b, x0, tol_abs, restart, maxit):
    """Krylov solve stopped on the absolute residual ``|b - A x| <= tol_abs``."""
    nb = np.linalg.norm(b)
    if nb == 0:
        return np.zeros_like(b), IterReport(0, [0.0], True, 0.0, 0)
    rel = tol_abs / nb
    if method == "gmres":
        x, rep = gmres(A, b, tol=rel, restart=restart, maxit=maxit, x0=x0)
    else:
        x, rep = bicgstab(A, b, tol=rel, maxit=maxit, x0=x0)
    rep.residual_history = [r * nb for r in rep.residual_history]
    return x, rep


def _finish(config, dd, g, rep, report, t_start):
    t0 = time.perf_counter()
    results = dd.sweep(g)
    parts = [r.u_final for r in results]
    report.iterations = rep.iterations
    report.residual_history = list(rep.residual_history)
    report.converged = rep.converged
    report.subdomain_solves = dd.solve_counts
    report.r_applications = dd.sweeps
    report.interface_norm = float(np.linalg.norm(g))
    report.timings.update(dd.timings)
    report.timings["final_sweep"] = time.perf_counter() - t0
    report.timings["total"] = time.perf_counter() - t_start
    result = RunResult(global_nodes(config), reconstruct(parts), parts, g, report)
    if not rep.converged:
        raise NotConverged("%s did not reach tol %.1e in %d iterations"
                           % (config.algorithm, config.tol, rep.iterations), result)
    return result


def _single(config, report, t_start):
    mono = solve_monodomain(config)
    report.subdomain_solves = [1]
    report.timings["total"] = time.perf_counter() - t_start
    return RunResult(mono.x, mono.u, [mono.u], np.zeros(0, dtype=complex), report)


# -- algorithms ---------------------------------------------------------------

def run_classical(config: RunConfig) -> RunResult:
    """Fixed point over R, or Krylov on the matrix-free ``I - L`` with rhs ``d``."""
    t_start = time.perf_counter()
    report = RunReport(config.algorithm, config.krylov)
    if config.n_sub == 1:
        return _single(config, report, t_start)
    dd = make_decomposition(config)
    g0 = initial_interface(config, dd.layout.size)
    if config.algorithm == "classical_fp" or config.krylov == "fixed_point":
        report.krylov = "fixed_point"
        g, rep = fixed_point(lambda g: apply_R(g, dd), g0, config.tol, config.maxit)
    else:
        if dd.potential_kind() == NONLINEAR:
            raise UnsupportedPotential("Krylov acceleration needs a linear potential")
        d = build_d(dd)
        A = LinOp(lambda g: apply_I_minus_L_matfree(g, dd, d), dd.layout.size)
        t0 = time.perf_counter()
        g, rep = _krylov(config.krylov, A, d, g0, config.tol, config.restart, config.maxit)
        report.timings["interface_solve"] = time.perf_counter() - t0
    return _finish(config, dd, g, rep, report, t_start)


def run_new(config: RunConfig) -> RunResult:
    """Build ``L`` and ``d`` explicitly, solve ``(I - L) g = d``, then one final sweep."""
    t_start = time.perf_counter()
    report = RunReport(config.algorithm, config.krylov)
    potential = config.make_potential()
    if potential.kind != STATIC:
        raise UnsupportedPotential("the explicit interface matrix needs a time independent potential")
    if config.n_sub == 1:
        return _single(config, report, t_start)
    dd = make_decomposition(config, potential)
    t0 = time.perf_counter()
    d = build_d(dd)
    L = build_L(dd)
    report.timings["build_Ld"] = time.perf_counter() - t0
    g0 = initial_interface(config, dd.layout.size)
    t0 = time.perf_counter()
    if config.krylov == "fixed_point":
        g, rep = fixed_point(lambda g: apply_L(L, g) + d, g0, config.tol, config.maxit)
    else:
        A = LinOp(lambda g: g - apply_L(L, g), dd.layout.size)
        g, rep = _krylov(config.krylov, A, d, g0, config.tol, config.restart, config.maxit)
    report.timings["interface_solve"] = time.perf_counter() - t0
    return _finish(config, dd, g, rep, report, t_start)


def run_preconditioned(config: RunConfig) -> RunResult:
    """Preconditioning by ``P = I - L0`` (zero potential, same transmission operator).

    Fixed point form ``g <- g - P^{-1}(g - R g)``; for a linear potential and a
    Krylov method, the left preconditioned system ``P^{-1}(I - L) g = P^{-1} d``.
    """
    t_start = time.perf_counter()
    report = RunReport(config.algorithm, config.krylov)
    potential = config.make_potential()
    if config.n_sub == 1:
        return _single(config, report, t_start)
    dd = make_decomposition(config, potential)
    t0 = time.perf_counter()
    dd0 = make_decomposition(replace(config, u0="zero"), pot.zero())
    dd0.threads = dd.threads
    P = build_preconditioner(dd0, config.precond_method, config.precond_tol,
                             restart=config.restart)
    report.timings["precond_build"] = time.perf_counter() - t0
    g0 = initial_interface(config, dd.layout.size)
    fp_form = config.algorithm == "preconditioned_fp" or config.krylov == "fixed_point"
    try:
        if fp_form:
            report.krylov = "fixed_point"
            step = lambda g: g - precond_apply(P, g - apply_R(g, dd))
            g, rep = fixed_point(step, g0, config.tol, config.maxit)
        else:
            if potential.kind == NONLINEAR:
                raise UnsupportedPotential("Krylov acceleration needs a linear potential; "
                                           "use the fixed point form")
            d = build_d(dd)
            A = LinOp(lambda g: precond_apply(P, apply_I_minus_L_matfree(g, dd, d)),
                      dd.layout.size)
            g, rep = _krylov(config.krylov, A, precond_apply(P, d), g0, config.tol,
                             config.restart, config.maxit)
    finally:
        report.precond_applications = P.applications
        report.precond_inner_iterations = P.inner_iterations
        report.timings["precond_apply"] = P.seconds
    return _finish(config, dd, g, rep, report, t_start)


def run(config: RunConfig) -> RunResult:
    """Dispatch on ``config.algorithm``."""
    if config.algorithm in ("classical_fp", "classical_krylov"):
        return run_classical(config)
    if config.algorithm == "new":
        return run_new(config)
    kind = config.make_potential().kind
    if config.algorithm == "preconditioned" and kind not in (DYNAMIC, NONLINEAR):
        raise UnsupportedPotential("the preconditioned algorithm targets time dependent or "
                                   "nonlinear potentials")
    return run_preconditioned(config)
