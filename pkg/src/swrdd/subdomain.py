"""
Time marching on one subdomain over the whole window (0, T).

The unknown at step n is the midpoint value ``v_n = (u_n + u_{n-1}) / 2``.
With ``K = (2i/dt) M - S + M_W`` the linear step reads

    (K - B_n) v_n = (2i/dt) M u_{n-1} + b_n - Q^T (l_n, r_n)

where ``B_n``/``b_n`` carry the current-step coefficient and the history of
the transmission operator at the interface nodes.  At an outer end of the
global domain the homogeneous Neumann condition leaves the row untouched.
"""

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import InvalidOrder, NotConverged
from .fem import SubMesh, assemble_mass, assemble_stiffness, assemble_weighted_mass
from .linalg import TriDiag, TridiagLU
from .potentials import NONLINEAR, STATIC, Potential
from .transmission import (DiscreteOperator, TransmissionSpec, advance_state,
                           sbar_split)

NONLINEAR_FAMILIES = {("robin", 2), ("potential", 2), ("potential", 3), ("gauge", 2), ("pade", 2)}


@dataclass
class FluxSeries:
    """Fluxes at the left (``l``) and right (``r``) end for steps 1..N_T."""

    l: np.ndarray
    r: np.ndarray

    @classmethod
    def zeros(cls, n_steps):
        return cls(np.zeros(n_steps, dtype=complex), np.zeros(n_steps, dtype=complex))


@dataclass
class SubdomainResult:
    u_final: np.ndarray
    traces: np.ndarray        # (2, N_T): v_n at a_j and b_j
    sbar_traces: np.ndarray   # (2, N_T): S v_n with this subdomain's own normal
    flux_out: FluxSeries      # l -> new r_{j-1}, r -> new l_{j+1}
    mass: Optional[np.ndarray] = None
    inner_iterations: int = 0


@dataclass
class StepResult:
    v: np.ndarray
    u: np.ndarray
    splits: tuple = (None, None)
    boundary_w: tuple = (0.0, 0.0)
    inner_iterations: int = 1


class SubdomainProblem:
    """Mesh, FEM matrices, potential and transmission operator of subdomain ``index``.

    ``index`` is 1-based; subdomain 1 and ``n_sub`` carry a Neumann end.
    Immutable after construction, so solves on the same problem may run
    concurrently.
    """

    def __init__(self, index, n_sub, mesh: SubMesh, dt, n_steps, potential: Potential,
                 spec: TransmissionSpec, tol_fp=1e-12, maxit_fp=50):
        self.index = index
        self.n_sub = n_sub
        self.mesh = mesh
        self.x = mesh.nodes
        self.dt = float(dt)
        self.n_steps = int(n_steps)
        self.potential = potential
        self.spec = spec
        self.tol_fp = tol_fp
        self.maxit_fp = maxit_fp
        self.has_left = index > 1
        self.has_right = index < n_sub
        if (potential.kind == NONLINEAR and (self.has_left or self.has_right)
                and (spec.family, spec.order) not in NONLINEAR_FAMILIES):
            raise InvalidOrder("%s is not available for nonlinear potentials" % spec.label)

        self.M = assemble_mass(mesh)
        self.S = assemble_stiffness(mesh)
        self.Mdt = self.M.scaled(2j / self.dt)
        self.base = self.Mdt - self.S
        self.op = DiscreteOperator(spec, self.dt, self.n_steps)
        self.solve_count = 0

        self._lu = None
        self._static_w = None
        if potential.kind == STATIC:
            self._static_w = potential.at(0.0, self.x)
            c_l, c_r = self._corner_coeffs(1, self._boundary_w(1))
            K = self.base + assemble_weighted_mass(mesh, self._static_w)
            self._lu = TridiagLU(K.with_corners(-c_l, -c_r))
        elif potential.kind == NONLINEAR and self._corners_fixed():
            c_l, c_r = self._corner_coeffs(1, ((0.0, 0.0), (0.0, 0.0)))
            self._lu = TridiagLU(self.base.with_corners(-c_l, -c_r))

    # -- potential samples -------------------------------------------------
    def nodal_w(self, n):
        if self._static_w is not None:
            return self._static_w
        return self.potential.midpoint(n, self.dt, self.x)

    def _normal_derivative(self, n, w):
        """Outward normal derivative of W_n at (a_j, b_j)."""
        d = self.potential.midpoint_dx(n, self.dt, self.x[[0, -1]])
        if d is not None:
            return -d[0], d[1]
        h = self.mesh.h
        if w.shape[0] >= 3:
            left = (-3.0 * w[0] + 4.0 * w[1] - w[2]) / (2.0 * h)
            right = (3.0 * w[-1] - 4.0 * w[-2] + w[-3]) / (2.0 * h)
        else:
            left = right = (w[1] - w[0]) / h
        return -left, right

    def _boundary_w(self, n, w=None):
        """((W_left, dnW_left), (W_right, dnW_right)) for a linear potential."""
        if w is None:
            w = self.nodal_w(n)
        if self.spec.uses_normal_derivative:
            dl, dr = self._normal_derivative(n, w)
        else:
            dl = dr = 0.0
        return (float(w[0]), dl), (float(w[-1]), dr)

    def _corners_fixed(self):
        s = self.spec
        return s.family == "robin" or (s.family in ("potential", "gauge") and s.order == 2)

    def _corner_coeffs(self, n, bw):
        tmp = self.op.new_state()
        c_l = sbar_split(tmp, n, *bw[0])[0] if self.has_left else 0.0
        c_r = sbar_split(tmp, n, *bw[1])[0] if self.has_right else 0.0
        return c_l, c_r

    def initial_states(self, u0):
        """Fresh transmission states (left, right) seeded with the step-0 traces."""
        states = [None, None]
        if self.potential.kind == NONLINEAR:
            f0 = self.potential.f(u0[[0, -1]])
            bw0 = ((float(f0[0]), 0.0), (float(f0[1]), 0.0))
        else:
            bw0 = self._boundary_w(0)
        if self.has_left:
            states[0] = self.op.new_state(u0[0], *bw0[0])
        if self.has_right:
            states[1] = self.op.new_state(u0[-1], *bw0[1])
        return states


def _rhs(problem, u_prev, splits, l_n, r_n):
    rhs = problem.Mdt.matvec(u_prev)
    if splits[0] is not None:
        rhs[0] += splits[0][1] - l_n
    if splits[1] is not None:
        rhs[-1] += splits[1][1] - r_n
    return rhs


def cn_step_linear(problem: SubdomainProblem, n, u_prev, l_n, r_n, states) -> StepResult:
    """One Crank-Nicolson step for a linear potential (states are not committed)."""
    w = problem.nodal_w(n)
    bw = problem._boundary_w(n, w)
    splits = (sbar_split(states[0], n, *bw[0]) if states[0] is not None else None,
              sbar_split(states[1], n, *bw[1]) if states[1] is not None else None)
    if problem._lu is not None:
        lu = problem._lu
    else:
        K = problem.base + assemble_weighted_mass(problem.mesh, w)
        lu = TridiagLU(K.with_corners(-splits[0][0] if splits[0] else 0.0,
                                      -splits[1][0] if splits[1] else 0.0))
    v = lu.solve(_rhs(problem, u_prev, splits, l_n, r_n))
    return StepResult(v, 2.0 * v - u_prev, splits, bw)


def cn_step_nonlinear(problem: SubdomainProblem, n, u_prev, l_n, r_n, states, v_prev,
                      tol_fp=None, maxit_fp=None) -> StepResult:
    """One step of the midpoint scheme for ``V = f(u)`` via an inner fixed point.

    ``zeta <- solve((2i/dt) M - S - B, (2i/dt) M u_prev - b_f(zeta) + b - Q^T(l, r))``
    started from ``v_prev`` until ``|zeta_{s+1} - zeta_s|_2 < tol_fp``.  The
    nonlinear load is ``b_f = M_{f(zeta)} zeta`` with ``f(zeta)`` interpolated like
    a linear potential, which keeps the discrete mass exactly conserved.
    """
    tol_fp = problem.tol_fp if tol_fp is None else tol_fp
    maxit_fp = problem.maxit_fp if maxit_fp is None else maxit_fp
    f = problem.potential.f
    base_rhs = problem.Mdt.matvec(u_prev)
    zeta = np.array(v_prev, dtype=complex)
    for it in range(1, maxit_fp + 1):
        fz = f(zeta)
        bw = ((float(fz[0]), 0.0), (float(fz[-1]), 0.0))
        splits = (sbar_split(states[0], n, *bw[0]) if states[0] is not None else None,
                  sbar_split(states[1], n, *bw[1]) if states[1] is not None else None)
        if problem._lu is not None:
            lu = problem._lu
        else:
            lu = TridiagLU(problem.base.with_corners(-splits[0][0] if splits[0] else 0.0,
                                                     -splits[1][0] if splits[1] else 0.0))
        rhs = base_rhs - assemble_weighted_mass(problem.mesh, fz).matvec(zeta)
        if splits[0] is not None:
            rhs[0] += splits[0][1] - l_n
        if splits[1] is not None:
            rhs[-1] += splits[1][1] - r_n
        new = lu.solve(rhs)
        diff = np.linalg.norm(new - zeta)
        zeta = new
        if diff < tol_fp:
            return StepResult(zeta, 2.0 * zeta - u_prev, splits, (bw[0][0], bw[1][0]), it)
    raise NotConverged("inner fixed point of subdomain %d did not converge at step %d "
                       "(last increment %.3e)" % (problem.index, n, diff))


def solve_subdomain(problem: SubdomainProblem, flux_in: FluxSeries, u0, record_mass=False):
    """March steps 1..N_T and return traces, S-traces and outgoing fluxes.

    The outgoing flux at an interface is ``-flux_in + S_own v + S_nbr v``
    where ``S_nbr`` is the neighbour's operator (opposite outward normal).
    For operators without a normal derivative both coincide and this is
    the usual ``-flux_in + 2 S v``.
    """
    problem.solve_count += 1
    nt = problem.n_steps
    u = np.array(u0, dtype=complex)
    states = problem.initial_states(u)
    nonlinear = problem.potential.kind == NONLINEAR
    traces = np.zeros((2, nt), dtype=complex)
    sbar_tr = np.zeros((2, nt), dtype=complex)
    out = FluxSeries.zeros(nt)
    mass = np.zeros(nt + 1) if record_mass else None
    if record_mass:
        mass[0] = np.vdot(u, problem.M.matvec(u)).real
    v_prev = u.copy()
    inner = 0
    flip = problem.spec.uses_normal_derivative
    for n in range(1, nt + 1):
        l_n = flux_in.l[n - 1]
        r_n = flux_in.r[n - 1]
        if nonlinear:
            st = cn_step_nonlinear(problem, n, u, l_n, r_n, states, v_prev)
            bw = ((st.boundary_w[0], 0.0), (st.boundary_w[1], 0.0))
        else:
            st = cn_step_linear(problem, n, u, l_n, r_n, states)
            bw = st.boundary_w
        inner += st.inner_iterations
        v = st.v
        traces[0, n - 1] = v[0]
        traces[1, n - 1] = v[-1]
        for side, (idx, f_in) in enumerate(((0, l_n), (-1, r_n))):
            state = states[side]
            if state is None:
                continue
            c, h = st.splits[side]
            own = c * v[idx] + h
            sbar_tr[side, n - 1] = own
            if flip:
                c2, h2 = sbar_split(state, n, bw[side][0], -bw[side][1])
                nbr = c2 * v[idx] + h2
            else:
                nbr = own
            if side == 0:
                out.l[n - 1] = -f_in + own + nbr
            else:
                out.r[n - 1] = -f_in + own + nbr
            advance_state(state, n, v[idx], *bw[side])
        u = st.u
        v_prev = v
        if record_mass:
            mass[n] = np.vdot(u, problem.M.matvec(u)).real
    return SubdomainResult(u, traces, sbar_tr, out, mass, inner)
