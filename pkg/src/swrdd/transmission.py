"""
Discrete transmission operators for the interface condition ``d_n v + S v``.

Every operator is affine in the current boundary trace at a fixed step, so it
is evaluated as ``S v_n = c_now * v_n + h_hist``: ``c_now`` goes into the
system matrix and ``h_hist`` (the memory of previous steps) into the rhs.

Families and orders:

* ``robin``     -- ``-i p v``
* ``potential`` -- orders 2, 3, 4 (half-order derivative, half-order
  integral of the potential, integral of its normal derivative)
* ``gauge``     -- orders 2, 4 (phase-conjugated half-order derivative)
* ``pade``      -- orders 2, 4 (rational approximation of the square root
  with ``m`` poles, realized through auxiliary recursions)
"""

from dataclasses import dataclass

import numpy as np

from .errors import InvalidOrder

FAMILIES = ("robin", "potential", "gauge", "pade")
ORDERS = {"robin": (2,), "potential": (2, 3, 4), "gauge": (2, 4), "pade": (2, 4)}
EXP_M = np.exp(-0.25j * np.pi)
EXP_P = np.exp(0.25j * np.pi)


@dataclass(frozen=True)
class TransmissionSpec:
    family: str = "potential"
    order: int = 2
    p: float = 44.0
    m: int = 50

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise InvalidOrder("unknown transmission family %r" % self.family)
        if self.family == "robin":
            if not self.p > 0:
                raise InvalidOrder("Robin parameter p must be positive")
        elif self.order not in ORDERS[self.family]:
            raise InvalidOrder("order %s is not defined for the %s family"
                               % (self.order, self.family))
        if self.family == "pade" and self.m < 1:
            raise InvalidOrder("Pade approximation needs m >= 1")

    @property
    def uses_normal_derivative(self):
        return self.family != "robin" and self.order == 4

    @property
    def label(self):
        if self.family == "robin":
            return "robin(p=%g)" % self.p
        idx = {"potential": 0, "gauge": 1, "pade": 2}[self.family]
        if self.family == "pade":
            return "S%d^%d,%d" % (idx, self.order, self.m)
        return "S%d^%d" % (idx, self.order)


@dataclass(frozen=True)
class ConvCoeffs:
    alpha: np.ndarray
    beta: np.ndarray
    gamma: np.ndarray


def conv_coeffs(n_max: int) -> ConvCoeffs:
    """Convolution weights of the discrete half-order derivative/integral.

    ``alpha_{2k} = alpha_{2k+1} = (2k)! / (4^k (k!)^2)``, ``beta_s = (-1)^s alpha_s``
    and ``gamma = (1, 2, 2, ...)``.
    """
    if n_max < 0:
        raise ValueError("n_max must be non-negative")
    alpha = np.empty(n_max + 1)
    alpha[0] = 1.0
    for s in range(1, n_max + 1):
        if s % 2:
            alpha[s] = alpha[s - 1]
        else:
            alpha[s] = alpha[s - 2] * (s - 1) / s
    beta = alpha.copy()
    beta[1::2] *= -1.0
    gamma = np.full(n_max + 1, 2.0)
    gamma[0] = 1.0
    return ConvCoeffs(alpha, beta, gamma)


@dataclass(frozen=True)
class PadeCoeffs:
    a: np.ndarray  # a_0 .. a_m
    d: np.ndarray  # d_1 .. d_m

    def __call__(self, z):
        z = np.asarray(z, dtype=complex)
        terms = self.a[1:] * z[..., None] / (z[..., None] + self.d)
        return self.a[0] + terms.sum(axis=-1)


def pade_coeffs(m: int) -> PadeCoeffs:
    """Midpoint-rule rational approximation of the principal square root.

    ``sqrt(z) = (2/pi) int_0^{pi/2} z / (z cos^2 t + sin^2 t) dt``; the m-point
    midpoint rule gives ``a_s = 1/(m cos^2 t_s)``, ``d_s = tan^2 t_s``.
    """
    if m < 1:
        raise ValueError("m must be >= 1")
    theta = (2.0 * np.arange(1, m + 1) - 1.0) * np.pi / (4.0 * m)
    a = np.empty(m + 1)
    a[0] = 0.0
    a[1:] = 1.0 / (m * np.cos(theta) ** 2)
    return PadeCoeffs(a, np.tan(theta) ** 2)


def robin_apply(p: float, trace_now: complex) -> complex:
    return -1j * p * trace_now


class DiscreteOperator:
    """A transmission operator bound to a time step and a time window."""

    def __init__(self, spec: TransmissionSpec, dt: float, n_steps: int):
        self.spec = spec
        self.dt = float(dt)
        self.n_steps = int(n_steps)
        self.coeffs = conv_coeffs(n_steps)
        self.c2 = EXP_M * np.sqrt(2.0 / dt)
        self.pade = pade_coeffs(spec.m) if spec.family == "pade" else None

    def new_state(self, v0=0j, W0=0.0, dnW0=0.0):
        return BoundaryOpState(self, v0, W0, dnW0)


class BoundaryOpState:
    """Memory of one transmission operator at one boundary point.

    Holds the trace history ``v_0 .. v_n``, the gauge phases, the square
    roots of ``|d_n W|`` and the Pade auxiliary values ``phi``/``psi``.
    """

    def __init__(self, op: DiscreteOperator, v0=0j, W0=0.0, dnW0=0.0):
        self.op = op
        self.spec = op.spec
        size = op.n_steps + 1
        self.trace = np.zeros(size, dtype=complex)
        self.trace[0] = v0
        self.n_done = 0
        fam = self.spec.family
        if fam == "gauge":
            self.cal_v = 0.0              # running time integral of the potential
            self.cal_w = np.zeros(size)   # midpoint phases; zero at t = 0
            self.gtrace = np.zeros(size, dtype=complex)
            self.gtrace[0] = v0
            if self.spec.order == 4:
                self.rho = np.zeros(size)
                self.rho[0] = 0.5 * np.sqrt(abs(dnW0))
                self.rtrace = np.zeros(size, dtype=complex)
                self.rtrace[0] = self.rho[0] * v0
        elif fam == "pade":
            self.phi = np.zeros(self.spec.m, dtype=complex)
            self.psi = 0j

    @property
    def history_length(self):
        return self.n_done + 1


def gauge_accumulate(state: BoundaryOpState, W_n: float, dt: float):
    """Advance the running integral; returns ``(V_n, W_n_mid)``.

    ``V_n = V_{n-1} + dt * W_n`` and the phase used at step n is
    ``(V_n + V_{n-1}) / 2``.
    """
    prev = state.cal_v
    state.cal_v = prev + dt * W_n
    return state.cal_v, 0.5 * (state.cal_v + prev)


def _gauge_phase(state, W_n):
    return state.cal_v + 0.5 * state.op.dt * W_n


def sbar_split(state: BoundaryOpState, n: int, W_n=0.0, dnW_n=0.0):
    """Return ``(c_now, h_hist)`` with ``S v_n = c_now * v_n + h_hist``.

    ``state`` must hold the traces of steps ``0 .. n-1``.  ``dnW_n`` is the
    derivative of the potential along the outward normal of this boundary.
    """
    op = state.op
    spec = state.spec
    if n != state.n_done + 1:
        raise ValueError("state holds %d steps, cannot evaluate step %d"
                         % (state.history_length, n))
    fam = spec.family
    if fam == "robin":
        return -1j * spec.p, 0j
    dt = op.dt
    cf = op.coeffs
    if fam == "potential":
        hist = state.trace[:n]
        c = op.c2 * cf.beta[0]
        h = op.c2 * np.dot(cf.beta[n:0:-1], hist)
        if spec.order >= 3:
            k3 = -EXP_P * np.sqrt(dt / 2.0) * W_n / 2.0
            c += k3 * cf.alpha[0]
            h += k3 * np.dot(cf.alpha[n:0:-1], hist)
        if spec.order == 4:
            k4 = -1j * dnW_n / 4.0 * dt / 2.0
            c += k4 * cf.gamma[0]
            h += k4 * np.dot(cf.gamma[n:0:-1], hist)
        return c, h
    if fam == "gauge":
        ph = np.exp(1j * _gauge_phase(state, W_n))
        c = op.c2 * cf.beta[0]
        h = op.c2 * ph * np.dot(cf.beta[n:0:-1], state.gtrace[:n])
        if spec.order == 4:
            rho = 0.5 * np.sqrt(abs(dnW_n))
            k = -1j * np.sign(dnW_n) * rho * ph * dt / 2.0
            c += -1j * np.sign(dnW_n) * rho * rho * dt / 2.0 * cf.gamma[0]
            h += k * np.dot(cf.gamma[n:0:-1], state.rtrace[:n])
        return c, h
    # pade
    pc = op.pade
    z = 2j / dt + W_n
    den = z + pc.d
    ad = pc.a[1:] * pc.d
    c = -1j * pc.a.sum() + 1j * np.sum(ad / den)
    h = 1j * np.sum(ad * (2j / dt) / den * state.phi)
    if spec.order == 4:
        rho = 0.5 * np.sqrt(abs(dnW_n))
        c += (dnW_n / 4.0) / z
        h += np.sign(dnW_n) * rho * (2j / dt) / z * state.psi
    return c, h


def sbar_apply(state, n, trace_now, W_n=0.0, dnW_n=0.0):
    c, h = sbar_split(state, n, W_n, dnW_n)
    return c * trace_now + h


def advance_state(state: BoundaryOpState, n: int, v_n, W_n=0.0, dnW_n=0.0):
    """Commit step ``n`` (trace, gauge phase, Pade recursions)."""
    if n != state.n_done + 1:
        raise ValueError("steps must be committed in order")
    state.trace[n] = v_n
    spec = state.spec
    dt = state.op.dt
    if spec.family == "gauge":
        _, w_mid = gauge_accumulate(state, W_n, dt)
        state.cal_w[n] = w_mid
        e = np.exp(-1j * w_mid)
        state.gtrace[n] = e * v_n
        if spec.order == 4:
            state.rho[n] = 0.5 * np.sqrt(abs(dnW_n))
            state.rtrace[n] = state.rho[n] * e * v_n
    elif spec.family == "pade":
        z = 2j / dt + W_n
        half = (v_n + (2j / dt) * state.phi) / (z + state.op.pade.d)
        state.phi = 2.0 * half - state.phi
        if spec.order == 4:
            rho = 0.5 * np.sqrt(abs(dnW_n))
            half_psi = (rho * v_n + (2j / dt) * state.psi) / z
            state.psi = 2.0 * half_psi - state.psi
    state.n_done = n
