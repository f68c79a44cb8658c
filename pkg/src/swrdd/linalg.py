"""
Complex linear algebra used by the subdomain solver and the interface problem.

Tridiagonal systems are factorized with LAPACK's ``zgttrf`` and solved with
``zgttrs`` so that a factorization can be reused across time steps.  The
iterative solvers (GMRES, BiCGStab, fixed point) are matrix free: they only
need a callable ``x -> A @ x``.
"""

from dataclasses import dataclass, field
from typing import Callable, List, Optional

import numpy as np
from scipy.linalg import lapack

from .errors import Breakdown, ZeroPivot

PIVOT_FLOOR = 1e-300


@dataclass
class TriDiag:
    """Tridiagonal matrix stored by diagonals (``lower``/``upper`` have length n-1)."""

    lower: np.ndarray
    diag: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        self.lower = np.asarray(self.lower, dtype=complex)
        self.diag = np.asarray(self.diag, dtype=complex)
        self.upper = np.asarray(self.upper, dtype=complex)
        n = self.diag.shape[0]
        if self.lower.shape != (max(n - 1, 0),) or self.upper.shape != (max(n - 1, 0),):
            raise ValueError("off-diagonals must have length n-1")

    @property
    def n(self):
        return self.diag.shape[0]

    def matvec(self, x):
        x = np.asarray(x)
        y = self.diag * x
        y[:-1] += self.upper * x[1:]
        y[1:] += self.lower * x[:-1]
        return y

    def to_dense(self):
        return np.diag(self.diag) + np.diag(self.upper, 1) + np.diag(self.lower, -1)

    def __add__(self, other):
        return TriDiag(self.lower + other.lower, self.diag + other.diag,
                       self.upper + other.upper)

    def __sub__(self, other):
        return TriDiag(self.lower - other.lower, self.diag - other.diag,
                       self.upper - other.upper)

    def scaled(self, c):
        return TriDiag(c * self.lower, c * self.diag, c * self.upper)

    def with_corners(self, first, last):
        """Copy with ``first``/``last`` added to the two extreme diagonal entries."""
        d = self.diag.copy()
        d[0] += first
        d[-1] += last
        return TriDiag(self.lower.copy(), d, self.upper.copy())

    def factor(self):
        return TridiagLU(self)


class TridiagLU:
    """LU factorization (partial pivoting) of a :class:`TriDiag`, reusable for many rhs."""

    def __init__(self, A: TriDiag):
        self.n = A.n
        if self.n <= 2:
            # the LAPACK wrapper rejects n = 2; eliminate by hand with row pivoting
            self._small = _small_lu(A.to_dense())
            return
        dl, d, du, du2, ipiv, info = lapack.zgttrf(A.lower, A.diag, A.upper)
        if info > 0 or np.min(np.abs(d)) < PIVOT_FLOOR:
            k = int(np.argmin(np.abs(d)))
            raise ZeroPivot("pivot %d has magnitude %.3e" % (k, abs(d[k])))
        if info < 0:
            raise ValueError("zgttrf: illegal argument %d" % -info)
        self._factors = (dl, d, du, du2, ipiv)

    def solve(self, b):
        b = np.asarray(b, dtype=complex)
        if self.n <= 2:
            return _small_solve(self._small, b)
        x, info = lapack.zgttrs(*self._factors, b)
        if info != 0:
            raise ValueError("zgttrs: illegal argument %d" % -info)
        return x


def _small_lu(D):
    if D.shape[0] == 1:
        if abs(D[0, 0]) < PIVOT_FLOOR:
            raise ZeroPivot("pivot 0 has magnitude %.3e" % abs(D[0, 0]))
        return (False, D[0, 0], 0j, 0j, 0j)
    swap = abs(D[1, 0]) > abs(D[0, 0])
    if swap:
        D = D[::-1]
    if abs(D[0, 0]) < PIVOT_FLOOR:
        raise ZeroPivot("pivot 0 has magnitude %.3e" % abs(D[0, 0]))
    m = D[1, 0] / D[0, 0]
    u22 = D[1, 1] - m * D[0, 1]
    if abs(u22) < PIVOT_FLOOR:
        raise ZeroPivot("pivot 1 has magnitude %.3e" % abs(u22))
    return (swap, D[0, 0], D[0, 1], m, u22)


def _small_solve(f, b):
    swap, u11, u12, m, u22 = f
    if b.shape[0] == 1:
        return b / u11
    b = b[::-1] if swap else b
    y2 = b[1] - m * b[0]
    x2 = y2 / u22
    return np.array([(b[0] - u12 * x2) / u11, x2])


def tridiag_solve(A: TriDiag, b) -> np.ndarray:
    """Solve ``A x = b``; raises :class:`ZeroPivot` on a singular pivot."""
    return TridiagLU(A).solve(b)


class LinOp:
    """Matrix-free linear operator of dimension ``n``."""

    def __init__(self, matvec: Callable, n: int):
        self._matvec = matvec
        self.n = int(n)

    def __call__(self, x):
        return self._matvec(x)

    matvec = __call__


def aslinop(A) -> LinOp:
    if isinstance(A, LinOp):
        return A
    if isinstance(A, TriDiag):
        return LinOp(A.matvec, A.n)
    if isinstance(A, np.ndarray):
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise ValueError("operator must be square")
        return LinOp(lambda x: A @ x, A.shape[0])
    raise TypeError("cannot interpret %r as a linear operator" % type(A))


@dataclass
class IterReport:
    """Outcome of an iterative solve.

    ``residual_history`` holds one entry per iteration.  For the Krylov solvers
    the entries are relative residuals ``|b - Ax| / |b|``; for the fixed point
    they are increments ``|g_{k+1} - g_k|``.
    """

    iterations: int = 0
    residual_history: List[float] = field(default_factory=list)
    converged: bool = False
    initial_residual: float = 0.0
    applications: int = 0


def _givens(a, b):
    """Complex rotation (c real) mapping (a, b) to (r, 0)."""
    aa = abs(a)
    if aa == 0.0:
        return 0.0, 1.0 + 0j, b
    t = np.hypot(aa, abs(b))
    ph = a / aa
    return aa / t, ph * np.conj(b) / t, ph * t


def gmres(A, b, tol=1e-10, restart=30, maxit=2000, x0=None):
    """Restarted GMRES with modified Gram-Schmidt Arnoldi.

    Stops when ``|b - A x|_2 <= tol * |b|_2`` (checked on the true residual at
    the end of each cycle) or after ``maxit`` Arnoldi steps in total.

    Returns
    -------
    x : ndarray
    report : IterReport
    """
    A = aslinop(A)
    b = np.asarray(b, dtype=complex)
    n = b.shape[0]
    if A.n != n:
        raise ValueError("dimension mismatch: operator %d, rhs %d" % (A.n, n))
    x = np.zeros(n, dtype=complex) if x0 is None else np.array(x0, dtype=complex)
    rep = IterReport()
    bnorm = np.linalg.norm(b)
    if bnorm == 0.0:
        rep.converged = True
        return np.zeros(n, dtype=complex), rep
    target = tol * bnorm
    m = max(1, min(restart, n))

    r = b - A(x)
    rep.applications += 1
    beta = np.linalg.norm(r)
    rep.initial_residual = beta / bnorm
    while True:
        if beta <= target:
            rep.converged = True
            if rep.residual_history:
                rep.residual_history[-1] = beta / bnorm
            return x, rep
        if rep.iterations >= maxit:
            return x, rep
        V = np.zeros((m + 1, n), dtype=complex)
        H = np.zeros((m + 1, m), dtype=complex)
        cs = np.zeros(m)
        sn = np.zeros(m, dtype=complex)
        g = np.zeros(m + 1, dtype=complex)
        V[0] = r / beta
        g[0] = beta
        k_used = 0
        for k in range(m):
            w = A(V[k])
            rep.applications += 1
            hnorm = np.linalg.norm(w)
            for i in range(k + 1):
                H[i, k] = np.vdot(V[i], w)
                w = w - H[i, k] * V[i]
            H[k + 1, k] = np.linalg.norm(w)
            for i in range(k):
                hi, hj = H[i, k], H[i + 1, k]
                H[i, k] = cs[i] * hi + sn[i] * hj
                H[i + 1, k] = -np.conj(sn[i]) * hi + cs[i] * hj
            sub = H[k + 1, k]
            cs[k], sn[k], H[k, k] = _givens(H[k, k], sub)
            H[k + 1, k] = 0.0
            if abs(H[k, k]) < PIVOT_FLOOR:
                raise Breakdown("GMRES: singular Hessenberg least-squares step at iteration %d"
                                % (rep.iterations + 1))
            g[k + 1] = -np.conj(sn[k]) * g[k]
            g[k] = cs[k] * g[k]
            rep.iterations += 1
            rep.residual_history.append(abs(g[k + 1]) / bnorm)
            k_used = k + 1
            lucky = abs(sub) <= 1e-14 * max(hnorm, PIVOT_FLOOR)
            if lucky or abs(g[k + 1]) <= target or rep.iterations >= maxit:
                break
            V[k + 1] = w / sub
        y = _upper_solve(H[:k_used, :k_used], g[:k_used])
        x = x + V[:k_used].T @ y
        r = b - A(x)
        rep.applications += 1
        beta = np.linalg.norm(r)


def _upper_solve(R, g):
    k = R.shape[0]
    y = np.zeros(k, dtype=complex)
    for i in range(k - 1, -1, -1):
        y[i] = (g[i] - R[i, i + 1:] @ y[i + 1:]) / R[i, i]
    return y


def bicgstab(A, b, tol=1e-10, maxit=2000, x0=None):
    """BiCGStab (van der Vorst).  One iteration costs two operator applications.

    Raises :class:`Breakdown` when rho or omega underflow below 1e-300.
    """
    A = aslinop(A)
    b = np.asarray(b, dtype=complex)
    n = b.shape[0]
    if A.n != n:
        raise ValueError("dimension mismatch: operator %d, rhs %d" % (A.n, n))
    x = np.zeros(n, dtype=complex) if x0 is None else np.array(x0, dtype=complex)
    rep = IterReport()
    bnorm = np.linalg.norm(b)
    if bnorm == 0.0:
        rep.converged = True
        return np.zeros(n, dtype=complex), rep
    target = tol * bnorm

    r = b - A(x)
    rep.applications += 1
    rnorm = np.linalg.norm(r)
    rep.initial_residual = rnorm / bnorm
    if rnorm <= target:
        rep.converged = True
        return x, rep

    while rep.iterations < maxit:
        # (re)start the recurrence from the current true residual
        r_hat = r.copy()
        rho_old = alpha = omega = 1.0 + 0j
        v = np.zeros(n, dtype=complex)
        p = np.zeros(n, dtype=complex)
        first = True
        while rep.iterations < maxit:
            rho = np.vdot(r_hat, r)
            if abs(rho) < PIVOT_FLOOR:
                raise Breakdown("BiCGStab: rho underflow at iteration %d" % (rep.iterations + 1))
            if first:
                p = r.copy()
                first = False
            else:
                p = r + (rho / rho_old) * (alpha / omega) * (p - omega * v)
            v = A(p)
            rep.applications += 1
            denom = np.vdot(r_hat, v)
            if abs(denom) < PIVOT_FLOOR:
                raise Breakdown("BiCGStab: <r_hat, v> underflow at iteration %d"
                                % (rep.iterations + 1))
            alpha = rho / denom
            s = r - alpha * v
            rep.iterations += 1
            snorm = np.linalg.norm(s)
            if snorm <= target:
                x = x + alpha * p
                rep.residual_history.append(snorm / bnorm)
                break
            t = A(s)
            rep.applications += 1
            tt = np.vdot(t, t).real
            if tt < PIVOT_FLOOR:
                raise Breakdown("BiCGStab: |t| underflow at iteration %d" % rep.iterations)
            omega = np.vdot(t, s) / tt
            x = x + alpha * p + omega * s
            r = s - omega * t
            rnorm = np.linalg.norm(r)
            rep.residual_history.append(rnorm / bnorm)
            if rnorm <= target:
                break
            if abs(omega) < PIVOT_FLOOR:
                raise Breakdown("BiCGStab: omega underflow at iteration %d" % rep.iterations)
            rho_old = rho
        r = b - A(x)
        rep.applications += 1
        rnorm = np.linalg.norm(r)
        if rnorm <= target:
            rep.converged = True
            rep.residual_history[-1] = rnorm / bnorm
            return x, rep
    return x, rep


def fixed_point(step: Callable, g0, tol=1e-10, maxit=2000):
    """Iterate ``g <- step(g)`` until ``|step(g) - g|_2 < tol``.

    Iteration ``k`` evaluates ``step`` at the k-th iterate; the evaluation at
    the initial guess is not counted, so a constant map converges in one
    iteration.  The returned vector is the last image ``step(g_k)``.
    """
    g = np.array(g0, dtype=complex)
    nxt = np.asarray(step(g), dtype=complex)
    rep = IterReport(applications=1)
    rep.initial_residual = float(np.linalg.norm(nxt - g))
    if rep.initial_residual < tol:
        rep.converged = True
        return nxt, rep
    while rep.iterations < maxit:
        g = nxt
        nxt = np.asarray(step(g), dtype=complex)
        rep.applications += 1
        rep.iterations += 1
        res = float(np.linalg.norm(nxt - g))
        rep.residual_history.append(res)
        if res < tol:
            rep.converged = True
            break
    return nxt, rep
