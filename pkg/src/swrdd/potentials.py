"""Potentials: time independent V(x), time dependent V(t, x), nonlinear f(u)."""

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

STATIC = "time_independent"
DYNAMIC = "time_dependent"
NONLINEAR = "nonlinear"


@dataclass(frozen=True)
class Potential:
    """A real potential.

    ``value`` is called as ``value(x)`` (static), ``value(t, x)`` (dynamic)
    or ``value(u)`` (nonlinear).  ``dx`` is the optional analytic spatial
    derivative with the same signature as ``value`` for the linear kinds.
    """

    kind: str
    value: Callable
    dx: Optional[Callable] = None
    name: str = "custom"

    @property
    def is_linear(self):
        return self.kind != NONLINEAR

    def at(self, t, x):
        x = np.asarray(x, dtype=float)
        if self.kind == STATIC:
            return np.broadcast_to(np.asarray(self.value(x), dtype=float), x.shape).copy()
        if self.kind == DYNAMIC:
            return np.broadcast_to(np.asarray(self.value(t, x), dtype=float), x.shape).copy()
        raise TypeError("nonlinear potentials have no (t, x) samples")

    def dx_at(self, t, x):
        if self.dx is None:
            return None
        x = np.asarray(x, dtype=float)
        val = self.dx(x) if self.kind == STATIC else self.dx(t, x)
        return np.broadcast_to(np.asarray(val, dtype=float), x.shape).copy()

    def midpoint(self, n, dt, x):
        """``W_n = (V_n + V_{n-1}) / 2`` at the points ``x``; ``W_0 = V_0``."""
        if self.kind == STATIC or n == 0:
            return self.at(0.0, x)
        return 0.5 * (self.at(n * dt, x) + self.at((n - 1) * dt, x))

    def midpoint_dx(self, n, dt, x):
        if self.dx is None:
            return None
        if self.kind == STATIC or n == 0:
            return self.dx_at(0.0, x)
        return 0.5 * (self.dx_at(n * dt, x) + self.dx_at((n - 1) * dt, x))

    def f(self, u):
        return np.asarray(self.value(u), dtype=float)


def static(fn, dfn=None, name="custom"):
    return Potential(STATIC, fn, dfn, name)


def dynamic(fn, dfn=None, name="custom"):
    return Potential(DYNAMIC, fn, dfn, name)


def nonlinear(fn, name="custom"):
    return Potential(NONLINEAR, fn, None, name)


def zero():
    return static(lambda x: np.zeros_like(x), lambda x: np.zeros_like(x), "zero")


def harmonic_neg():
    return static(lambda x: -x ** 2, lambda x: -2.0 * x, "harmonic_neg")


def linear_tx():
    return dynamic(lambda t, x: 5.0 * t * x, lambda t, x: 5.0 * t + 0.0 * x, "linear_tx")


def cubic_nls():
    return nonlinear(lambda u: np.abs(u) ** 2, "cubic_nls")


def zero_nls():
    """Degenerate nonlinearity f = 0, routed through the nonlinear solver."""
    return nonlinear(lambda u: np.zeros(np.shape(u)), "zero_nls")


NAMED = {
    "zero": zero,
    "harmonic_neg": harmonic_neg,
    "linear_tx": linear_tx,
    "cubic_nls": cubic_nls,
    "zero_nls": zero_nls,
}


def by_name(name):
    try:
        return NAMED[name]()
    except KeyError:
        raise KeyError("unknown potential %r (known: %s)" % (name, ", ".join(sorted(NAMED))))


def from_expression(expr: str) -> Potential:
    """Parse an expression in ``x`` (and optionally ``t``) with sympy.

    The spatial derivative is obtained symbolically.
    """
    import sympy

    x, t = sympy.symbols("x t", real=True)
    parsed = sympy.sympify(expr, locals={"x": x, "t": t})
    free = parsed.free_symbols - {x, t}
    if free:
        raise ValueError("unknown symbols in potential expression: %s"
                         % ", ".join(sorted(str(s) for s in free)))
    deriv = sympy.diff(parsed, x)
    if t in parsed.free_symbols:
        return dynamic(sympy.lambdify((t, x), parsed, "numpy"),
                       sympy.lambdify((t, x), deriv, "numpy"), "expr:" + expr)
    return static(sympy.lambdify(x, parsed, "numpy"),
                  sympy.lambdify(x, deriv, "numpy"), "expr:" + expr)
