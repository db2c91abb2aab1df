"""Truncated multivariate Taylor arithmetic up to third order.

A :class:`Jet` carries the value of a scalar field together with all of its
mixed partial derivatives up to a fixed order with respect to a declared list
of variables.  Every elementary operation propagates the derivatives exactly
(Leibniz rule for products, Faa di Bruno for univariate functions), so
derivatives come out at machine precision.

Scalar fields are written once, generically, against the functions of this
module (:func:`sqrt`, :func:`exp`, ...).  Called with floats they return
floats; called with jets they return jets::

    >>> f = lambda v: v[0] ** 2 * v[1]
    >>> jet = evaluate_jet(f, [1.0, 1.0], order=3)
    >>> float(jet.third[0, 0, 1])
    2.0
"""

from __future__ import annotations

import math
from itertools import permutations
from numbers import Real
from typing import Callable, Sequence

import numpy as np

from .errors import EvaluationError

__all__ = [
    "Jet",
    "evaluate_jet",
    "partial",
    "jacobian",
    "sqrt",
    "exp",
    "log",
    "sin",
    "cos",
    "fabs",
    "power",
    "primal",
]

EPS = np.finfo(float).eps


def _sym3(u, m):
    # (u (x) M) summed over the three index placements
    return u[:, None, None] * m[None, :, :] + u[None, :, None] * m[:, None, :] + u[None, None, :] * m[:, :, None]


class Jet:
    """Value and partial derivatives (orders 1..``order``) of a scalar field.

    ``first``, ``second`` and ``third`` are numpy arrays of shapes ``(m,)``,
    ``(m, m)`` and ``(m, m, m)``; levels above ``order`` are ``None`` internally
    and reported as zeros by the public properties.
    """

    __slots__ = ("value", "d1", "d2", "d3", "order", "nvars")
    __array_ufunc__ = None

    def __init__(self, value, d1=None, d2=None, d3=None, order=3, nvars=None):
        self.value = float(value)
        self.order = order
        if nvars is None:
            nvars = len(d1) if d1 is not None else 0
        self.nvars = nvars
        self.d1 = d1
        self.d2 = d2
        self.d3 = d3

    # -- construction ---------------------------------------------------------

    @classmethod
    def constant(cls, value, nvars, order=3):
        z1 = np.zeros(nvars)
        z2 = np.zeros((nvars, nvars)) if order >= 2 else None
        z3 = np.zeros((nvars, nvars, nvars)) if order >= 3 else None
        return cls(value, z1, z2, z3, order, nvars)

    @classmethod
    def variable(cls, value, index, nvars, order=3):
        jet = cls.constant(value, nvars, order)
        jet.d1[index] = 1.0
        return jet

    # -- public accessors -----------------------------------------------------

    @property
    def first(self):
        return self.d1

    @property
    def second(self):
        if self.d2 is None:
            return np.zeros((self.nvars, self.nvars))
        return self.d2

    @property
    def third(self):
        if self.d3 is None:
            return np.zeros((self.nvars,) * 3)
        return self.d3

    def partial(self, multi_index):
        """Mixed partial for ``multi_index`` (tuple of 0-based variable indices)."""
        k = len(multi_index)
        if k == 0:
            return self.value
        if k == 1:
            return float(self.first[multi_index[0]])
        if k == 2:
            return float(self.second[tuple(multi_index)])
        if k == 3:
            return float(self.third[tuple(multi_index)])
        raise ValueError("derivatives above order 3 are not carried")

    def is_finite(self):
        parts = [self.value, self.d1, self.d2, self.d3]
        return all(p is None or np.all(np.isfinite(p)) for p in parts)

    def __float__(self):
        # a silent cast would drop every derivative
        raise TypeError("cannot convert a Jet to float; use jets.primal() or method='fd'")

    def __repr__(self):
        return f"Jet(value={self.value!r}, order={self.order}, nvars={self.nvars})"

    # -- arithmetic -----------------------------------------------------------

    def __neg__(self):
        return Jet(
            -self.value,
            -self.d1,
            None if self.d2 is None else -self.d2,
            None if self.d3 is None else -self.d3,
            self.order,
            self.nvars,
        )

    def __pos__(self):
        return self

    def __add__(self, other):
        if not isinstance(other, Jet):
            if not isinstance(other, Real):
                return NotImplemented
            return Jet(self.value + other, self.d1, self.d2, self.d3, self.order, self.nvars)
        return Jet(
            self.value + other.value,
            self.d1 + other.d1,
            None if self.d2 is None else self.d2 + other.d2,
            None if self.d3 is None else self.d3 + other.d3,
            min(self.order, other.order),
            self.nvars,
        )

    __radd__ = __add__

    def __sub__(self, other):
        if not isinstance(other, (Jet, Real)):
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        if not isinstance(other, Real):
            return NotImplemented
        return (-self) + other

    def __mul__(self, other):
        if not isinstance(other, Jet):
            if not isinstance(other, Real):
                return NotImplemented
            c = float(other)
            return Jet(
                self.value * c,
                self.d1 * c,
                None if self.d2 is None else self.d2 * c,
                None if self.d3 is None else self.d3 * c,
                self.order,
                self.nvars,
            )
        a, b = self, other
        order = min(a.order, b.order)
        d1 = a.value * b.d1 + b.value * a.d1
        d2 = d3 = None
        if order >= 2:
            ab = np.outer(a.d1, b.d1)
            d2 = a.value * b.d2 + b.value * a.d2 + ab + ab.T
        if order >= 3:
            d3 = a.value * b.d3 + b.value * a.d3 + _sym3(a.d1, b.d2) + _sym3(b.d1, a.d2)
        return Jet(a.value * b.value, d1, d2, d3, order, a.nvars)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if not isinstance(other, Jet):
            if not isinstance(other, Real):
                return NotImplemented
            return self * (1.0 / float(other))
        return self * other.reciprocal()

    def __rtruediv__(self, other):
        if not isinstance(other, Real):
            return NotImplemented
        return self.reciprocal() * float(other)

    def reciprocal(self):
        u = self.value
        return self.compose(1.0 / u, -1.0 / u**2, 2.0 / u**3, -6.0 / u**4)

    def __pow__(self, p):
        if isinstance(p, Jet):
            return exp(p * log(self))
        if not isinstance(p, Real):
            return NotImplemented
        p = float(p)
        if p == 1.0:
            return self
        if p == 2.0:
            return self * self
        return self.compose(*_power_derivatives(self.value, p))

    def __rpow__(self, base):
        if not isinstance(base, Real):
            return NotImplemented
        return exp(self * math.log(base))

    def compose(self, f0, f1, f2, f3):
        """Apply a univariate function given its derivatives at ``self.value``."""
        order = self.order
        u1 = self.d1
        d1 = f1 * u1
        d2 = d3 = None
        if order >= 2:
            d2 = f1 * self.d2 + f2 * np.outer(u1, u1)
        if order >= 3:
            d3 = f1 * self.d3 + f2 * _sym3(u1, self.d2) + f3 * np.einsum("i,j,k->ijk", u1, u1, u1)
        return Jet(f0, d1, d2, d3, order, self.nvars)


def _power_derivatives(u, p):
    out = []
    coef = 1.0
    for k in range(4):
        if coef == 0.0:
            out.append(0.0)
        else:
            out.append(coef * u ** (p - k))
        coef *= p - k
    return out


# -- generic elementary functions ---------------------------------------------


def sqrt(v):
    if isinstance(v, Jet):
        s = math.sqrt(v.value) if v.value >= 0 else math.nan
        if s == 0.0:
            return v.compose(0.0, math.inf, -math.inf, math.inf)
        return v.compose(s, 0.5 / s, -0.25 / (s * v.value), 0.375 / (s * v.value * v.value))
    return np.sqrt(v)


def exp(v):
    if isinstance(v, Jet):
        e = math.exp(v.value)
        return v.compose(e, e, e, e)
    return np.exp(v)


def log(v):
    if isinstance(v, Jet):
        u = v.value
        lg = math.log(u) if u > 0 else math.nan
        return v.compose(lg, 1.0 / u, -1.0 / u**2, 2.0 / u**3)
    return np.log(v)


def sin(v):
    if isinstance(v, Jet):
        s, c = math.sin(v.value), math.cos(v.value)
        return v.compose(s, c, -s, -c)
    return np.sin(v)


def cos(v):
    if isinstance(v, Jet):
        s, c = math.sin(v.value), math.cos(v.value)
        return v.compose(c, -s, -c, s)
    return np.cos(v)


def fabs(v):
    """Absolute value; derivatives use the sign branch (smooth off zero only)."""
    if isinstance(v, Jet):
        sgn = math.copysign(1.0, v.value) if v.value != 0 else 0.0
        return v.compose(abs(v.value), sgn, 0.0, 0.0)
    return np.abs(v)


def power(base, p):
    if isinstance(base, Jet) or isinstance(p, Jet):
        if not isinstance(base, Jet):
            return p.__rpow__(float(base))
        return base**p
    return np.power(base, p)


def primal(v):
    """Plain value of ``v`` (the jet value, or ``v`` itself)."""
    return v.value if isinstance(v, Jet) else v


# -- drivers --------------------------------------------------------------------


def _check_order(order):
    if order not in (1, 2, 3):
        raise ValueError(f"order must be 1, 2 or 3, got {order!r}")


def evaluate_jet(f: Callable, point: Sequence[float], order: int = 3, method: str = "taylor") -> Jet:
    """All mixed partials of ``f`` at ``point`` up to ``order``.

    ``f`` receives a list of variables (jets on the Taylor path, floats on the
    finite-difference path) and returns a scalar.  ``method="fd"`` is the
    central-difference fallback for evaluators that cannot take jets.
    """
    _check_order(order)
    point = np.asarray(point, dtype=float)
    if point.ndim != 1:
        raise ValueError("point must be a 1-d vector")
    if method == "fd":
        return _fd_jet(f, point, order)
    if method != "taylor":
        raise ValueError(f"unknown method {method!r}")
    m = point.size
    variables = [Jet.variable(point[i], i, m, order) for i in range(m)]
    try:
        with np.errstate(all="ignore"):
            out = f(variables)
    except (ZeroDivisionError, OverflowError, ValueError) as exc:
        raise EvaluationError(f"evaluation failed ({exc})", point) from exc
    if not isinstance(out, Jet):
        out = Jet.constant(float(out), m, order)
    if not out.is_finite():
        raise EvaluationError("non-finite jet", point)
    for level in range(out.order + 1, order + 1):
        # lower-order jets only arise from constant subtrees
        setattr(out, f"d{level}", np.zeros((m,) * level))
    return out


def partial(f: Callable, point: Sequence[float], multi_index: Sequence[int], method: str = "taylor") -> float:
    """Single mixed partial; ``multi_index`` holds 0-based variable indices."""
    multi_index = tuple(int(i) for i in multi_index)
    if len(multi_index) > 3:
        raise ValueError("at most third-order partials are supported")
    order = max(1, len(multi_index))
    return evaluate_jet(f, point, order, method).partial(multi_index)


def jacobian(fmap: Callable, point: Sequence[float]) -> np.ndarray:
    """Jacobian of a vector-valued map, shape ``(len(output), len(point))``."""
    point = np.asarray(point, dtype=float)
    m = point.size
    variables = [Jet.variable(point[i], i, m, 1) for i in range(m)]
    with np.errstate(all="ignore"):
        out = fmap(variables)
    rows = []
    for comp in out:
        rows.append(comp.d1 if isinstance(comp, Jet) else np.zeros(m))
    jac = np.array(rows, dtype=float)
    if not np.all(np.isfinite(jac)):
        raise EvaluationError("non-finite Jacobian", point)
    return jac


# -- finite-difference fallback -------------------------------------------------


def _fd_jet(f, point, order):
    m = point.size
    scale = np.maximum(1.0, np.abs(point))
    h1 = EPS ** (1 / 3) * scale
    h2 = EPS ** (1 / 4) * scale
    h3 = EPS ** (1 / 5) * scale

    def ev(offsets):
        p = point.copy()
        for i, d in offsets:
            p[i] += d
        val = float(f(list(p)))
        if not math.isfinite(val):
            raise EvaluationError("non-finite evaluation", p)
        return val

    f0 = ev(())
    d1 = np.array([(ev([(i, h1[i])]) - ev([(i, -h1[i])])) / (2 * h1[i]) for i in range(m)])
    d2 = d3 = None
    if order >= 2:
        d2 = np.empty((m, m))
        for i in range(m):
            hi = h2[i]
            d2[i, i] = (ev([(i, hi)]) - 2 * f0 + ev([(i, -hi)])) / hi**2
            for j in range(i + 1, m):
                hj = h2[j]
                v = (
                    ev([(i, hi), (j, hj)])
                    - ev([(i, hi), (j, -hj)])
                    - ev([(i, -hi), (j, hj)])
                    + ev([(i, -hi), (j, -hj)])
                ) / (4 * hi * hj)
                d2[i, j] = d2[j, i] = v
    if order >= 3:
        d3 = np.empty((m, m, m))
        for i in range(m):
            for j in range(i, m):
                for k in range(j, m):
                    v = _fd_third(ev, h3, i, j, k)
                    for idx in set(permutations((i, j, k))):
                        d3[idx] = v
    return Jet(f0, d1, d2, d3, order, m)


def _fd_third(ev, h, i, j, k):
    if i == j == k:
        hi = h[i]
        return (ev([(i, 2 * hi)]) - 2 * ev([(i, hi)]) + 2 * ev([(i, -hi)]) - ev([(i, -2 * hi)])) / (2 * hi**3)
    if i == j or j == k:
        # two equal indices a and a distinct index b
        a, b = (i, k) if i == j else (j, i)
        ha, hb = h[a], h[b]
        plus = ev([(a, ha), (b, hb)]) - 2 * ev([(b, hb)]) + ev([(a, -ha), (b, hb)])
        minus = ev([(a, ha), (b, -hb)]) - 2 * ev([(b, -hb)]) + ev([(a, -ha), (b, -hb)])
        return (plus - minus) / (2 * ha * ha * hb)
    total = 0.0
    for si in (1, -1):
        for sj in (1, -1):
            for sk in (1, -1):
                total += si * sj * sk * ev([(i, si * h[i]), (j, sj * h[j]), (k, sk * h[k])])
    return total / (8 * h[i] * h[j] * h[k])
