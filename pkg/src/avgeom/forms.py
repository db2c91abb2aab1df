"""Differential forms on the trivial bundle ``M x R^k`` and integration along
the fiber.

A form is a list of terms ``c(x, t) dx^I ^ dt^J`` (base factors first) with
strictly increasing 0-based index tuples ``I`` and ``J``.  Integration along
the fiber keeps only terms with the full fiber factor ``dt^0 ^ ... ^ dt^(k-1)``
and replaces them by ``(integral of c over R^k) dx^I``; every other term maps
to zero.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from itertools import product
from typing import Callable

import numpy as np

from . import jets
from .errors import EvaluationError, TruncationError

__all__ = [
    "FormTerm",
    "FiberForm",
    "fiber_integrate",
    "exterior_derivative",
    "exterior_derivative_eval",
    "base_exterior_derivative",
    "commutation_residual",
    "catalog_forms",
]

DEFAULT_RADIUS = 8.0
DEFAULT_ORDER = 64
BOUNDARY_WARN = 1e-14
BOUNDARY_FAIL = 1e-10


def _sort_with_sign(indices):
    """Sort a wedge of 1-forms; returns (sign, sorted tuple) or (0, None) on repeats."""
    if len(set(indices)) != len(indices):
        return 0, None
    idx = list(indices)
    sign = 1
    for i in range(len(idx)):
        for j in range(len(idx) - 1 - i):
            if idx[j] > idx[j + 1]:
                idx[j], idx[j + 1] = idx[j + 1], idx[j]
                sign = -sign
    return sign, tuple(idx)


@dataclass(frozen=True)
class FormTerm:
    """``coefficient(x, t) dx^base ^ dt^fiber``; ``coefficient`` takes two
    sequences and should accept jets."""

    base: tuple
    fiber: tuple
    coefficient: Callable
    radius: float = DEFAULT_RADIUS

    def __post_init__(self):
        for name in ("base", "fiber"):
            idx = tuple(getattr(self, name))
            if any(b <= a for a, b in zip(idx, idx[1:])):
                raise ValueError(f"{name} multi-index must be strictly increasing, got {idx}")
            object.__setattr__(self, name, idx)

    @property
    def degree(self):
        return len(self.base) + len(self.fiber)


@dataclass(frozen=True)
class FiberForm:
    base_dim: int
    fiber_dim: int
    terms: tuple = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "terms", tuple(self.terms))
        for term in self.terms:
            if term.base and (term.base[0] < 0 or term.base[-1] >= self.base_dim):
                raise ValueError(f"base index out of range in {term.base}")
            if term.fiber and (term.fiber[0] < 0 or term.fiber[-1] >= self.fiber_dim):
                raise ValueError(f"fiber index out of range in {term.fiber}")

    @property
    def full_fiber(self):
        return tuple(range(self.fiber_dim))

    def coefficients_at(self, x, t) -> dict:
        """Coefficient table ``{(base, fiber): value}`` at one point of the total space."""
        table = {}
        for term in self.terms:
            key = (term.base, term.fiber)
            table[key] = table.get(key, 0.0) + float(term.coefficient(list(x), list(t)))
        return table


def _check_boundary(term, x, k, samples=9):
    r = term.radius
    ticks = np.linspace(-r, r, samples)
    worst = 0.0
    for axis in range(k):
        for rest in product(ticks, repeat=k - 1):
            for edge in (-r, r):
                t = list(rest[:axis]) + [edge] + list(rest[axis:])
                worst = max(worst, abs(float(term.coefficient(list(x), t))))
    if worst > BOUNDARY_FAIL:
        raise TruncationError(f"coefficient is {worst:.3g} on the boundary of [-{r}, {r}]^{k}; not decaying")
    if worst > BOUNDARY_WARN:
        warnings.warn(f"fiber coefficient reaches {worst:.3g} at the truncation boundary", RuntimeWarning)


def _integrate_term(term, x, k, order):
    nodes, weights = np.polynomial.legendre.leggauss(order)
    nodes = nodes * term.radius
    weights = weights * term.radius
    total = 0.0
    for combo in product(range(order), repeat=k):
        t = [nodes[c] for c in combo]
        w = math.prod(weights[c] for c in combo)
        total += w * float(term.coefficient(list(x), t))
    if not math.isfinite(total):
        raise EvaluationError("non-finite fiber integral", x)
    return float(total)


def fiber_integrate(form: FiberForm, x, order: int = DEFAULT_ORDER) -> dict:
    """Coefficient table ``{base_index: value}`` of the integrated base form at ``x``.

    Only terms with the full fiber factor contribute; the table contains every
    base multi-index of such terms (possibly with value 0).
    """
    x = np.asarray(x, dtype=float)
    k = form.fiber_dim
    full = form.full_fiber
    table = {}
    for term in form.terms:
        if term.fiber != full:
            continue
        _check_boundary(term, x, k)
        table[term.base] = table.get(term.base, 0.0) + _integrate_term(term, x, k, order)
    return table


def _partial_coefficient(coefficient, n, var, step=None):
    """Coefficient of ``d/dvar`` applied to ``coefficient`` (jets, or central
    differences with ``step`` when the coefficient rejects jets)."""

    def derivative(x, t):
        point = [float(v) for v in x] + [float(v) for v in t]
        split = lambda v: (v[:n], v[n:])
        fn = lambda v: coefficient(*split(v))
        if step is None:
            try:
                return jets.evaluate_jet(fn, point, order=1).first[var]
            except (TypeError, AttributeError):
                pass
        h = step if step is not None else 1e-5 * max(1.0, abs(point[var]))
        up, down = list(point), list(point)
        up[var] += h
        down[var] -= h
        return (float(fn(up)) - float(fn(down))) / (2 * h)

    return derivative


def exterior_derivative(form: FiberForm, step: float | None = None) -> FiberForm:
    """``d`` of the form on the total space, as another :class:`FiberForm`.

    ``d(c dx^I ^ dt^J) = sum_a dc/dx^a dx^a ^ dx^I ^ dt^J
    + (-1)^|I| sum_b dc/dt^b dx^I ^ dt^b ^ dt^J``.
    """
    n, k = form.base_dim, form.fiber_dim
    terms = []
    for term in form.terms:
        for a in range(n):
            sign, base = _sort_with_sign((a,) + term.base)
            if sign:
                d = _partial_coefficient(term.coefficient, n, a, step)
                terms.append(FormTerm(base, term.fiber, _scaled(d, sign), term.radius))
        for b in range(k):
            sign, fiber = _sort_with_sign((b,) + term.fiber)
            if sign:
                sign *= (-1) ** len(term.base)
                d = _partial_coefficient(term.coefficient, n, n + b, step)
                terms.append(FormTerm(term.base, fiber, _scaled(d, sign), term.radius))
    return FiberForm(n, k, terms)


def _scaled(fn, sign):
    if sign == 1:
        return fn
    return lambda x, t: -fn(x, t)


def exterior_derivative_eval(form: FiberForm, x, t, step: float | None = None) -> dict:
    """Coefficients of ``d form`` at the point ``(x, t)``, zero entries dropped."""
    table = exterior_derivative(form, step).coefficients_at(x, t)
    return {key: value for key, value in table.items() if value != 0.0}


def base_exterior_derivative(fn: Callable, x, step: float) -> dict:
    """``d_M`` of the base form ``x -> {base_index: value}`` at ``x`` by
    central differences of ``fn`` with ``step``."""
    x = np.asarray(x, dtype=float)
    table = {}
    for a in range(x.size):
        e = np.zeros_like(x)
        e[a] = step
        up, down = fn(x + e), fn(x - e)
        for base in set(up) | set(down):
            sign, new = _sort_with_sign((a,) + base)
            if not sign:
                continue
            deriv = (up.get(base, 0.0) - down.get(base, 0.0)) / (2 * step)
            table[new] = table.get(new, 0.0) + sign * deriv
    return table


def commutation_residual(form: FiberForm, x, order: int = DEFAULT_ORDER, step: float = 1e-4) -> float:
    """``max |fiber_integrate(d form) - d(fiber_integrate(form))|`` at ``x``."""
    lhs = fiber_integrate(exterior_derivative(form), x, order)
    rhs = base_exterior_derivative(lambda p: fiber_integrate(form, p, order), x, step)
    keys = set(lhs) | set(rhs)
    return max((abs(lhs.get(key, 0.0) - rhs.get(key, 0.0)) for key in keys), default=0.0)


def catalog_forms() -> dict:
    """Smooth, decaying test forms on ``R^2 x R`` used by the invariant suite."""
    gauss = lambda t: jets.exp(-(t[0] * t[0]))
    return {
        "sin-gauss": FiberForm(2, 1, [FormTerm((), (0,), lambda x, t: jets.sin(x[0]) * gauss(t))]),
        "closed-base": FiberForm(2, 1, [FormTerm((0,), (), lambda x, t: 2.0), FormTerm((0, 1), (), lambda x, t: 3.0)]),
        "linear-gauss": FiberForm(2, 1, [FormTerm((), (0,), lambda x, t: x[0] * gauss(t))]),
    }
