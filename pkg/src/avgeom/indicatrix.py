"""Quadrature on the indicatrix ``I_x = {y : F(x, y) = 1}``.

The indicatrix is traversed as a radial graph over the Euclidean unit sphere,
``u -> u / F(x, u)``.  Node weights carry the Riemannian area element that the
fundamental tensor ``g(x, y)`` induces on the hypersurface, so
``sum(weights)`` approximates ``vol(I_x)``.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import jets
from .errors import DegenerateMeasureError, DomainError, EvaluationError
from .finsler import FinslerStructure, fundamental_tensor

__all__ = [
    "IndicatrixQuadrature",
    "indicatrix_point",
    "build_quadrature",
    "default_order",
    "integrate_scalar",
    "integrate_tensor",
]

DEFAULT_ORDER = {2: 128, 3: (32, 64)}
ORDER_ENV = "AVGEOM_DEFAULT_ORDER"


@dataclass(frozen=True)
class IndicatrixQuadrature:
    """Nodes ``y_a`` on ``I_x`` with positive weights.

    ``metrics`` caches ``g(x, y_a)`` for every node since the weights already
    needed it.
    """

    x: np.ndarray
    nodes: np.ndarray
    weights: np.ndarray
    order: object
    metrics: np.ndarray

    @property
    def volume(self) -> float:
        return float(np.sum(self.weights))

    def __len__(self):
        return len(self.weights)


def indicatrix_point(F: FinslerStructure, x, u) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    if not np.any(u):
        raise DomainError("direction must be nonzero")
    value = F(x, u)
    if not math.isfinite(value) or value <= 0:
        raise EvaluationError(f"F(x, u) = {value} is not a positive length", u)
    return u / value


def default_order(n: int):
    """Default resolution, overridable through ``AVGEOM_DEFAULT_ORDER``."""
    env = os.environ.get(ORDER_ENV)
    if env:
        parts = [int(p) for p in env.replace("x", ",").split(",") if p.strip()]
        if n == 2 or len(parts) == 1:
            return parts[0] if n == 2 else (parts[0], 2 * parts[0])
        return tuple(parts[:2])
    if n not in DEFAULT_ORDER:
        raise ValueError(f"no quadrature rule for dimension {n}")
    return DEFAULT_ORDER[n]


def _parameter_rule(n, order):
    """Parameter nodes, parameter weights and the sphere map ``params -> u``."""
    if n == 2:
        if isinstance(order, (tuple, list)):
            order = order[0]
        count = int(order)
        if count < 3:
            raise ValueError("order must be >= 3 in dimension 2")
        theta = 2 * np.pi * np.arange(count) / count
        weights = np.full(count, 2 * np.pi / count)

        def sphere(p):
            return [jets.cos(p[0]), jets.sin(p[0])]

        return theta[:, None], weights, sphere, count
    if n == 3:
        if isinstance(order, (tuple, list)):
            n_lat, n_lon = int(order[0]), int(order[1])
        else:
            n_lat, n_lon = int(order), 2 * int(order)
        if n_lat < 2 or n_lon < 3:
            raise ValueError("order too small for dimension 3")
        z, wz = np.polynomial.legendre.leggauss(n_lat)
        phi = 2 * np.pi * np.arange(n_lon) / n_lon
        zz, pp = np.meshgrid(z, phi, indexing="ij")
        params = np.column_stack([zz.ravel(), pp.ravel()])
        weights = np.outer(wz, np.full(n_lon, 2 * np.pi / n_lon)).ravel()

        def sphere(p):
            r = jets.sqrt(1.0 - p[0] * p[0])
            return [r * jets.cos(p[1]), r * jets.sin(p[1]), p[0]]

        return params, weights, sphere, (n_lat, n_lon)
    raise ValueError(f"quadrature is implemented for dimensions 2 and 3, not {n}")


def build_quadrature(F: FinslerStructure, x, order=None, convexity_tol: float = 1e-8) -> IndicatrixQuadrature:
    """Product rule on ``I_x``: trapezoid in angle (2-d) or Gauss-Legendre in
    ``cos(colatitude)`` times trapezoid in longitude (3-d)."""
    x = np.asarray(x, dtype=float)
    n = F.dim
    if x.shape != (n,):
        raise DomainError(f"base point must have dimension {n}")
    if order is None:
        order = default_order(n)
    params, pweights, sphere, order = _parameter_rule(n, order)
    xs = list(x)

    def embedding(p):
        u = sphere(p)
        scale = F.evaluate(xs, u)
        return [ui / scale for ui in u]

    nodes = np.empty((len(params), n))
    weights = np.empty(len(params))
    metrics = np.empty((len(params), n, n))
    for a, p in enumerate(params):
        u = np.array([float(jets.primal(c)) for c in sphere(list(p))])
        y = indicatrix_point(F, x, u)
        jac = jets.jacobian(embedding, p)  # (n, n - 1)
        g = fundamental_tensor(F, x, y).g
        if np.linalg.eigvalsh(g)[0] <= convexity_tol:
            raise DegenerateMeasureError(f"fundamental tensor not positive definite at node {a} (y={y.tolist()})", a)
        area = math.sqrt(max(np.linalg.det(jac.T @ g @ jac), 0.0))
        nodes[a], weights[a], metrics[a] = y, area * pweights[a], g
    return IndicatrixQuadrature(x, nodes, weights, order, metrics)


def _check_finite(values):
    if not np.all(np.isfinite(values)):
        raise EvaluationError("non-finite integrand on the indicatrix")
    return values


def integrate_tensor(f: Callable, q: IndicatrixQuadrature) -> np.ndarray:
    """Un-normalised integral ``sum_a w_a f(y_a)`` of an array-valued field."""
    values = _check_finite(np.array([np.asarray(f(y), dtype=float) for y in q.nodes]))
    return np.tensordot(q.weights, values, axes=1)


def integrate_scalar(f: Callable, q: IndicatrixQuadrature) -> float:
    return float(integrate_tensor(f, q))
