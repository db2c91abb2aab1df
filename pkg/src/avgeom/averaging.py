"""Averaging over the indicatrix with the induced measure.

``<A>(x) = 1/vol(I_x) * integral over I_x of A(x, y) dmu(y)``, applied to the
fundamental tensor, the Chern coefficients and (1,1)-operator families, plus
the deviation tensors that measure how far a structure is from its averages.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import jets
from .errors import DomainError, EvaluationError, SingularMetricError
from .finsler import (
    FinslerStructure,
    chern_coefficients,
    fundamental_tensor,
    levi_civita,
    sample_directions,
)
from .indicatrix import IndicatrixQuadrature, build_quadrature, indicatrix_point, integrate_tensor

__all__ = [
    "AveragedMetric",
    "AveragedConnection",
    "OperatorFamily",
    "DeviationReport",
    "ChartMap",
    "average_metric",
    "average_connection",
    "average_operator_family",
    "average_field",
    "chern_on_nodes",
    "deviation_tensors",
    "homotopy_check",
    "covariance_check",
    "probe_directions",
]

TOL_RIEMANNIAN = 1e-6
TOL_BERWALD = 1e-5


@dataclass(frozen=True)
class AveragedMetric:
    h: np.ndarray
    x: np.ndarray
    order: object


@dataclass(frozen=True)
class AveragedConnection:
    gamma: np.ndarray
    x: np.ndarray


@dataclass(frozen=True)
class OperatorFamily:
    """A field ``y -> A(y)`` of n x n matrices over the indicatrix at ``x``."""

    apply: Callable
    x: np.ndarray = None

    def __call__(self, y):
        return self.apply(y)


def _check_quadrature(F, x, q):
    x = np.asarray(x, dtype=float)
    if not np.array_equal(x, q.x):
        raise DomainError("quadrature was built at a different base point")
    return x


def average_field(values: np.ndarray, q: IndicatrixQuadrature) -> np.ndarray:
    """Weighted mean of per-node values (leading axis indexes the nodes)."""
    values = np.asarray(values, dtype=float)
    if not np.all(np.isfinite(values)):
        raise EvaluationError("non-finite values on the indicatrix")
    return np.tensordot(q.weights, values, axes=1) / q.volume


def average_metric(F: FinslerStructure, x, q: IndicatrixQuadrature) -> AveragedMetric:
    x = _check_quadrature(F, x, q)
    h = average_field(q.metrics, q)
    return AveragedMetric(0.5 * (h + h.T), x, q.order)


def chern_on_nodes(F: FinslerStructure, q: IndicatrixQuadrature) -> np.ndarray:
    """Chern coefficients at every node, shape ``(len(q), n, n, n)``."""
    return np.array([chern_coefficients(F, q.x, y).gamma for y in q.nodes])


def average_connection(F: FinslerStructure, x, q: IndicatrixQuadrature, node_values=None) -> AveragedConnection:
    x = _check_quadrature(F, x, q)
    if node_values is None:
        node_values = chern_on_nodes(F, q)
    return AveragedConnection(average_field(node_values, q), x)


def average_operator_family(A, q: IndicatrixQuadrature) -> np.ndarray:
    """``(1/vol) sum_a w_a A(y_a)`` for a callable or :class:`OperatorFamily`."""
    return integrate_tensor(A, q) / q.volume


def probe_directions(F: FinslerStructure, x, count: int | None = None) -> np.ndarray:
    """Sphere sample (16 in 2-d, 26 in 3-d by default) projected onto ``I_x``."""
    return np.array([indicatrix_point(F, x, u) for u in sample_directions(F.dim, count)])


@dataclass
class DeviationReport:
    """Deviation tensors of a structure from its averages at ``x``.

    ``delta_g`` and ``delta_gamma`` are sampled at ``probes``; the callables
    :meth:`delta_g_at` and :meth:`delta_gamma_at` evaluate them anywhere.
    """

    F: FinslerStructure = field(repr=False)
    x: np.ndarray
    volume: float
    averaged_metric: np.ndarray
    averaged_connection: np.ndarray
    probes: np.ndarray
    delta_g: np.ndarray
    delta_gamma: np.ndarray
    T: np.ndarray
    levi_civita: np.ndarray
    norms: dict
    delta_g_operator_norm: float
    flags: dict
    tolerances: dict
    checks: dict

    def delta_g_at(self, y):
        return fundamental_tensor(self.F, self.x, y).g - self.averaged_metric

    def delta_gamma_at(self, y):
        return chern_coefficients(self.F, self.x, y).gamma - self.averaged_connection


def _operator_norm(delta, h):
    # largest |lambda| of delta v = lambda h v
    chol = np.linalg.cholesky(h)
    inv = np.linalg.inv(chol)
    return float(np.max(np.abs(np.linalg.eigvalsh(inv @ delta @ inv.T))))


def averaged_metric_field(F: FinslerStructure, order) -> Callable:
    """``x -> <g>(x)``, each base point getting its own quadrature."""

    def h(point):
        q = build_quadrature(F, point, order)
        return average_metric(F, point, q).h

    return h


def deviation_tensors(
    F: FinslerStructure,
    x,
    q: IndicatrixQuadrature,
    probes: Sequence | None = None,
    base_step: float | None = None,
    tol_riemannian: float = TOL_RIEMANNIAN,
    tol_berwald: float = TOL_BERWALD,
) -> DeviationReport:
    """Compute ``delta g``, ``delta Gamma`` and ``T`` and classify the structure.

    ``T`` needs base derivatives of ``<g>``; they are central differences with
    step ``base_step`` (default ``1e-4 * (1 + |x|)``) over displaced points.
    """
    x = _check_quadrature(F, x, q)
    if probes is None:
        probes = probe_directions(F, x)
    else:
        probes = np.array([indicatrix_point(F, x, u) for u in np.asarray(probes, float)])
        if len(probes) == 0:
            raise ValueError("need at least one probe direction")
    if base_step is None:
        base_step = 1e-4 * (1 + np.linalg.norm(x))

    node_gamma = chern_on_nodes(F, q)
    h = average_metric(F, x, q).h
    gamma_avg = average_connection(F, x, q, node_gamma).gamma

    delta_g = np.array([fundamental_tensor(F, x, y).g - h for y in probes])
    delta_gamma = np.array([chern_coefficients(F, x, y).gamma - gamma_avg for y in probes])
    lc = levi_civita(averaged_metric_field(F, q.order), x, base_step).gamma
    T = lc - gamma_avg

    frob_g = float(np.max(np.sqrt(np.sum(delta_g**2, axis=(1, 2)))))
    frob_gamma = float(np.max(np.sqrt(np.sum(delta_gamma**2, axis=(1, 2, 3)))))
    op_norm = max(_operator_norm(d, h) for d in delta_g)

    # averages of the deviations over the same quadrature, and of T itself
    checks = {
        "mean_delta_g_max": float(np.max(np.abs(average_field(q.metrics - h, q)))),
        "mean_delta_gamma_max": float(np.max(np.abs(average_field(node_gamma - gamma_avg, q)))),
        "T_average_deviation_max": float(np.max(np.abs(average_operator_family(lambda y: T, q) - T))),
    }
    norms = {
        "delta_g_sup_frobenius": frob_g,
        "delta_gamma_sup_frobenius": frob_gamma,
        "T_frobenius": float(np.sqrt(np.sum(T**2))),
    }
    flags = {
        "riemannian": frob_g <= tol_riemannian,
        "berwald": frob_gamma <= tol_berwald,
        "delta_g_norm_at_least_one": op_norm >= 1.0,
    }
    return DeviationReport(
        F=F,
        x=x,
        volume=q.volume,
        averaged_metric=h,
        averaged_connection=gamma_avg,
        probes=probes,
        delta_g=delta_g,
        delta_gamma=delta_gamma,
        T=T,
        levi_civita=lc,
        norms=norms,
        delta_g_operator_norm=op_norm,
        flags=flags,
        tolerances={"riemannian": tol_riemannian, "berwald": tol_berwald, "base_step": base_step},
        checks=checks,
    )


def homotopy_check(F: FinslerStructure, x, q: IndicatrixQuadrature, t_values: Sequence[float]) -> float:
    """Largest deviation of ``<(1 - t) Gamma + t <Gamma>>`` from ``<Gamma>``."""
    x = _check_quadrature(F, x, q)
    t_values = [float(t) for t in t_values]
    if any(t < 0 or t > 1 for t in t_values):
        raise ValueError("t values must lie in [0, 1]")
    node_gamma = chern_on_nodes(F, q)
    gamma_avg = average_field(node_gamma, q)
    residual = 0.0
    for t in t_values:
        blended = (1 - t) * node_gamma + t * gamma_avg[None]
        residual = max(residual, float(np.max(np.abs(average_field(blended, q) - gamma_avg))))
    return residual


# -- change of chart ---------------------------------------------------------------


@dataclass(frozen=True)
class ChartMap:
    """Coordinate change ``x~ = forward(x)`` with inverse ``x = inverse(x~)``.

    ``inverse_jacobian(x~)`` returns ``d x / d x~`` as nested lists.  All three
    callables must accept jets (see :mod:`avgeom.jets`).
    """

    forward: Callable
    inverse: Callable
    inverse_jacobian: Callable
    label: str = "chart"

    @classmethod
    def identity(cls, n: int):
        eye = np.eye(n).tolist()
        return cls(lambda x: list(x), lambda x: list(x), lambda x: eye, "identity")

    @classmethod
    def linear(cls, matrix):
        a = np.asarray(matrix, dtype=float)
        if abs(np.linalg.det(a)) < 1e-12:
            raise SingularMetricError("linear chart map is not invertible")
        ainv = np.linalg.inv(a)
        rows, inv_rows = a.tolist(), ainv.tolist()

        def apply(m):
            return lambda x: [sum(mij * xj for mij, xj in zip(row, x)) for row in m]

        return cls(apply(rows), apply(inv_rows), lambda x: inv_rows, "linear")

    @classmethod
    def shear(cls, c: float = 0.1):
        """``(x1, x2) -> (x1 + c x2^2, x2)``."""
        c = float(c)
        return cls(
            lambda x: [x[0] + c * x[1] * x[1], x[1]],
            lambda x: [x[0] - c * x[1] * x[1], x[1]],
            lambda x: [[1.0, -2.0 * c * x[1]], [0.0, 1.0]],
            f"shear({c})",
        )


def covariance_check(F: FinslerStructure, chart: ChartMap, x, order=None) -> float:
    """Compare the averaged connection computed in a new chart against the
    connection transformation law applied to the one computed in the old chart."""
    x = np.asarray(x, dtype=float)
    n = F.dim
    xt = np.array([float(jets.primal(v)) for v in chart.forward(list(x))])
    q = build_quadrature(F, x, order)
    gamma = average_connection(F, x, q).gamma

    Ft = F.transformed(chart)
    qt = build_quadrature(Ft, xt, q.order)
    gamma_t = average_connection(Ft, xt, qt).gamma

    dx_dxt = np.array(chart.inverse_jacobian(list(xt)), dtype=float)
    if abs(np.linalg.det(dx_dxt)) < 1e-12:
        raise SingularMetricError("chart map has a singular Jacobian")
    dxt_dx = np.linalg.inv(dx_dxt)
    second = np.empty((n, n, n))  # [i, b, c] = d^2 x^i / dx~^b dx~^c
    for i in range(n):
        second[i] = jets.evaluate_jet(lambda v, i=i: chart.inverse(v)[i], xt, order=2).second
    predicted = np.einsum("ai,jb,kc,ijk->abc", dxt_dx, dx_dxt, dx_dxt, gamma) + np.einsum(
        "ai,ibc->abc", dxt_dx, second
    )
    return float(np.max(np.abs(gamma_t - predicted)))
