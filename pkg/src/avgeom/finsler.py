"""Finsler structures and their local tensors.

Everything is computed from a single order-3 jet of the energy ``E = F**2`` in
the joint variables ``(x, y)``:

* fundamental tensor ``g_ij = 1/2 E_{y^i y^j}``
* Cartan tensor ``A_ijk = F/2 * dg_ij/dy^k``
* spray ``G^i = 1/4 g^{il} (y^k E_{y^l x^k} - E_{x^l})`` and nonlinear
  connection ``N^i_j = dG^i/dy^j``
* Chern coefficients
  ``Gamma^i_jk = 1/2 g^{is} (dg_sj/dx^k + dg_sk/dx^j - dg_jk/dx^s)`` where the
  base derivatives are horizontal, ``d/dx^j - N^m_j d/dy^m``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import jets
from .errors import DomainError, EvaluationError, SingularMetricError
from .jets import evaluate_jet

__all__ = [
    "FinslerStructure",
    "MetricAtPoint",
    "CartanAtPoint",
    "SprayData",
    "ConnectionAtPoint",
    "ConvexityReport",
    "CATALOG",
    "make_structure",
    "euclidean",
    "riemannian_constant",
    "riemannian_exp2d",
    "randers_flat",
    "randers_general",
    "minkowski_perturbed_quartic",
    "quartic_degenerate",
    "fundamental_tensor",
    "cartan_tensor",
    "spray",
    "chern_coefficients",
    "levi_civita",
    "check_strong_convexity",
    "sample_directions",
]


@dataclass(frozen=True)
class FinslerStructure:
    """A Finsler function ``F(x, y)`` on one chart.

    ``evaluate`` must be written against :mod:`avgeom.jets` functions so that
    it accepts both floats and jets.
    """

    dim: int
    evaluate: Callable = field(repr=False)
    label: str = "custom"
    params: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.dim < 2:
            raise ValueError("Finsler structures need dimension >= 2")

    def __call__(self, x, y):
        return float(self.evaluate(list(np.asarray(x, float)), list(np.asarray(y, float))))

    @classmethod
    def from_expression(cls, source: str, dim: int):
        """Build a structure from an expression over ``x1..xn`` and ``y1..yn``."""
        from .expr import parse

        expr = parse(source, {"x": dim, "y": dim})
        xs = [f"x{i + 1}" for i in range(dim)]
        ys = [f"y{i + 1}" for i in range(dim)]

        def evaluate(x, y):
            bindings = dict(zip(xs, x))
            bindings.update(zip(ys, y))
            return expr.evaluate(bindings)

        return cls(dim, evaluate, label=source, params={"expr": source, "uses_abs": expr.uses_abs})

    def transformed(self, chart):
        """The same structure expressed in the coordinates of ``chart``.

        ``chart`` maps old coordinates to new ones; the new structure is
        ``F~(x~, y~) = F(phi(x~), Dphi(x~) y~)`` with ``phi`` the inverse map.
        """
        n = self.dim
        inner = self.evaluate

        def evaluate(xt, yt):
            x = chart.inverse(xt)
            jac = chart.inverse_jacobian(xt)
            y = [sum(jac[i][j] * yt[j] for j in range(n)) for i in range(n)]
            return inner(x, y)

        return FinslerStructure(n, evaluate, label=f"{self.label} @ {chart.label}", params=dict(self.params))


# -- catalog ---------------------------------------------------------------------


def _norm2(y):
    total = y[0] * y[0]
    for v in y[1:]:
        total = total + v * v
    return total


def _linear(b, y):
    total = 0.0
    for bi, yi in zip(b, y):
        if bi != 0.0:
            total = total + bi * yi
    return total


def _exp2d_quadratic(x, y):
    return y[0] * y[0] + jets.exp(2.0 * x[0]) * y[1] * y[1]


def euclidean(n: int = 2) -> FinslerStructure:
    return FinslerStructure(n, lambda x, y: jets.sqrt(_norm2(y)), "euclidean", {"n": n})


def riemannian_constant(a) -> FinslerStructure:
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or not np.allclose(a, a.T):
        raise ValueError("riemannian-constant needs a symmetric square matrix")
    if np.linalg.eigvalsh(a).min() <= 0:
        raise ValueError("riemannian-constant needs a positive-definite matrix")
    n = a.shape[0]
    rows = a.tolist()

    def evaluate(x, y):
        total = 0.0
        for i in range(n):
            for j in range(n):
                if rows[i][j] != 0.0:
                    total = total + rows[i][j] * y[i] * y[j]
        return jets.sqrt(total)

    return FinslerStructure(n, evaluate, "riemannian-constant", {"a": rows})


def riemannian_exp2d() -> FinslerStructure:
    return FinslerStructure(2, lambda x, y: jets.sqrt(_exp2d_quadratic(x, y)), "riemannian-exp2d", {})


def randers_flat(b) -> FinslerStructure:
    b = [float(v) for v in b]
    if np.linalg.norm(b) >= 1:
        raise ValueError("randers-flat needs |b| < 1")
    return FinslerStructure(len(b), lambda x, y: jets.sqrt(_norm2(y)) + _linear(b, y), "randers-flat", {"b": b})


def randers_general(b) -> FinslerStructure:
    """Randers metric over ``a = diag(1, exp(2 x1))`` with constant covector ``b``."""
    b = [float(v) for v in b]
    if len(b) != 2:
        raise ValueError("randers-general is two-dimensional")

    def evaluate(x, y):
        # |b|_a < 1 depends on x; it is checked where the structure is used
        return jets.sqrt(_exp2d_quadratic(x, y)) + _linear(b, y)

    return FinslerStructure(2, evaluate, "randers-general", {"b": b})


def minkowski_perturbed_quartic(eps: float = 0.1, n: int = 2, check: bool = True) -> FinslerStructure:
    """Locally Minkowski ``F^2 = |y|^2 + eps * sum(y_i^4) / |y|^2``."""
    eps = float(eps)

    def evaluate(x, y):
        r2 = _norm2(y)
        quartic = y[0] ** 4
        for v in y[1:]:
            quartic = quartic + v**4
        return jets.sqrt(r2 + eps * quartic / r2)

    structure = FinslerStructure(n, evaluate, "minkowski-perturbed-quartic", {"eps": eps, "n": n})
    if check:
        report = check_strong_convexity(structure, np.zeros(n), sample_directions(n, 64))
        if not report.ok:
            raise ValueError(f"minkowski-perturbed-quartic(eps={eps}) is not strongly convex")
    return structure


def quartic_degenerate(n: int = 2) -> FinslerStructure:
    """``(sum y_i^4)^(1/4)``: positively homogeneous but not strongly convex on the axes."""

    def evaluate(x, y):
        quartic = y[0] ** 4
        for v in y[1:]:
            quartic = quartic + v**4
        return quartic**0.25

    return FinslerStructure(n, evaluate, "quartic-degenerate", {"n": n})


CATALOG = {
    "euclidean": euclidean,
    "riemannian-constant": riemannian_constant,
    "riemannian-exp2d": riemannian_exp2d,
    "randers-flat": randers_flat,
    "randers-general": randers_general,
    "minkowski-perturbed-quartic": minkowski_perturbed_quartic,
    "quartic-degenerate": quartic_degenerate,
}


def make_structure(name: str, **params) -> FinslerStructure:
    """Look up a catalog structure by id, e.g. ``make_structure("randers-flat", b=[0.2, 0])``."""
    try:
        factory = CATALOG[name]
    except KeyError:
        raise KeyError(f"unknown catalog metric {name!r}; choose from {sorted(CATALOG)}") from None
    return factory(**params)


# -- local tensors ---------------------------------------------------------------


@dataclass(frozen=True)
class MetricAtPoint:
    g: np.ndarray
    x: np.ndarray
    y: np.ndarray


@dataclass(frozen=True)
class CartanAtPoint:
    A: np.ndarray
    x: np.ndarray
    y: np.ndarray


@dataclass(frozen=True)
class SprayData:
    G: np.ndarray
    N: np.ndarray


@dataclass(frozen=True)
class ConnectionAtPoint:
    """Connection coefficients ``gamma[i, j, k]`` (upper index first)."""

    gamma: np.ndarray
    kind: str
    anchor: tuple


def _check_xy(F, x, y):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != (F.dim,) or y.shape != (F.dim,):
        raise DomainError(f"expected base point and direction of dimension {F.dim}")
    if not np.any(y):
        raise DomainError("the zero tangent vector is excluded (y must be nonzero)")
    return x, y


def _energy(F):
    n = F.dim

    def energy(v):
        val = F.evaluate(v[:n], v[n:])
        return val * val

    return energy


def _vertical_energy(F, x):
    xs = list(x)

    def energy(y):
        val = F.evaluate(xs, y)
        return val * val

    return energy


def _invert(g):
    try:
        ginv = np.linalg.inv(g)
    except np.linalg.LinAlgError as exc:
        raise SingularMetricError("fundamental tensor is singular") from exc
    if not np.all(np.isfinite(ginv)) or np.linalg.cond(g) > 1e14:
        raise SingularMetricError("fundamental tensor is singular")
    return ginv


def fundamental_tensor(F: FinslerStructure, x, y) -> MetricAtPoint:
    x, y = _check_xy(F, x, y)
    jet = evaluate_jet(_vertical_energy(F, x), y, order=2)
    g = 0.5 * jet.second
    return MetricAtPoint(0.5 * (g + g.T), x, y)


def cartan_tensor(F: FinslerStructure, x, y) -> CartanAtPoint:
    x, y = _check_xy(F, x, y)
    jet = evaluate_jet(_vertical_energy(F, x), y, order=3)
    f_val = np.sqrt(jet.value)
    return CartanAtPoint(0.25 * f_val * jet.third, x, y)


class _LocalGeometry:
    """Fundamental tensor, spray and derivatives at one ``(x, y)``."""

    def __init__(self, F, x, y):
        n = F.dim
        jet = evaluate_jet(_energy(F), np.concatenate([x, y]), order=3)
        e1, e2, e3 = jet.first, jet.second, jet.third
        ex = e1[:n]
        exy = e2[n:, :n]  # [l, k] = E_{y^l x^k}
        g = 0.5 * e2[n:, n:]
        self.g = 0.5 * (g + g.T)
        self.ginv = _invert(self.g)
        # [s, j, k] = dg_sj / dx^k and dg_sj / dy^k
        self.dg_dx = 0.5 * e3[n:, n:, :n]
        self.dg_dy = 0.5 * e3[n:, n:, n:]
        b = exy @ y - ex
        self.G = 0.25 * self.ginv @ b
        dginv = -np.einsum("ia,abj,bl->ilj", self.ginv, self.dg_dy, self.ginv)
        # [l, j] = d b_l / d y^j
        db = exy - exy.T + np.einsum("ljk,k->lj", e3[n:, n:, :n], y)
        self.N = 0.25 * (np.einsum("ilj,l->ij", dginv, b) + self.ginv @ db)

    def chern(self):
        # horizontal derivative: delta g_sj / delta x^k
        dg = self.dg_dx - np.einsum("mk,sjm->sjk", self.N, self.dg_dy)
        lowered = dg + dg.transpose(0, 2, 1) - dg.transpose(2, 1, 0)
        # lowered[s, j, k] = dg_sj/dx^k + dg_sk/dx^j - dg_jk/dx^s
        return 0.5 * np.einsum("is,sjk->ijk", self.ginv, lowered)


def spray(F: FinslerStructure, x, y) -> SprayData:
    x, y = _check_xy(F, x, y)
    geo = _LocalGeometry(F, x, y)
    return SprayData(geo.G, geo.N)


def chern_coefficients(F: FinslerStructure, x, y) -> ConnectionAtPoint:
    x, y = _check_xy(F, x, y)
    geo = _LocalGeometry(F, x, y)
    return ConnectionAtPoint(geo.chern(), "chern", (tuple(x), tuple(y)))


def levi_civita(h: Callable, x, step: float = 1e-4) -> ConnectionAtPoint:
    """Christoffel symbols of a metric field given pointwise.

    Base derivatives of ``h`` use central differences with ``step``.
    """
    if step <= 0:
        raise ValueError("step must be positive")
    x = np.asarray(x, dtype=float)
    n = x.size

    def metric(p):
        m = np.asarray(h(p), dtype=float)
        return 0.5 * (m + m.T)

    h0 = metric(x)
    hinv = _invert(h0)
    dh = np.empty((n, n, n))  # [a, b, c] = d h_ab / d x^c
    for c in range(n):
        e = np.zeros(n)
        e[c] = step
        dh[:, :, c] = (metric(x + e) - metric(x - e)) / (2 * step)
    if not np.all(np.isfinite(dh)):
        raise EvaluationError("non-finite metric derivative", x)
    lowered = dh + dh.transpose(0, 2, 1) - dh.transpose(2, 1, 0)
    gamma = 0.5 * np.einsum("is,sjk->ijk", hinv, lowered)
    return ConnectionAtPoint(gamma, "levi-civita", (tuple(x),))


# -- admissibility ---------------------------------------------------------------


@dataclass(frozen=True)
class ConvexityReport:
    ok: bool
    min_eigenvalue: float
    worst_direction: np.ndarray


def sample_directions(n: int, count: int | None = None) -> np.ndarray:
    """Deterministic unit directions: equally spaced angles in 2-d, the 26
    cube-neighbour directions in 3-d (Fibonacci points for other counts)."""
    if n == 2:
        count = 16 if count is None else count
        theta = 2 * np.pi * np.arange(count) / count
        return np.column_stack([np.cos(theta), np.sin(theta)])
    if n == 3 and count in (None, 26):
        grid = np.array([(a, b, c) for a in (-1, 0, 1) for b in (-1, 0, 1) for c in (-1, 0, 1)], dtype=float)
        grid = grid[np.any(grid != 0, axis=1)]
        return grid / np.linalg.norm(grid, axis=1)[:, None]
    count = 2 * n * n if count is None else count
    if n == 3:
        k = np.arange(count) + 0.5
        z = 1 - 2 * k / count
        phi = np.pi * (1 + 5**0.5) * k
        r = np.sqrt(1 - z * z)
        return np.column_stack([r * np.cos(phi), r * np.sin(phi), z])
    rng = np.random.default_rng(0)
    pts = rng.standard_normal((count, n))
    return pts / np.linalg.norm(pts, axis=1)[:, None]


def check_strong_convexity(F: FinslerStructure, x, directions: Sequence, tol: float = 1e-8) -> ConvexityReport:
    directions = np.asarray(directions, dtype=float)
    if directions.ndim != 2 or len(directions) == 0:
        raise ValueError("need a nonempty sample of directions")
    worst, worst_dir = np.inf, directions[0]
    for u in directions:
        try:
            lam = np.linalg.eigvalsh(fundamental_tensor(F, x, u).g)[0]
        except (EvaluationError, DomainError):
            lam = -np.inf
        if lam < worst:
            worst, worst_dir = lam, u
    return ConvexityReport(bool(worst > tol), float(worst), worst_dir)
