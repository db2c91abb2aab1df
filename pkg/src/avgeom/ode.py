"""Averaging principle for slow-fast systems on ``U x T^k``.

The perturbed system ``phi' = omega(I) + eps f(I, phi)``, ``I' = eps g(I, phi)``
is compared against the averaged system ``J' = eps gbar(J)``, where ``gbar`` is
the mean of ``g`` over the k-torus.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np

from .errors import DomainError, EvaluationError, IntegrationError

__all__ = [
    "TorusSystem",
    "Trajectory",
    "average_rhs",
    "integrate_perturbed",
    "integrate_averaged",
    "compare",
    "epsilon_sweep",
    "rk4",
    "default_dt",
]

DEFAULT_GRID = 64


@dataclass(frozen=True)
class TorusSystem:
    """Slow-fast system; ``g(I, phi)`` returns ``m`` components (scalars or
    arrays broadcasting against the angle arrays)."""

    k: int
    m: int
    omega: Callable
    g: Callable
    epsilon: float
    f: Callable | None = None
    label: str = "torus-system"

    def __post_init__(self):
        if self.k < 1 or self.m < 1:
            raise ValueError("torus and slow dimensions must be positive")
        if self.epsilon < 0:
            raise ValueError("epsilon must be non-negative")

    def with_epsilon(self, epsilon):
        return TorusSystem(self.k, self.m, self.omega, self.g, epsilon, self.f, self.label)

    def check_periodic(self, samples: int = 8, seed: int = 0, tol: float = 1e-9) -> bool:
        rng = np.random.default_rng(seed)
        for _ in range(samples):
            I = rng.uniform(-1, 1, self.m)
            phi = rng.uniform(0, 2 * np.pi, self.k)
            for axis in range(self.k):
                shifted = phi.copy()
                shifted[axis] += 2 * np.pi
                for fn, dim in ((self.g, self.m), (self.f, self.k)):
                    if fn is None:
                        continue
                    a = _components(fn(I, phi), dim)
                    b = _components(fn(I, shifted), dim)
                    if np.max(np.abs(a - b)) > tol * max(1.0, np.max(np.abs(a))):
                        return False
        return True


@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.states = np.asarray(self.states, dtype=float)
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("trajectory times must be strictly increasing")

    @property
    def slow(self) -> np.ndarray:
        return self.states[:, : self.meta.get("slow_dim", self.states.shape[1])]


def _components(value, dim, width=None):
    """Normalise an evaluator result to shape ``(dim,)`` or ``(dim, width)``."""
    if np.ndim(value) == 0 and dim == 1:
        value = [value]
    if isinstance(value, (list, tuple)):
        if len(value) != dim:
            raise ValueError(f"expected {dim} components, got {len(value)}")
        if width is None:
            return np.array([float(v) for v in value])
        return np.array([np.broadcast_to(np.asarray(v, float), (width,)) for v in value])
    arr = np.asarray(value, dtype=float)
    if width is None:
        return arr.reshape(dim)
    if arr.shape == (dim,):
        return np.repeat(arr[:, None], width, axis=1)
    if dim == 1 and arr.shape == (width,):
        return arr[None, :]
    return np.broadcast_to(arr, (dim, width))


@lru_cache(maxsize=16)
def _torus_grid(k, grid_order):
    nodes = 2 * np.pi * np.arange(grid_order) / grid_order
    mesh = np.meshgrid(*([nodes] * k), indexing="ij")
    grid = np.array([m.ravel() for m in mesh])  # (k, grid_order**k)
    grid.flags.writeable = False
    return grid


def average_rhs(sys: TorusSystem, J, grid_order: int = DEFAULT_GRID) -> np.ndarray:
    """Tensor-product trapezoid mean of ``g(J, .)`` over the k-torus."""
    if grid_order < 4:
        raise ValueError("grid_order must be >= 4")
    J = np.asarray(J, dtype=float).reshape(sys.m)
    grid = _torus_grid(sys.k, grid_order)
    width = grid.shape[1]
    try:
        with np.errstate(all="ignore"):
            raw = sys.g(J, grid)
            if type(raw) is list and len(raw) == sys.m and all(getattr(v, "shape", None) == (width,) for v in raw):
                values = np.array(raw)  # common case: one array per component
            else:
                values = _components(raw, sys.m, width)
    except (TypeError, ValueError):
        values = np.array([_components(sys.g(J, grid[:, c]), sys.m) for c in range(width)]).T
    if not np.isfinite(values).all():
        raise EvaluationError("non-finite slow right-hand side on the torus grid", J)
    mean = values.sum(axis=1) / width
    # angle-independent components come back exactly
    flat = values.max(axis=1) == values.min(axis=1)
    if flat.any():
        mean[flat] = values[flat, 0]
    return mean


def rk4(rhs: Callable, state0, t_end: float, dt: float, label: str = "") -> Trajectory:
    """Classical fixed-step Runge-Kutta; the step is shrunk to land on ``t_end``."""
    if dt <= 0 or t_end <= 0:
        raise ValueError("dt and t_end must be positive")
    steps = max(1, math.ceil(t_end / dt - 1e-9))
    h = t_end / steps
    state = np.asarray(state0, dtype=float).copy()
    states = np.empty((steps + 1, state.size))
    states[0] = state
    for s in range(steps):
        t = s * h
        with np.errstate(over="ignore", invalid="ignore"):
            k1 = rhs(t, state)
            k2 = rhs(t + h / 2, state + h / 2 * k1)
            k3 = rhs(t + h / 2, state + h / 2 * k2)
            k4 = rhs(t + h, state + h * k3)
            state = state + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        if not np.all(np.isfinite(state)):
            raise IntegrationError(f"non-finite state at t = {t + h:.6g}", t + h)
        states[s + 1] = state
    times = h * np.arange(steps + 1)
    return Trajectory(times, states, {"dt": h, "system": label})


def default_dt(epsilon: float) -> float:
    return min(1e-2, epsilon / 10) if epsilon > 0 else 1e-2


def integrate_perturbed(sys: TorusSystem, I0, phi0, t_end: float, dt: float | None = None) -> Trajectory:
    """Integrate the full system; state is ``(I, phi)`` with unwrapped angles."""
    m, k, eps = sys.m, sys.k, sys.epsilon
    dt = default_dt(eps) if dt is None else dt

    def rhs(t, state):
        I, phi = state[:m], state[m:]
        dphi = _components(sys.omega(I), k)
        if sys.f is not None and eps:
            dphi = dphi + eps * _components(sys.f(I, phi), k)
        dI = eps * _components(sys.g(I, phi), m) if eps else np.zeros(m)
        return np.concatenate([dI, dphi])

    state0 = np.concatenate([np.asarray(I0, float).reshape(m), np.asarray(phi0, float).reshape(k)])
    traj = rk4(rhs, state0, t_end, dt, sys.label)
    traj.meta.update({"slow_dim": m, "kind": "perturbed", "epsilon": eps})
    return traj


def integrate_averaged(sys: TorusSystem, J0, t_end: float, dt: float | None = None, grid_order: int = DEFAULT_GRID):
    m, eps = sys.m, sys.epsilon
    dt = default_dt(eps) if dt is None else dt

    def rhs(t, J):
        return eps * average_rhs(sys, J, grid_order) if eps else np.zeros(m)

    traj = rk4(rhs, np.asarray(J0, float).reshape(m), t_end, dt, sys.label)
    traj.meta.update({"slow_dim": m, "kind": "averaged", "epsilon": eps, "grid": grid_order})
    return traj


def compare(a: Trajectory, b: Trajectory, component: str = "slow") -> float:
    """Sup-norm distance of the slow components over the common time range,
    sampled on the coarser of the two grids."""
    if component != "slow":
        raise ValueError("only slow-component comparison is supported")
    lo = max(a.times[0], b.times[0])
    hi = min(a.times[-1], b.times[-1])
    if hi < lo:
        raise DomainError("trajectories have disjoint time ranges")
    coarse = a if len(a.times) <= len(b.times) else b
    t = coarse.times[(coarse.times >= lo) & (coarse.times <= hi)]
    sa, sb = a.slow, b.slow
    if sa.shape[1] != sb.shape[1]:
        raise ValueError("slow dimensions differ")
    err = 0.0
    for c in range(sa.shape[1]):
        ia = np.interp(t, a.times, sa[:, c])
        ib = np.interp(t, b.times, sb[:, c])
        err = max(err, float(np.max(np.abs(ia - ib))))
    return err


def epsilon_sweep(sys: TorusSystem, I0, phi0, epsilons: Sequence[float], dt=None, grid_order=DEFAULT_GRID):
    """Averaging error on ``[0, 1/eps]`` for each ``eps`` and the fitted
    log-log slope of error against ``eps``."""
    errors = []
    for eps in epsilons:
        s = sys.with_epsilon(eps)
        t_end = 1.0 / eps
        step = default_dt(eps) if dt is None else dt
        full = integrate_perturbed(s, I0, phi0, t_end, step)
        avg = integrate_averaged(s, I0, t_end, step, grid_order)
        errors.append(compare(full, avg))
    slope = float(np.polyfit(np.log(epsilons), np.log(errors), 1)[0]) if len(epsilons) > 1 else math.nan
    return np.array(errors), slope
