"""Quick invariant suite behind ``avgeom check``."""

from __future__ import annotations

import numpy as np

from . import jets
from .averaging import average_operator_family, deviation_tensors, homotopy_check
from .expr import parse
from .finsler import (
    chern_coefficients,
    euclidean,
    fundamental_tensor,
    minkowski_perturbed_quartic,
    randers_flat,
    randers_general,
    riemannian_exp2d,
    spray,
)
from .forms import FiberForm, FormTerm, catalog_forms, commutation_residual, fiber_integrate
from .indicatrix import build_quadrature
from .ode import TorusSystem, integrate_perturbed


def _rel(a, b):
    return float(np.max(np.abs(np.asarray(a) - np.asarray(b))) / max(1.0, float(np.max(np.abs(b)))))


def run_suite(seed: int = 0, order: int = 64):
    """Returns a list of ``(name, value, tolerance, passed)``."""
    rng = np.random.default_rng(seed)
    out = []

    def record(name, value, tol):
        out.append((name, float(value), tol, bool(value <= tol)))

    structures = [riemannian_exp2d(), randers_flat([0.2, 0.0]), randers_general([0.2, 0.0]), minkowski_perturbed_quartic()]
    worst_h = worst_e = worst_n = 0.0
    for F in structures:
        for _ in range(4):
            x = rng.uniform(-0.3, 0.3, 2)
            y = rng.standard_normal(2)
            lam = rng.uniform(0.5, 3.0)
            worst_h = max(worst_h, abs(F(x, lam * y) - lam * F(x, y)) / F(x, lam * y))
            g = fundamental_tensor(F, x, y).g
            worst_e = max(worst_e, abs(y @ g @ y - F(x, y) ** 2) / F(x, y) ** 2)
            s = spray(F, x, y)
            worst_n = max(worst_n, _rel(s.N @ y, 2 * s.G))
    record("homogeneity F(x, ly) = l F(x, y)", worst_h, 1e-9)
    record("g(y, y) = F^2", worst_e, 1e-9)
    record("N y = 2 G", worst_n, 1e-8)

    x = np.array([0.2, -0.1])
    gamma = chern_coefficients(riemannian_exp2d(), x, np.array([0.3, 0.9])).gamma
    record("exp2d Chern Gamma^1_22 = -exp(2 x1)", abs(gamma[0, 1, 1] + np.exp(2 * x[0])), 1e-10)

    q = build_quadrature(euclidean(2), [0.0, 0.0], order)
    record("euclidean indicatrix volume = 2 pi", abs(q.volume - 2 * np.pi), 1e-9)
    proj = average_operator_family(lambda y: np.outer(y, y) / (y @ y), q)
    record("projector family averages to I/2", float(np.max(np.abs(proj - 0.5 * np.eye(2)))), 1e-9)

    worst_dg = worst_dG = worst_T = 0.0
    for F in structures:
        q = build_quadrature(F, [0.0, 0.0], order)
        rep = deviation_tensors(F, [0.0, 0.0], q)
        worst_dg = max(worst_dg, rep.checks["mean_delta_g_max"])
        worst_dG = max(worst_dG, rep.checks["mean_delta_gamma_max"])
        worst_T = max(worst_T, rep.checks["T_average_deviation_max"])
    record("<delta g> = 0", worst_dg, 1e-12)
    record("<delta Gamma> = 0", worst_dG, 1e-12)
    record("<T> = T", worst_T, 1e-12)

    F = randers_flat([0.2, 0.0])
    q = build_quadrature(F, [0.0, 0.0], order)
    record("convex homotopy identity", homotopy_check(F, [0.0, 0.0], q, [0, 0.25, 0.5, 0.75, 1]), 1e-10)

    eps, phi0 = 0.05, 0.3
    system = TorusSystem(1, 1, lambda I: [1.0], lambda I, phi: [jets.sin(phi[0])], eps)
    traj = integrate_perturbed(system, [1.0], [phi0], 10.0, 1e-3)
    exact = 1.0 + eps * (np.cos(phi0) - np.cos(phi0 + traj.times))
    record("RK4 against closed form", float(np.max(np.abs(traj.slow[:, 0] - exact))), 1e-8)

    form = FiberForm(1, 1, [FormTerm((), (0,), lambda x, t: x[0] ** 2 * jets.exp(-t[0] * t[0]))])
    value = fiber_integrate(form, [2.0])[()]
    record("Gaussian fiber integral", abs(value - 4 * np.sqrt(np.pi)) / (4 * np.sqrt(np.pi)), 1e-8)
    worst_c = max(commutation_residual(f, [0.4, -0.3]) for f in catalog_forms().values())
    record("fiber integration commutes with d", worst_c, 1e-6)

    prec = [parse("2+3*4")({}) - 14, parse("2^3^2")({}) - 512, parse("-2^2")({}) + 4]
    record("parser precedence", max(abs(v) for v in prec), 0.0)
    return out
