import numpy as np
import pytest

from avgeom.averaging import (
    TOL_BERWALD,
    TOL_RIEMANNIAN,
    ChartMap,
    OperatorFamily,
    average_connection,
    average_metric,
    average_operator_family,
    covariance_check,
    deviation_tensors,
    homotopy_check,
)
from avgeom.errors import DomainError
from avgeom.finsler import (
    euclidean,
    fundamental_tensor,
    minkowski_perturbed_quartic,
    randers_flat,
    randers_general,
    riemannian_constant,
    riemannian_exp2d,
)
from avgeom.indicatrix import build_quadrature

# reference-order (1024) runs at x = 0; stable to ~1e-15 from order 64 upward
QUARTIC_DELTA_G_SUP = 0.17979164981818863
RANDERS_DELTA_G_SUP = 0.47096717120251674
RANDERS_GENERAL_DELTA_GAMMA_SUP = 0.2650965516994993
RANDERS_GENERAL_T_NORM = 0.04485294378120628


def exp2d_christoffel(x1):
    gamma = np.zeros((2, 2, 2))
    gamma[0, 1, 1] = -np.exp(2 * x1)
    gamma[1, 0, 1] = gamma[1, 1, 0] = 1.0
    return gamma


def test_riemannian_averages_are_pointwise_values():
    F = riemannian_exp2d()
    x = np.array([0.3, 0.7])
    q = build_quadrature(F, x, 32)
    assert np.allclose(average_metric(F, x, q).h, np.diag([1, np.exp(0.6)]), atol=1e-10)
    assert np.allclose(average_connection(F, x, q).gamma, exp2d_christoffel(0.3), atol=1e-10)
    assert np.allclose(average_metric(euclidean(3), [0, 0, 0], build_quadrature(euclidean(3), [0, 0, 0], (4, 8))).h,
                       np.eye(3), atol=1e-13)


def test_minkowski_connection_average_vanishes():
    F = minkowski_perturbed_quartic()
    q = build_quadrature(F, [0, 0], 64)
    assert np.max(np.abs(average_connection(F, [0, 0], q).gamma)) <= 1e-10


@pytest.mark.parametrize("F, x", [(randers_flat([0.2, 0.0]), [0.0, 0.0]), (randers_general([0.2, 0.0]), [0.0, 0.0])])
def test_averages_self_converge(F, x):
    q, ref = build_quadrature(F, x, 256), build_quadrature(F, x, 4096)
    h, h_ref = average_metric(F, x, q).h, average_metric(F, x, ref).h
    assert np.max(np.abs(h - h_ref)) <= 1e-6 * np.max(np.abs(h_ref))
    if F.label == "randers-general":
        gamma, gamma_ref = average_connection(F, x, q).gamma, average_connection(F, x, ref).gamma
        assert np.max(np.abs(gamma - gamma_ref)) <= 1e-5 * np.max(np.abs(gamma_ref))


def test_operator_families():
    q = build_quadrature(euclidean(2), [0, 0], 64)
    A0 = np.array([[1.0, 2.0], [-0.5, 3.0]])
    assert np.max(np.abs(average_operator_family(lambda y: A0, q) - A0)) <= 1e-14
    assert np.allclose(average_operator_family(lambda y: np.eye(2), q), np.eye(2), atol=1e-15)
    P = average_operator_family(OperatorFamily(lambda y: np.outer(y, y) / (y @ y)), q)
    assert np.max(np.abs(P - 0.5 * np.eye(2))) <= 1e-9


def test_operator_average_is_linear():
    F = randers_flat([0.2, 0.1])
    q = build_quadrature(F, [0, 0], 32)
    A = lambda y: np.outer(y, y)
    B = lambda y: np.diag(np.sin(y))
    lhs = average_operator_family(lambda y: 2.5 * A(y) - 1.5 * B(y), q)
    rhs = 2.5 * average_operator_family(A, q) - 1.5 * average_operator_family(B, q)
    assert np.allclose(lhs, rhs, rtol=0, atol=1e-15)


def test_metric_as_operator_family():
    F = randers_flat([0.2, 0.0])
    q = build_quadrature(F, [0, 0], 64)
    family = average_operator_family(lambda y: fundamental_tensor(F, [0, 0], y).g, q)
    assert np.allclose(family, average_metric(F, [0, 0], q).h, rtol=1e-14)


def test_riemannian_deviation():
    F = riemannian_exp2d()
    q = build_quadrature(F, [0.2, -0.1], 32)
    rep = deviation_tensors(F, [0.2, -0.1], q)
    assert rep.flags["riemannian"] and rep.flags["berwald"]
    assert rep.norms["delta_g_sup_frobenius"] <= 1e-10
    assert rep.norms["T_frobenius"] <= 1e-4


def test_quartic_is_berwald_not_riemannian():
    F = minkowski_perturbed_quartic(0.1)
    q = build_quadrature(F, [0, 0], 128)
    rep = deviation_tensors(F, [0, 0], q)
    assert rep.flags["berwald"] and not rep.flags["riemannian"]
    assert rep.norms["delta_gamma_sup_frobenius"] <= 1e-8
    assert rep.norms["delta_g_sup_frobenius"] == pytest.approx(QUARTIC_DELTA_G_SUP, rel=1e-10)
    assert rep.norms["delta_g_sup_frobenius"] > 10 * TOL_RIEMANNIAN


def test_flat_randers_baseline():
    F = randers_flat([0.2, 0.0])
    rep = deviation_tensors(F, [0, 0], build_quadrature(F, [0, 0], 128))
    assert rep.flags["berwald"] and not rep.flags["riemannian"]
    assert rep.norms["delta_gamma_sup_frobenius"] == 0.0
    assert rep.norms["delta_g_sup_frobenius"] == pytest.approx(RANDERS_DELTA_G_SUP, rel=1e-10)
    assert 0 < rep.delta_g_operator_norm < 1 and not rep.flags["delta_g_norm_at_least_one"]


def test_general_randers_baseline():
    F = randers_general([0.2, 0.0])
    rep = deviation_tensors(F, [0, 0], build_quadrature(F, [0, 0], 128))
    assert not rep.flags["berwald"] and not rep.flags["riemannian"]
    assert rep.norms["delta_gamma_sup_frobenius"] == pytest.approx(RANDERS_GENERAL_DELTA_GAMMA_SUP, rel=1e-8)
    assert rep.norms["T_frobenius"] == pytest.approx(RANDERS_GENERAL_T_NORM, rel=1e-6)
    y = rep.probes[3]
    assert np.allclose(rep.delta_gamma_at(y), rep.delta_gamma[3])
    assert np.allclose(rep.delta_g_at(y), rep.delta_g[3])


@pytest.mark.parametrize(
    "F", [randers_flat([0.2, 0.0]), minkowski_perturbed_quartic(), randers_general([0.2, 0.0]), riemannian_exp2d()]
)
def test_deviations_average_to_zero(F):
    rep = deviation_tensors(F, [0, 0], build_quadrature(F, [0, 0], 64))
    assert rep.checks["mean_delta_g_max"] <= 1e-12
    assert rep.checks["mean_delta_gamma_max"] <= 1e-12
    assert rep.checks["T_average_deviation_max"] <= 1e-12


def test_tolerances_drive_flags():
    F = minkowski_perturbed_quartic()
    q = build_quadrature(F, [0, 0], 32)
    assert deviation_tensors(F, [0, 0], q, tol_riemannian=1.0).flags["riemannian"]
    assert TOL_BERWALD == 1e-5 and TOL_RIEMANNIAN == 1e-6
    with pytest.raises(ValueError):
        deviation_tensors(F, [0, 0], q, probes=np.empty((0, 2)))


def test_homotopy_identity():
    for F in (randers_flat([0.2, 0.0]), randers_general([0.2, 0.1])):
        q = build_quadrature(F, [0, 0], 64)
        assert homotopy_check(F, [0, 0], q, [0, 0.25, 0.3, 0.5, 0.75, 1]) <= 1e-10
    with pytest.raises(ValueError):
        homotopy_check(F, [0, 0], q, [1.5])


def test_quadrature_must_match_point():
    F = euclidean(2)
    q = build_quadrature(F, [0, 0], 16)
    with pytest.raises(DomainError):
        average_metric(F, [1, 0], q)


def test_covariance_identity_and_linear():
    assert covariance_check(randers_general([0.2, 0.0]), ChartMap.identity(2), [0, 0], 32) == 0.0
    F = riemannian_constant([[2.0, 0.3], [0.3, 1.0]])
    assert covariance_check(F, ChartMap.linear([[1.0, 2.0], [0.5, 3.0]]), [0.1, 0.2], 32) <= 1e-6
    assert covariance_check(riemannian_exp2d(), ChartMap.linear([[1.0, 2.0], [0.5, 3.0]]), [0.1, 0.2], 32) <= 1e-6


def test_covariance_under_shear():
    assert covariance_check(randers_general([0.2, 0.0]), ChartMap.shear(0.1), [0.1, 0.2], 64) <= 1e-3
