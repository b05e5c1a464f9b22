"""Collapse-time theory: replica functional, optimizers, spectral shortcuts."""
import numpy as np
import pytest

from manifold_diffusion.activations import make_activation
from manifold_diffusion.collapse import (collapse_time_glm,
                                         collapse_time_linear_isometry,
                                         collapse_time_linear_rmt, f_rs,
                                         f_star, golden_section_max,
                                         logdet_isometry, mp_h, mp_logdet,
                                         psi, psi_big, psi_big_linear,
                                         psi_quadrature_check)

LINEAR = make_activation("linear")
TANH = make_activation("tanh")

# log(1 + 1/(e^2 - 1)) / 2, frozen from a 30-digit evaluation
T_C_ISO_1_1 = 0.072706728934430
T_C_ISO_QUARTER_HALF = 0.229337572693541


def test_golden_section_finds_quadratic_maximum():
    x, fx = golden_section_max(lambda x: -(x - 0.3) ** 2, 0.0, 1.0, tol=1e-10)
    assert x == pytest.approx(0.3, abs=1e-8)
    assert fx == pytest.approx(0.0, abs=1e-15)


def test_psi_closed_form_and_domain():
    assert psi(0.0, 1.0, 1.0) == 0.0
    assert psi(2.0, 1.0, 0.5) == pytest.approx(0.5 * 2 * 1.5 - 0.5 * np.log(2.0))
    with pytest.raises(ValueError):
        psi(-0.1, 1.0, 1.0)


@pytest.mark.parametrize("r,m,rho", [(1.0, 0.0, 1.0), (2.0, 1.0, 0.5),
                                     (0.5, 0.5, 2.0)])
def test_psi_integral_route_matches_closed_form(r, m, rho):
    assert psi_quadrature_check(r, m, rho) == pytest.approx(
        psi(r, m, rho), abs=1e-8)


@pytest.mark.parametrize("q,t", [(0.2, 0.3), (1.0, 0.8), (1.9, 1.5)])
def test_psi_big_linear_quadrature_matches_closed_form(q, t):
    assert psi_big(q, t, 1.0, 1.0, LINEAR) == pytest.approx(
        psi_big_linear(q, t, 1.0, 1.0), abs=1e-6)


def test_psi_big_increases_with_overlap():
    # more latent overlap means a sharper channel and higher log-evidence
    for act in (LINEAR, TANH):
        vals = [psi_big(q, 0.5, 1.0, 1.0, act) for q in (0.0, 1.0, 1.8)]
        assert vals[0] < vals[1] < vals[2]


def test_psi_big_domain_errors():
    with pytest.raises(ValueError):
        psi_big(-0.1, 0.5, 1.0, 1.0, TANH)
    with pytest.raises(ValueError):
        psi_big(2.5, 0.5, 1.0, 1.0, TANH)
    with pytest.raises(ValueError):
        psi_big(0.5, 0.0, 1.0, 1.0, TANH)


def test_f_star_stationarity_and_inner_minimizer():
    params = (1.0, 1.0, 0.5, LINEAR)
    res = f_star(0.3, params)
    m, rho = 1.0, 1.0
    c = m * m + rho
    assert 0.0 <= res.q_star <= c
    if not res.boundary:
        assert res.stationarity_residual < 1e-5
        # analytic inner minimizer: r* = (q - m^2) / (rho (c - q)) for q > m^2
        if res.q_star > m * m:
            expected = (res.q_star - m * m) / (rho * (c - res.q_star))
            assert res.r_star == pytest.approx(expected, rel=1e-6)


def test_f_star_is_supremum_over_probed_points():
    params = (1.0, 1.0, 0.5, LINEAR)
    res = f_star(0.4, params)
    for q in (0.1, 0.9, 1.5, 1.9):
        r = max((q - 1.0) / (1.0 * (2.0 - q)), 0.0)
        assert f_rs(q, r, 0.4, params) <= res.f_star + 1e-9


def test_f_star_decreases_with_time():
    params = (1.0, 1.0, 0.5, LINEAR)
    vals = [f_star(t, params).f_star for t in (0.1, 0.5, 1.5)]
    assert vals[0] > vals[1] > vals[2]


def test_f_star_finite_near_zero_time():
    res = f_star(0.02, (1.0, 1.0, 0.5, LINEAR))
    assert np.isfinite(res.f_star)


def test_isometry_collapse_time_frozen_values():
    assert collapse_time_linear_isometry(1.0, 1.0) == pytest.approx(
        T_C_ISO_1_1, abs=1e-12)
    assert collapse_time_linear_isometry(0.25, 0.5) == pytest.approx(
        T_C_ISO_QUARTER_HALF, abs=1e-12)


def test_isometry_collapse_time_solves_defining_equation():
    alpha, beta = 0.4, 0.7
    t_c = collapse_time_linear_isometry(alpha, beta)
    eta = np.exp(-2 * t_c) / -np.expm1(-2 * t_c)
    assert 0.5 * logdet_isometry(eta, beta) == pytest.approx(alpha, abs=1e-12)


def test_isometry_collapse_time_domain():
    with pytest.raises(ValueError):
        collapse_time_linear_isometry(0.0, 0.5)
    with pytest.raises(ValueError):
        collapse_time_linear_isometry(1.0, 1.5)


def test_mp_h_special_values():
    assert mp_h(1.0, 0.0) == pytest.approx(0.0, abs=1e-15)
    assert mp_h(0.0, 0.5) == pytest.approx(0.0, abs=1e-15)
    assert mp_h(1.0, 1.0) == pytest.approx((np.sqrt(5.0) - 1.0) ** 2)
    with pytest.raises(ValueError):
        mp_h(-1.0, 0.5)


def test_mp_logdet_small_eta_limit():
    # (1/d) log det(eta F F^T / p + I) ~ eta tr(F F^T) / (p d) = eta
    assert mp_logdet(1e-6, 0.5) == pytest.approx(1e-6, rel=1e-2)
    with pytest.raises(ValueError):
        mp_logdet(0.0, 0.5)
    with pytest.raises(ValueError):
        mp_logdet(1.0, 1.2)


def test_mp_logdet_matches_eigen_spectrum():
    rng = np.random.default_rng(7)
    d, beta, eta = 400, 0.5, 1.0
    p = int(beta * d)
    F = rng.standard_normal((d, p))
    _, ld = np.linalg.slogdet(eta * F @ F.T / p + np.eye(d))
    assert ld / d == pytest.approx(mp_logdet(eta, beta), abs=2e-2)


def test_rmt_collapse_time_zeroes_residual_and_orders_with_alpha():
    res = collapse_time_linear_rmt(0.5, 0.5)
    assert res.method == "linear_rmt"
    assert res.residual < 1e-5
    assert (collapse_time_linear_rmt(1.0, 0.5).t_c
            < collapse_time_linear_rmt(0.25, 0.5).t_c)


def test_rmt_approaches_isometry_at_small_beta_fixed_alpha():
    # at fixed alpha both collapse times shrink with beta and their gap
    # closes; at large beta the ensembles differ visibly
    gap_small = abs(collapse_time_linear_rmt(0.5, 0.1).t_c
                    - collapse_time_linear_isometry(0.5, 0.1))
    gap_large = abs(collapse_time_linear_rmt(0.5, 0.9).t_c
                    - collapse_time_linear_isometry(0.5, 0.9))
    assert gap_small < 1e-3
    assert gap_small < gap_large


def test_rmt_reports_unbracketed_root():
    with pytest.raises(RuntimeError, match="no collapse time"):
        collapse_time_linear_rmt(50.0, 0.5)


def test_glm_linear_agrees_with_rmt():
    glm = collapse_time_glm((1.0, 1.0, 0.5, LINEAR), 0.5).t_c
    rmt = collapse_time_linear_rmt(0.5, 0.5).t_c
    assert abs(glm - rmt) < 1e-3


def test_glm_tanh_collapse_time_runs():
    res = collapse_time_glm((1.0, 1.0, 0.5, TANH), 0.5, n_outer=10,
                            n_inner=48, grid_points=48, t_tol=1e-4)
    assert res.method == "glm_general"
    assert 0.0 < res.t_c < 0.2
    assert res.residual < 1e-3


def test_glm_rejects_nonpositive_alpha():
    with pytest.raises(ValueError):
        collapse_time_glm((1.0, 1.0, 0.5, LINEAR), 0.0)
