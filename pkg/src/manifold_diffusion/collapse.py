"""Collapse-time theory.

The memorization onset t_C solves

    alpha + log(2 pi h_t) / 2 + beta * f_star(t) = -1/2,

where f_star is the Bayes-optimal free energy (per latent dimension) of the
Gaussian channel x = a_t phi(F xi / sqrt(p)) + sqrt(h_t) z with i.i.d.
Gaussian F:

    f_star(t) = sup_{q in [0, rho + m^2]} inf_{r >= 0} [ psi(r)
                + Psi(q) / beta - r q / 2 ].

psi has the closed form r (m^2 + rho)/2 - log(1 + r rho)/2; Psi is a nested
Gaussian-channel log-evidence evaluated by Gauss-Hermite quadrature (closed
form for a linear activation).  For data in a hyperplane two shortcuts are
provided: a deterministic-isometry closed form and a Marchenko-Pastur
log-determinant for random F.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .model import ManifoldModel
from .quadrature import std_normal_grid, std_normal_nodes

_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


def golden_section_max(f, a: float, b: float, tol: float = 1e-9):
    """Golden-section search for the maximum of a unimodal f on [a, b]."""
    c = b - _GOLDEN * (b - a)
    d = a + _GOLDEN * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc > fd:
            b, d, fd = d, c, fc
            c = b - _GOLDEN * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _GOLDEN * (b - a)
            fd = f(d)
    x = 0.5 * (a + b)
    return x, f(x)


# ---------------------------------------------------------------------------
# scalar pieces of the replica functional

def psi(r: float, m: float, rho: float) -> float:
    """psi(r) = r (m^2 + rho) / 2 - log(1 + r rho) / 2."""
    if r < 0:
        raise ValueError("r must be >= 0")
    return 0.5 * r * (m * m + rho) - 0.5 * np.log1p(r * rho)


def _psi_prime(r: float, m: float, rho: float) -> float:
    return 0.5 * (m * m + rho) - 0.5 * rho / (1.0 + r * rho)


def psi_quadrature_check(r: float, m: float, rho: float,
                         n_outer: int = 48, n_inner: int = 96) -> float:
    """psi from its integral definition (independent route).

    E_{X0 ~ N(m, rho), Z0 ~ N(0,1)} log E_{w ~ N(m, rho)}
        exp(r w X0 + sqrt(r) w Z0 - r w^2 / 2),
    evaluated with nested Gauss-Hermite quadrature in log space.
    """
    if r < 0:
        raise ValueError("r must be >= 0")
    (u, z0), w_out = std_normal_grid(n_outer, 2)
    x0 = m + np.sqrt(rho) * u
    v, w_in = std_normal_nodes(n_inner)
    wv = m + np.sqrt(rho) * v  # integration variable of the prior
    expo = (r * np.outer(x0, wv) + np.sqrt(r) * np.outer(z0, wv)
            - 0.5 * r * wv ** 2)
    mx = expo.max(axis=1, keepdims=True)
    log_inner = mx.ravel() + np.log(np.exp(expo - mx) @ w_in)
    return float(w_out @ log_inner)


def psi_big_linear(q: float, t: float, m: float, rho: float) -> float:
    """Closed-form Psi for a linear activation."""
    a2 = np.exp(-2.0 * t)
    h = -np.expm1(-2.0 * t)
    return -0.5 - 0.5 * np.log(2.0 * np.pi * (a2 * (m * m + rho - q) + h))


def psi_big(q: float, t: float, m: float, rho: float, activation,
            n_outer: int = 24, n_inner: int = 96) -> float:
    """Psi(q): expected log-evidence of the scalar Gaussian channel.

    Outer expectation over (V, W, Z) defining
    Y0 = a_t phi(sqrt(q) V + sqrt(m^2 + rho - q) W) + sqrt(h_t) Z; inner
    average over w of the channel likelihood
    exp(-(Y0 - a_t phi(sqrt(q) V + sqrt(m^2 + rho - q) w))^2 / (2 h_t))
    divided by sqrt(2 pi h_t), accumulated in log space.
    """
    c = m * m + rho
    if not 0.0 <= q <= c + 1e-12:
        raise ValueError(f"q must lie in [0, {c}]")
    if t <= 0:
        raise ValueError("t must be positive")
    q = min(q, c)
    a = np.exp(-t)
    h = -np.expm1(-2.0 * t)
    sq, sres = np.sqrt(q), np.sqrt(max(c - q, 0.0))
    (V, W, Z), w_out = std_normal_grid(n_outer, 3)
    y0 = a * activation(sq * V + sres * W) + np.sqrt(h) * Z
    wn, w_in = std_normal_nodes(n_inner)
    phi_w = activation(sq * V[:, None] + sres * wn[None, :])
    expo = -((y0[:, None] - a * phi_w) ** 2) / (2.0 * h)
    mx = expo.max(axis=1, keepdims=True)
    log_inner = mx.ravel() + np.log(np.exp(expo - mx) @ w_in)
    return float(w_out @ log_inner) - 0.5 * np.log(2.0 * np.pi * h)


# ---------------------------------------------------------------------------
# sup-inf of the replica functional

@dataclass(frozen=True)
class FreeEnergyResult:
    """Optimizer and value of the sup-inf, with solver diagnostics."""

    t: float
    q_star: float
    r_star: float
    f_star: float
    rounds: int
    stationarity_residual: float
    boundary: bool


def _r_star(q: float, m: float, rho: float) -> float:
    """inf over r of psi(r) - r q / 2 via the monotone stationarity equation."""
    if _psi_prime(0.0, m, rho) - 0.5 * q >= 0.0:
        return 0.0
    hi = 1.0
    while _psi_prime(hi, m, rho) - 0.5 * q < 0.0:
        hi *= 2.0
        if hi > 1e12:
            raise ArithmeticError("r stationarity bracket failure")
    return float(brentq(lambda r: _psi_prime(r, m, rho) - 0.5 * q, 0.0, hi,
                        xtol=1e-14, rtol=1e-14))


def f_rs(q: float, r: float, t: float, model_or_params,
         n_outer: int = 24, n_inner: int = 96) -> float:
    """f_RS(q, r) = psi(r) + Psi(q) / beta - r q / 2."""
    m, rho, beta, activation = _collapse_params(model_or_params)
    if activation.kind == "linear":
        big = psi_big_linear(q, t, m, rho)
    else:
        big = psi_big(q, t, m, rho, activation, n_outer, n_inner)
    return psi(r, m, rho) + big / beta - 0.5 * r * q


def _collapse_params(model_or_params):
    if isinstance(model_or_params, ManifoldModel):
        mdl = model_or_params
        return mdl.m, mdl.rho, mdl.beta, mdl.activation
    return model_or_params  # (m, rho, beta, activation)


def f_star(t: float, model_or_params, n_outer: int = 24, n_inner: int = 96,
           grid_points: int = 64) -> FreeEnergyResult:
    """Solve sup_q inf_r f_RS at time t.

    The inner inf is a one-dimensional root of the monotone derivative of
    psi; the outer sup runs golden-section refinement around the best point
    of a bracketing grid.  The value diverges to -inf at q = rho + m^2, so
    the grid stops just inside the boundary.
    """
    m, rho, beta, activation = _collapse_params(model_or_params)
    c = m * m + rho

    if activation.kind == "linear":
        big = lambda q: psi_big_linear(q, t, m, rho)
    else:
        big = lambda q: psi_big(q, t, m, rho, activation, n_outer, n_inner)

    def g(q: float) -> float:
        r = _r_star(q, m, rho)
        return psi(r, m, rho) + big(q) / beta - 0.5 * r * q

    qs = np.linspace(0.0, c * (1.0 - 1e-9), grid_points)
    vals = np.array([g(q) for q in qs])
    k = int(np.argmax(vals))
    lo = qs[max(k - 1, 0)]
    hi = qs[min(k + 1, grid_points - 1)]
    q_star, f_val = golden_section_max(g, lo, hi, tol=1e-9 * max(c, 1.0))
    boundary = False
    # keep whichever of {interior refinement, grid boundary} wins
    for qb in (qs[0], qs[-1]):
        fb = g(qb)
        if fb > f_val:
            q_star, f_val, boundary = qb, fb, True
    r_star = _r_star(q_star, m, rho)

    eps = 1e-5 * max(c, 1.0)
    if eps < q_star < c - eps and r_star > eps:
        df_dq = (f_rs(q_star + eps, r_star, t, (m, rho, beta, activation), n_outer, n_inner)
                 - f_rs(q_star - eps, r_star, t, (m, rho, beta, activation), n_outer, n_inner)) / (2 * eps)
        df_dr = (psi(r_star + eps, m, rho) - psi(r_star - eps, m, rho)) / (2 * eps) - 0.5 * q_star
        resid = max(abs(df_dq), abs(df_dr))
    else:
        resid = float("nan")
        boundary = True
    return FreeEnergyResult(t=t, q_star=float(q_star), r_star=float(r_star),
                            f_star=float(f_val), rounds=2,
                            stationarity_residual=float(resid),
                            boundary=boundary)


# ---------------------------------------------------------------------------
# collapse times

@dataclass(frozen=True)
class CollapseResult:
    t_c: float
    method: str  # "glm_general" | "linear_isometry_closed_form" | "linear_rmt"
    residual: float


def _bisect_time(residual, t_lo: float = 1e-3, t_hi: float = 5.0,
                 t_tol: float = 1e-6) -> float:
    """Root of a residual that increases with t, with bracket expansion."""
    lo, hi = t_lo, t_hi
    f_lo, f_hi = residual(lo), residual(hi)
    while f_lo > 0.0 and lo > 1e-6:
        lo /= 4.0
        f_lo = residual(lo)
    while f_hi < 0.0 and hi < 20.0:
        hi *= 2.0
        f_hi = residual(hi)
    if not (f_lo < 0.0 < f_hi):
        raise RuntimeError(
            f"no collapse time in range ({lo:.2g}, {hi:.2g}): "
            f"residuals ({f_lo:.3g}, {f_hi:.3g})")
    return float(brentq(residual, lo, hi, xtol=t_tol))


def collapse_time_glm(model_or_params, alpha: float, n_outer: int = 24,
                      n_inner: int = 96, grid_points: int = 64,
                      t_tol: float = 1e-6) -> CollapseResult:
    """Solve alpha + log(2 pi h_t)/2 + beta f_star(t) = -1/2 for t."""
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    m, rho, beta, activation = _collapse_params(model_or_params)
    params = (m, rho, beta, activation)

    def residual(t: float) -> float:
        h = -np.expm1(-2.0 * t)
        fs = f_star(t, params, n_outer, n_inner, grid_points).f_star
        return alpha + 0.5 * np.log(2.0 * np.pi * h) + beta * fs + 0.5

    t_c = _bisect_time(residual, t_tol=t_tol)
    return CollapseResult(t_c=t_c, method="glm_general",
                          residual=abs(residual(t_c)))


def collapse_time_linear_isometry(alpha: float, beta: float) -> float:
    """Closed form t_C = log(1 + (e^{2 alpha / beta} - 1)^{-1}) / 2."""
    if alpha <= 0 or not 0 < beta <= 1:
        raise ValueError("require alpha > 0 and 0 < beta <= 1")
    return 0.5 * np.log1p(1.0 / np.expm1(2.0 * alpha / beta))


def logdet_isometry(eta: float, beta: float) -> float:
    """(1/d) log det(eta F F^T / p + I_d) = beta log(1 + eta) for isometric F."""
    if eta < 0:
        raise ValueError("eta must be >= 0")
    return beta * np.log1p(eta)


def mp_h(x: float, z: float) -> float:
    """Marchenko-Pastur auxiliary h(x, z).

    h = (sqrt(x (1 + sqrt(z))^2 + 1) - sqrt(x (1 - sqrt(z))^2 + 1))^2; the
    edge factors (1 +- sqrt(z)) enter squared, which is what matches the
    empirical spectrum (and keeps E log concave-consistent).
    """
    if x < 0 or z < 0:
        raise ValueError("mp_h requires x, z >= 0")
    rz = math.sqrt(z)
    return (math.sqrt(x * (1.0 + rz) ** 2 + 1.0)
            - math.sqrt(x * (1.0 - rz) ** 2 + 1.0)) ** 2


def mp_logdet(eta: float, beta: float) -> float:
    """Large-d limit of (1/d) log det(eta F F^T / p + I_d), gaussian F."""
    if eta <= 0:
        raise ValueError("eta must be positive")
    if not 0 < beta <= 1:
        raise ValueError("beta must lie in (0, 1]")
    hval = mp_h(eta / beta, beta)
    return (beta * np.log1p(eta / beta - 0.25 * hval)
            + np.log1p(eta - 0.25 * hval)
            - 0.25 * beta / eta * hval)


def collapse_time_linear_rmt(alpha: float, beta: float,
                             t_tol: float = 1e-6) -> CollapseResult:
    """Collapse time for a linear manifold with gaussian F.

    Solves alpha - mp_logdet(eta_t, beta) / 2 = 0; eta_t decreases with t so
    the residual is increasing and bisection applies directly.
    """
    if alpha <= 0 or not 0 < beta <= 1:
        raise ValueError("require alpha > 0 and 0 < beta <= 1")

    def residual(t: float) -> float:
        eta = np.exp(-2.0 * t) / (-np.expm1(-2.0 * t))
        return alpha - 0.5 * mp_logdet(eta, beta)

    t_c = _bisect_time(residual, t_tol=t_tol)
    return CollapseResult(t_c=t_c, method="linear_rmt",
                          residual=abs(residual(t_c)))
