"""Speciation-time theory: Gamma functions, Gaussian-equivalence constants,
the reduced scalar potential, and the commitment SDE.

For odd activations and opposite centers, the early backward dynamics
reduces to a scalar coordinate q = sum_j x_j Gamma0(lambda_j), with
lambda_j = f_j^T mu / sqrt(p), rolling in the potential

    V(q, t) = q^2 / 2 - 2 S log cosh(e^{-t} q),      S = sum_j Gamma0(lambda_j)^2.

Speciation happens when the curvature of V at the origin changes sign:
t_S = log(2 S) / 2.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .activations import Activation
from .model import ManifoldModel, _rng
from .quadrature import std_normal_nodes

_PROBE_GRID = np.linspace(-6.0, 6.0, 25)


class GammaFunctions:
    """Quadrature evaluators for Gamma0, Gamma1 and Gamma^(2).

    Gamma0(y) = E_u[phi(sqrt(rho) u + y)], Gamma1(y) = E_u[phi(...) u] and
    Gamma^(2)(y) = E_u[phi(...)^2], u ~ N(0,1).  The node count doubles at
    construction until the probe-grid values of all three functions move by
    less than ``tol``.
    """

    def __init__(self, activation: Activation, rho: float,
                 node_count: int = 64, tol: float = 1e-10,
                 max_nodes: int = 2048):
        if rho <= 0:
            raise ValueError("rho must be positive")
        self.activation = activation
        self.rho = float(rho)
        n = int(node_count)
        probe = self._raw(_PROBE_GRID, n)
        while n < max_nodes:
            probe2 = self._raw(_PROBE_GRID, 2 * n)
            if max(np.abs(a - b).max() for a, b in zip(probe, probe2)) < tol:
                break
            n *= 2
            probe = probe2
        self.node_count = n

    def _raw(self, y: np.ndarray, n: int):
        u, w = std_normal_nodes(n)
        vals = self.activation(np.sqrt(self.rho) * u[None, :] + np.asarray(y, float)[:, None])
        return vals @ w, (vals * u[None, :]) @ w, (vals * vals) @ w

    def _moments(self, y):
        y_arr = np.atleast_1d(np.asarray(y, dtype=float))
        return self._raw(y_arr, self.node_count)

    def gamma0(self, y):
        out = self._moments(y)[0]
        return float(out[0]) if np.isscalar(y) or np.ndim(y) == 0 else out

    def gamma1(self, y):
        out = self._moments(y)[1]
        return float(out[0]) if np.isscalar(y) or np.ndim(y) == 0 else out

    def gamma2(self, y):
        out = self._moments(y)[2]
        return float(out[0]) if np.isscalar(y) or np.ndim(y) == 0 else out


def gamma_eval(which: int, y, gf: GammaFunctions):
    """Dispatch on which in {0, 1, 2} (2 meaning Gamma^(2))."""
    if which == 0:
        return gf.gamma0(y)
    if which == 1:
        return gf.gamma1(y)
    if which == 2:
        return gf.gamma2(y)
    raise ValueError("which must be 0, 1 or 2")


@dataclass(frozen=True)
class GepConstants:
    """Gaussian-equivalence constants of Gamma0."""

    rho0: float
    rho1: float
    rho_star_sq: float


def gep_constants(gf: GammaFunctions, node_count: int = 256) -> GepConstants:
    """Outer standard-normal moments of Gamma0 (odd activations only).

    rho0 = E[Gamma0(u)], rho1 = E[Gamma0(u) u] and
    rho_star^2 = E[Gamma0(u)^2] - rho0^2 - rho1^2, clamped at zero when the
    quadrature leaves it within -1e-10 of zero.
    """
    if not gf.activation.is_odd:
        raise ValueError(
            f"Gaussian-equivalence constants require an odd activation, "
            f"got {gf.activation.kind!r}")
    u, w = std_normal_nodes(node_count)
    g0 = gf.gamma0(u)
    rho0 = float(w @ g0)
    rho1 = float(w @ (g0 * u))
    star = float(w @ (g0 * g0)) - rho0 ** 2 - rho1 ** 2
    if star < -1e-10:
        raise ArithmeticError(f"negative rho_star^2 = {star:.3e}: quadrature failure")
    return GepConstants(rho0=rho0, rho1=rho1, rho_star_sq=max(star, 0.0))


def lambdas(model: ManifoldModel) -> np.ndarray:
    """Center projections lambda_j = f_j^T mu / sqrt(p), j = 1..d."""
    return model.embedding.entries @ model.mu / np.sqrt(model.p)


def gamma0_sq_sum(model: ManifoldModel, gf: GammaFunctions | None = None) -> float:
    """S = sum_j Gamma0(lambda_j)^2 for the model's actual F and mu."""
    if gf is None:
        gf = GammaFunctions(model.activation, model.rho)
    g0 = gf.gamma0(lambdas(model))
    return float(g0 @ g0)


def speciation_time_finite(model: ManifoldModel,
                           gf: GammaFunctions | None = None) -> float:
    """t_S = log(2 sum_j Gamma0(lambda_j)^2) / 2 at finite d."""
    if not model.activation.is_odd:
        raise ValueError("speciation analysis requires an odd activation")
    s = gamma0_sq_sum(model, gf)
    # anything at roundoff scale is quadrature noise, not a signal
    if s <= 1e-12:
        raise ValueError("no speciation signal: sum_j Gamma0(lambda_j)^2 = 0")
    return 0.5 * np.log(2.0 * s)


def speciation_time_asymptotic(beta: float, d: int, mu_tilde_norm_sq: float,
                               gep: GepConstants) -> float:
    """Large-p speciation time log[2 (rho1^2 beta d |mu~|^2 + rho*^2)] / 2."""
    arg = gep.rho1 ** 2 * beta * d * mu_tilde_norm_sq + gep.rho_star_sq
    if arg <= 0:
        raise ValueError("no speciation signal: asymptotic argument <= 0")
    return 0.5 * np.log(2.0 * arg)


def potential(q, t: float, gamma0_sq_sum: float):
    """V(q, t) = q^2/2 - 2 S log cosh(e^{-t} q)."""
    if t <= 0:
        raise ValueError("t must be positive")
    q = np.asarray(q, dtype=float)
    # log cosh without overflow for large arguments
    z = np.exp(-t) * q
    log_cosh = np.abs(z) + np.log1p(np.exp(-2.0 * np.abs(z))) - np.log(2.0)
    out = 0.5 * q * q - 2.0 * gamma0_sq_sum * log_cosh
    return float(out) if out.ndim == 0 else out


def potential_curvature_at_zero(t: float, gamma0_sq_sum: float) -> float:
    """d^2V/dq^2 at q = 0, i.e. 1 - 2 e^{-2t} S; zero exactly at t_S."""
    if t <= 0:
        raise ValueError("t must be positive")
    return 1.0 - 2.0 * np.exp(-2.0 * t) * gamma0_sq_sum


def reduced_sde_simulate(t_start: float, t_end: float, dt: float,
                         gamma0_sq_sum: float, n_traj: int, seed: int,
                         q0: float = 0.0):
    """Backward Euler-Maruyama ensemble of the reduced scalar coordinate.

    -dq = [-q + 2 e^{-t} S tanh(e^{-t} q)] dt + dw~, where the rescaled
    Wiener increment has variance 2 S dt (the scalar coordinate is the image
    of the ambient sqrt(2) dW under x -> sum_j x_j Gamma0(lambda_j)).

    Returns (times, Q) with Q of shape (n_steps + 1, n_traj).
    """
    if not t_start > t_end > 0:
        raise ValueError("require t_start > t_end > 0")
    rng = _rng(seed)
    s = float(gamma0_sq_sum)
    noise_scale = np.sqrt(2.0 * s * dt)
    q = np.full(n_traj, float(q0))
    t = float(t_start)
    times = [t]
    path = [q.copy()]
    while t > t_end + 1e-12:
        step = min(dt, t - t_end)
        drift = -q + 2.0 * np.exp(-t) * s * np.tanh(np.exp(-t) * q)
        q = q + drift * step + np.sqrt(step / dt) * noise_scale * rng.standard_normal(n_traj)
        t -= step
        times.append(t)
        path.append(q.copy())
    return np.array(times), np.array(path)


def score_tail_term(x: np.ndarray, model: ManifoldModel,
                    gf: GammaFunctions | None = None,
                    h_t: float = 1.0) -> np.ndarray:
    """Diagnostic e^{-2t} score correction, excluded from the reduced dynamics.

    Component j is x_j (Gamma2(l_j) - Gamma0(l_j)^2) / h^2 plus
    4 sum_{l != j} x_l theta_{jl} Gamma1(l_j) Gamma1(l_l) / h^2, with
    theta_{jl} = f_j^T f_l / p.  Used only to confirm these terms are
    subdominant around t_S.
    """
    if gf is None:
        gf = GammaFunctions(model.activation, model.rho)
    x = np.asarray(x, dtype=float)
    lam = lambdas(model)
    g0 = gf.gamma0(lam)
    g1 = gf.gamma1(lam)
    g2 = gf.gamma2(lam)
    F = model.embedding.entries
    theta = F @ F.T / model.p
    diag = x * (g2 - g0 ** 2)
    xg1 = x * g1
    cross = 4.0 * g1 * (theta @ xg1 - np.diag(theta) * xg1)
    return (diag + cross) / h_t ** 2
