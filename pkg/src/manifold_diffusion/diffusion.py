"""Forward OU process, empirical score, and backward Euler-Maruyama sampler.

Forward process: dX = -X dt + sqrt(2) dW, so X_t | X_0 ~ N(a_t X_0, h_t I_d)
with a_t = e^{-t}, h_t = 1 - e^{-2t}.  The generative (backward) process is

    -dY = (Y + 2 s(Y, t)) dt + sqrt(2) dW,

integrated with decreasing t.  The empirical score s is the gradient of the
log of a Gaussian kernel sum over the training samples, computed with
max-subtracted exponentials so it is stable for any inputs.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import Dataset, _rng


@dataclass(frozen=True)
class DiffusionSchedule:
    """The pair (a_t, h_t) and derived signal-to-noise eta_t = a_t^2 / h_t."""

    t: float
    a: float
    h: float

    @property
    def eta(self) -> float:
        return self.a * self.a / self.h


def schedule(t: float) -> DiffusionSchedule:
    if t < 0:
        raise ValueError("time must be >= 0")
    a = np.exp(-t)
    return DiffusionSchedule(t=float(t), a=float(a), h=float(-np.expm1(-2.0 * t)))


def forward_sample(x0: np.ndarray, t: float, noise_seed: int) -> np.ndarray:
    """One draw of X_t | X_0 = x0, i.e. a_t x0 + sqrt(h_t) z."""
    sch = schedule(t)
    rng = _rng(noise_seed)
    x0 = np.asarray(x0, dtype=float)
    return sch.a * x0 + np.sqrt(sch.h) * rng.standard_normal(x0.shape)


class EmpiricalScore:
    """Score of the Gaussian-kernel density over a fixed dataset.

    Evaluation is O(n d) per point; squared distances are expanded as
    ||x||^2 - 2 a <x, x_i> + a^2 ||x_i||^2 with the sample norms cached.
    Instances are read-only and safe to share across workers.
    """

    def __init__(self, data: Dataset | np.ndarray):
        X = data.ambient if isinstance(data, Dataset) else np.asarray(data, float)
        if X.ndim != 2 or X.shape[0] == 0:
            raise ValueError("dataset must be a non-empty (n, d) array")
        self.samples = X
        self._sq_norms = np.einsum("ij,ij->i", X, X)

    def log_weights(self, x: np.ndarray, t: float) -> np.ndarray:
        """Unnormalized log kernel weights -||x - a_t x_i||^2 / (2 h_t)."""
        if t <= 0:
            raise ValueError("empirical score requires t > 0")
        sch = schedule(t)
        x = np.atleast_2d(np.asarray(x, dtype=float))
        sq = (np.einsum("bj,bj->b", x, x)[:, None]
              - 2.0 * sch.a * (x @ self.samples.T)
              + sch.a ** 2 * self._sq_norms[None, :])
        return -sq / (2.0 * sch.h)

    def __call__(self, x: np.ndarray, t: float) -> tuple[np.ndarray, np.ndarray]:
        """Return (score, log-normalizer) at one point or a batch of points.

        score = (a_t sum_i w_i x_i - x) / h_t with w_i the softmax of the log
        kernel weights; the log-normalizer is logsumexp of those weights.
        """
        x_in = np.asarray(x, dtype=float)
        single = x_in.ndim == 1
        x2 = np.atleast_2d(x_in)
        sch = schedule(t)
        lw = self.log_weights(x2, t)
        m = lw.max(axis=1, keepdims=True)
        e = np.exp(lw - m)
        z = e.sum(axis=1, keepdims=True)
        w = e / z
        score = (sch.a * (w @ self.samples) - x2) / sch.h
        logz = (m + np.log(z)).ravel()
        if single:
            return score[0], float(logz[0])
        return score, logz


def empirical_score(x: np.ndarray, t: float,
                    data: Dataset | np.ndarray) -> tuple[np.ndarray, float]:
    """One-shot form of :class:`EmpiricalScore` (no norm caching reuse)."""
    return EmpiricalScore(data)(x, t)


@dataclass(frozen=True)
class TrajectoryRecord:
    """Backward trajectory on a strictly decreasing time grid."""

    times: np.ndarray
    states: np.ndarray  # (K+1, d) or (K+1, B, d) for a batch
    seed: int
    score_mode: str = "empirical"


def backward_integrate(start: np.ndarray, T: float, t_min: float, dt: float,
                       score, seed: int,
                       score_mode: str = "empirical") -> TrajectoryRecord:
    """Euler-Maruyama discretization of the backward SDE from T down to t_min.

    ``score`` is any callable (x, t) -> score or (score, aux); a batch of
    trajectories integrates in lockstep when ``start`` has shape (B, d).
    The last step is shortened to land exactly on t_min.
    """
    if not T > t_min > 0:
        raise ValueError("require T > t_min > 0")
    if dt <= 0:
        raise ValueError("dt must be positive")
    rng = _rng(seed)
    y = np.array(start, dtype=float, copy=True)
    times = [float(T)]
    states = [y.copy()]
    t = float(T)
    k = 0
    while t > t_min + 1e-12:
        step = min(dt, t - t_min)
        s = score(y, t)
        if isinstance(s, tuple):
            s = s[0]
        y = y + (y + 2.0 * s) * step + np.sqrt(2.0 * step) * rng.standard_normal(y.shape)
        t -= step
        k += 1
        if not np.all(np.isfinite(y)):
            raise FloatingPointError(
                f"non-finite state at step {k}, t = {t:.6g}")
        times.append(t)
        states.append(y.copy())
    return TrajectoryRecord(times=np.array(times), states=np.array(states),
                            seed=seed, score_mode=score_mode)


def trajectory_to_csv(rec: TrajectoryRecord, path, coords=None) -> None:
    """Write (time, coordinates) rows; ``coords`` selects a column subset."""
    import csv

    states = rec.states
    if states.ndim == 3:
        raise ValueError("CSV export expects a single trajectory, not a batch")
    idx = list(range(states.shape[1])) if coords is None else list(coords)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["time"] + [f"y_{j}" for j in idx])
        for t, row in zip(rec.times, states):
            writer.writerow([t, *row[idx]])
