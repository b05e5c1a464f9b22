"""Manifold mixture data model.

Ambient samples are x = phi(F xi / sqrt(p)) with latent xi drawn from a
balanced two-cluster Gaussian mixture N(+-mu, rho I_p) on a p-dimensional
manifold embedded in d dimensions (p <= d).
"""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .activations import Activation, make_activation

_ISOMETRY_TOL = 1e-12
MAX_SAMPLES = 10_000_000


def _rng(seed: int) -> np.random.Generator:
    # counter-based bit generator: deterministic and cheap to split
    return np.random.Generator(np.random.Philox(key=seed))


@dataclass(frozen=True)
class EmbeddingMatrix:
    """d x p embedding F with row access f_j."""

    entries: np.ndarray
    ensemble: str  # "gaussian_iid" | "deterministic_isometry"

    def __post_init__(self):
        F = np.asarray(self.entries, dtype=float)
        object.__setattr__(self, "entries", F)
        if F.ndim != 2:
            raise ValueError("embedding must be a 2-d matrix")
        d, p = F.shape
        if p > d:
            raise ValueError(f"manifold dimension p={p} exceeds ambient d={d}")
        if self.ensemble == "deterministic_isometry":
            gram = F.T @ F / p
            if np.abs(gram - np.eye(p)).max() > 1e-10:
                raise ValueError("isometry violated: F^T F / p != I_p")

    @property
    def d(self) -> int:
        return self.entries.shape[0]

    @property
    def p(self) -> int:
        return self.entries.shape[1]

    def row(self, j: int) -> np.ndarray:
        return self.entries[j]


def build_embedding(d: int, p: int, ensemble: str, seed: int) -> EmbeddingMatrix:
    """Draw F of the requested ensemble.

    gaussian_iid: i.i.d. standard-normal entries.  deterministic_isometry:
    orthonormalize a seeded Gaussian d x p matrix and scale columns to norm
    sqrt(p), so that F^T F / p = I_p.
    """
    if not 1 <= p <= d:
        raise ValueError(f"require d >= p >= 1, got d={d}, p={p}")
    rng = _rng(seed)
    G = rng.standard_normal((d, p))
    if ensemble == "gaussian_iid":
        return EmbeddingMatrix(entries=G, ensemble=ensemble)
    if ensemble == "deterministic_isometry":
        Q, _ = np.linalg.qr(G)
        return EmbeddingMatrix(entries=Q * np.sqrt(p), ensemble=ensemble)
    raise ValueError(f"unknown ensemble: {ensemble!r}")


@dataclass(frozen=True)
class ManifoldModel:
    """Full specification of the data distribution."""

    d: int
    p: int
    alpha: float
    rho: float
    mu: np.ndarray  # latent center; clusters sit at +-mu
    activation: Activation
    embedding: EmbeddingMatrix

    def __post_init__(self):
        mu = np.asarray(self.mu, dtype=float).reshape(-1)
        object.__setattr__(self, "mu", mu)
        if not 1 <= self.p <= self.d:
            raise ValueError("require 0 < p <= d")
        if self.rho <= 0:
            raise ValueError("rho must be positive")
        if self.alpha <= 0:
            raise ValueError("alpha must be positive")
        if mu.shape != (self.p,):
            raise ValueError(f"mu must have length p={self.p}")
        if self.embedding.entries.shape != (self.d, self.p):
            raise ValueError("embedding shape does not match (d, p)")

    @property
    def beta(self) -> float:
        return self.p / self.d

    @property
    def m(self) -> float:
        """Normalized center scale ||mu|| / sqrt(p)."""
        return float(np.linalg.norm(self.mu) / np.sqrt(self.p))

    @property
    def mu_tilde(self) -> np.ndarray:
        return self.mu / np.sqrt(self.p)

    @property
    def mu_tilde_norm_sq(self) -> float:
        return float(self.mu @ self.mu / self.p)

    def embed(self, latents: np.ndarray) -> np.ndarray:
        """Map latent coordinates to ambient space, phi(F xi / sqrt(p))."""
        pre = latents @ self.embedding.entries.T / np.sqrt(self.p)
        return self.activation(pre)


def make_model(d: int, p: int, alpha: float = 1.0, rho: float = 1.0,
               m: float = 1.0, mu: np.ndarray | None = None,
               activation: str | Activation = "linear",
               ensemble: str = "deterministic_isometry",
               seed: int = 0) -> ManifoldModel:
    """Convenience constructor; default center is m * ones(p)."""
    if isinstance(activation, str):
        activation = make_activation(activation)
    if mu is None:
        mu = m * np.ones(p)
    emb = build_embedding(d, p, ensemble, seed)
    return ManifoldModel(d=d, p=p, alpha=alpha, rho=rho, mu=np.asarray(mu, float),
                         activation=activation, embedding=emb)


def sample_count(alpha: float, d: int) -> int:
    """n = round(e^{alpha d}) with an overflow guard."""
    n = np.exp(alpha * d)
    if n > MAX_SAMPLES:
        raise ValueError(
            f"n = e^(alpha d) = {n:.3g} exceeds the {MAX_SAMPLES} cap")
    return max(1, int(round(n)))


@dataclass(frozen=True)
class Dataset:
    """n latent/ambient sample pairs with class labels in {+1, -1}."""

    latents: np.ndarray
    labels: np.ndarray
    ambient: np.ndarray
    seed: int

    @property
    def n(self) -> int:
        return self.ambient.shape[0]

    @property
    def d(self) -> int:
        return self.ambient.shape[1]


def sample_dataset(model: ManifoldModel, n: int, seed: int) -> Dataset:
    """Draw a balanced dataset of n samples.

    Labels alternate (+1, -1, ...), xi_i ~ N(s_i * mu, rho I_p) and
    x_i = phi(F xi_i / sqrt(p)).
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = _rng(seed)
    labels = np.where(np.arange(n) % 2 == 0, 1, -1)
    latents = (labels[:, None] * model.mu[None, :]
               + np.sqrt(model.rho) * rng.standard_normal((n, model.p)))
    ambient = model.embed(latents)
    return Dataset(latents=latents, labels=labels, ambient=ambient, seed=seed)


# ---------------------------------------------------------------------------
# serialization

def model_to_config(model: ManifoldModel) -> dict:
    cfg = {
        "d": model.d,
        "p": model.p,
        "alpha": model.alpha,
        "rho": model.rho,
        "m": model.m,
        "activation": model.activation.kind,
        "ensemble": model.embedding.ensemble,
    }
    default_mu = model.m * np.ones(model.p)
    if not np.allclose(model.mu, default_mu):
        cfg["mu"] = model.mu.tolist()
    return cfg


def model_from_config(cfg: dict, seed: int = 0) -> ManifoldModel:
    cfg = dict(cfg)
    mu = cfg.pop("mu", None)
    mu_file = cfg.pop("mu_file", None)
    if mu_file is not None:
        mu = np.loadtxt(mu_file)
    seed = cfg.pop("seed", seed)
    return make_model(
        d=int(cfg["d"]), p=int(cfg["p"]),
        alpha=float(cfg.get("alpha", 1.0)), rho=float(cfg.get("rho", 1.0)),
        m=float(cfg.get("m", 1.0)),
        mu=None if mu is None else np.asarray(mu, float),
        activation=cfg.get("activation", "linear"),
        ensemble=cfg.get("ensemble", "deterministic_isometry"),
        seed=int(seed))


def save_model_config(model: ManifoldModel, path: str | Path,
                      seed: int = 0) -> None:
    cfg = model_to_config(model)
    cfg["seed"] = seed
    Path(path).write_text(json.dumps(cfg, indent=2) + "\n")


def load_model_config(path: str | Path) -> ManifoldModel:
    return model_from_config(json.loads(Path(path).read_text()))


def dataset_to_csv(ds: Dataset, path: str | Path) -> None:
    """One row per sample: label, latent coordinates, ambient coordinates."""
    p = ds.latents.shape[1]
    d = ds.ambient.shape[1]
    header = (["label"] + [f"xi_{k}" for k in range(p)]
              + [f"x_{k}" for k in range(d)])
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for i in range(ds.n):
            writer.writerow([int(ds.labels[i]), *ds.latents[i], *ds.ambient[i]])
