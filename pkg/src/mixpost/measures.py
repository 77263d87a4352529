"""Probability measure value types shared by the distances, the sampler and
the summarizer."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .linalg import as_spd

WEIGHT_ATOL = 1e-10
DEFAULT_PRUNE_FLOOR = 1e-8


@dataclass(frozen=True)
class GaussianAtom:
    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        mean = np.atleast_1d(np.asarray(self.mean, dtype=float))
        cov = as_spd(np.atleast_2d(np.asarray(self.cov, dtype=float)))
        if mean.ndim != 1 or cov.shape != (mean.size, mean.size):
            raise ValueError(
                f"cov shape {cov.shape} does not match mean dimension {mean.size}"
            )
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)

    @property
    def dim(self) -> int:
        return self.mean.size


class MixingMeasure:
    """Finite measure ``sum_k w_k delta_(mu_k, Sigma_k)``.

    Stored as stacked arrays: ``weights`` (K,), ``means`` (K, d) and
    ``covs`` (K, d, d). Instances are treated as immutable.
    """

    __slots__ = ("weights", "means", "covs")

    def __init__(self, weights, means, covs, check=True):
        w = np.asarray(weights, dtype=float).reshape(-1)
        mu = np.asarray(means, dtype=float)
        if mu.ndim == 1:
            mu = mu[:, None]
        S = np.asarray(covs, dtype=float)
        if S.ndim == 1:
            S = S[:, None, None]
        if w.size == 0:
            raise ValueError("mixing measure needs at least one atom")
        if mu.shape[0] != w.size or S.shape[0] != w.size:
            raise ValueError("weights, means and covs disagree on the atom count")
        d = mu.shape[1]
        if S.shape[1:] != (d, d):
            raise ValueError(f"covariance shape {S.shape[1:]} != ({d}, {d})")
        if check:
            if np.any(w < 0) or abs(w.sum() - 1.0) > WEIGHT_ATOL:
                raise ValueError(f"weights must lie on the simplex (sum={w.sum()!r})")
            if not np.all(np.isfinite(mu)):
                raise ValueError("non-finite atom mean")
            S = as_spd(S)
        for arr in (w, mu, S):
            arr.setflags(write=False)
        self.weights = w
        self.means = mu
        self.covs = S

    @classmethod
    def from_atoms(cls, weights, atoms: Sequence[GaussianAtom]):
        dims = {a.dim for a in atoms}
        if len(dims) > 1:
            raise ValueError(f"atoms have mixed dimensions {sorted(dims)}")
        return cls(
            weights,
            np.stack([a.mean for a in atoms]),
            np.stack([a.cov for a in atoms]),
        )

    @property
    def n_atoms(self) -> int:
        return self.weights.size

    @property
    def dim(self) -> int:
        return self.means.shape[1]

    @property
    def atoms(self) -> list[GaussianAtom]:
        return [GaussianAtom(m, S) for m, S in zip(self.means, self.covs)]

    def __len__(self):
        return self.n_atoms

    def __repr__(self):
        return f"MixingMeasure(K={self.n_atoms}, d={self.dim})"

    def __eq__(self, other):
        if not isinstance(other, MixingMeasure):
            return NotImplemented
        return (
            self.weights.shape == other.weights.shape
            and self.means.shape == other.means.shape
            and np.array_equal(self.weights, other.weights)
            and np.array_equal(self.means, other.means)
            and np.array_equal(self.covs, other.covs)
        )

    __hash__ = None

    def permuted(self, perm) -> "MixingMeasure":
        perm = np.asarray(perm)
        return MixingMeasure(self.weights[perm], self.means[perm], self.covs[perm], check=False)

    def to_dict(self) -> dict:
        return {
            "weights": self.weights.tolist(),
            "atoms": [
                {"mean": m.tolist(), "cov": S.tolist()}
                for m, S in zip(self.means, self.covs)
            ],
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "MixingMeasure":
        atoms = obj["atoms"]
        return cls(
            obj["weights"],
            np.array([a["mean"] for a in atoms], dtype=float),
            np.array([a["cov"] for a in atoms], dtype=float),
        )


@dataclass(frozen=True)
class Discrete1DMeasure:
    support: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.support, dtype=float).reshape(-1)
        w = np.asarray(self.weights, dtype=float).reshape(-1)
        if x.shape != w.shape or x.size == 0:
            raise ValueError("support and weights must be non-empty and equal length")
        if np.any(np.diff(x) < 0):
            raise ValueError("support must be sorted ascending")
        if np.any(w < 0) or abs(w.sum() - 1.0) > WEIGHT_ATOL:
            raise ValueError("weights must lie on the simplex")
        object.__setattr__(self, "support", x)
        object.__setattr__(self, "weights", w)

    @classmethod
    def from_unsorted(cls, values, weights):
        values = np.asarray(values, dtype=float)
        order = np.argsort(values, kind="stable")
        return cls(values[order], np.asarray(weights, dtype=float)[order])

    def mean(self) -> float:
        return float(self.weights @ self.support)


def project_1d(G: MixingMeasure, proj: Callable[[GaussianAtom], float]) -> Discrete1DMeasure:
    """Push ``G`` forward through a scalar function of its atoms."""
    values = np.array([proj(atom) for atom in G.atoms], dtype=float)
    return Discrete1DMeasure.from_unsorted(values, G.weights)


def prune(G: MixingMeasure, floor: float = DEFAULT_PRUNE_FLOOR) -> MixingMeasure:
    """Drop atoms with weight below ``floor`` and renormalize."""
    if not 0.0 <= floor < 1.0:
        raise ValueError("floor must lie in [0, 1)")
    if floor == 0.0:
        return G
    keep = G.weights >= floor
    if not np.any(keep):
        raise ValueError(f"every atom weight is below the prune floor {floor}")
    if np.all(keep):
        return G
    w = G.weights[keep]
    return MixingMeasure(w / w.sum(), G.means[keep], G.covs[keep], check=False)


def _log_gauss(x, means, covs):
    """log N(x_i | mu_k, Sigma_k) as an (n, K) array."""
    d = means.shape[1]
    L = np.linalg.cholesky(covs)
    Linv = np.linalg.inv(L)
    diff = x[:, None, :] - means[None, :, :]
    z = np.einsum("kij,nkj->nki", Linv, diff)
    maha = np.einsum("nki,nki->nk", z, z)
    logdet = 2.0 * np.log(np.diagonal(L, axis1=-2, axis2=-1)).sum(axis=-1)
    return -0.5 * (maha + logdet[None, :] + d * np.log(2.0 * np.pi))


def _as_points(G, X):
    X = np.asarray(X, dtype=float)
    if X.ndim == 1 and G.dim == 1:
        X = X[:, None]
    X = np.atleast_2d(X)
    if X.shape[1] != G.dim:
        raise ValueError(f"points have dimension {X.shape[1]}, measure has {G.dim}")
    return X


def component_log_density(G: MixingMeasure, X) -> np.ndarray:
    """``log w_k + log N(x_i | mu_k, Sigma_k)``, shape (n, K)."""
    X = _as_points(G, X)
    with np.errstate(divide="ignore"):
        logw = np.log(G.weights)
    return logw[None, :] + _log_gauss(X, G.means, G.covs)


def mixture_density_many(G: MixingMeasure, X) -> np.ndarray:
    """Mixture density at each row of an ``(n, d)`` array."""
    X = _as_points(G, X)
    nz = G.weights > 0
    return np.exp(_log_gauss(X, G.means[nz], G.covs[nz])) @ G.weights[nz]


def mixture_density(G: MixingMeasure, x) -> float:
    """Gaussian mixture density ``sum_k w_k N(x | mu_k, Sigma_k)`` at one point."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if x.shape != (G.dim,):
        raise ValueError(f"point has shape {x.shape}, expected ({G.dim},)")
    return float(mixture_density_many(G, x[None, :])[0])
