"""Blocked Gibbs sampler for the truncated Dirichlet-process Gaussian
mixture with a conjugate normal-inverse-Wishart base measure.

Labels are stored 0-based internally; readers and writers in
:mod:`mixpost.io` convert to the 1-based convention used on disk.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .linalg import symmetrize
from .measures import MixingMeasure

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class NiwParams:
    mu0: np.ndarray
    lam: float
    Psi: np.ndarray
    nu: float

    def __post_init__(self):
        mu0 = np.atleast_1d(np.asarray(self.mu0, dtype=float))
        Psi = symmetrize(np.atleast_2d(np.asarray(self.Psi, dtype=float)))
        d = mu0.size
        if Psi.shape != (d, d):
            raise ValueError(f"Psi has shape {Psi.shape}, expected ({d}, {d})")
        np.linalg.cholesky(Psi)
        if not self.lam > 0:
            raise ValueError("lambda must be positive")
        if not self.nu > d - 1:
            raise ValueError(f"nu must exceed d - 1 = {d - 1}")
        object.__setattr__(self, "mu0", mu0)
        object.__setattr__(self, "Psi", Psi)
        object.__setattr__(self, "lam", float(self.lam))
        object.__setattr__(self, "nu", float(self.nu))

    @property
    def dim(self) -> int:
        return self.mu0.size


@dataclass(frozen=True)
class DPHyper:
    niw: NiwParams
    alpha: float = 1.0
    K: int = 100

    def __post_init__(self):
        if not self.alpha > 0:
            raise ValueError("alpha must be positive")
        if int(self.K) < 1:
            raise ValueError("truncation level K must be >= 1")
        object.__setattr__(self, "K", int(self.K))


def simulation_hyper(K=100) -> DPHyper:
    """Prior used for the four-component simulation study."""
    return DPHyper(NiwParams(np.zeros(2), 1.0, np.eye(2), 4.0), alpha=1.0, K=K)


def old_faithful_hyper(K=100) -> DPHyper:
    return DPHyper(NiwParams(np.array([3.0, 70.0]), 1.0, np.diag([4.0, 26.0]), 4.0),
                   alpha=1.0, K=K)


@dataclass
class GibbsState:
    sticks: np.ndarray
    weights: np.ndarray
    labels: np.ndarray
    means: np.ndarray
    covs: np.ndarray
    hyper: DPHyper

    def measure(self) -> MixingMeasure:
        return MixingMeasure(self.weights.copy(), self.means.copy(), self.covs.copy(), check=False)


@dataclass
class PosteriorDraw:
    measure: MixingMeasure
    labels: np.ndarray
    iteration: int = field(default=0)


def stick_weights(sticks) -> np.ndarray:
    """``w_k = beta_k prod_{j<k} (1 - beta_j)``."""
    sticks = np.asarray(sticks, dtype=float)
    remain = np.concatenate([[1.0], np.cumprod(1.0 - sticks[:-1])])
    return sticks * remain


def cluster_stats(data, labels, K):
    """Counts, means and centred scatter matrices for each of ``K`` clusters."""
    data = np.asarray(data, dtype=float)
    d = data.shape[1]
    counts = np.bincount(labels, minlength=K).astype(float)
    sums = np.zeros((K, d))
    np.add.at(sums, labels, data)
    ybar = np.divide(sums, counts[:, None], out=np.zeros_like(sums), where=counts[:, None] > 0)
    centred = data - ybar[labels]
    scatter = np.zeros((K, d, d))
    np.add.at(scatter, labels, centred[:, :, None] * centred[:, None, :])
    return counts, ybar, scatter


def niw_posterior_params(niw: NiwParams, counts, ybar, scatter):
    """Conjugate update, vectorized over clusters.

    Returns ``(mu_n, lam_n, Psi_n, nu_n)`` with leading cluster axis.
    Empty clusters get the prior parameters back.
    """
    counts = np.asarray(counts, dtype=float)
    lam_n = niw.lam + counts
    nu_n = niw.nu + counts
    mu_n = (niw.lam * niw.mu0[None, :] + counts[:, None] * ybar) / lam_n[:, None]
    dev = ybar - niw.mu0[None, :]
    shrink = niw.lam * counts / lam_n
    Psi_n = niw.Psi[None] + scatter + shrink[:, None, None] * dev[:, :, None] * dev[:, None, :]
    return mu_n, lam_n, symmetrize(Psi_n), nu_n


def sample_inverse_wishart(Psi, nu, rng):
    """Batched inverse-Wishart draws through the Bartlett decomposition.

    ``Psi`` is (K, d, d) and ``nu`` is (K,). Draws ``W ~ Wishart(Psi^-1, nu)``
    as ``(L A)(L A)^T`` with ``L L^T = Psi^-1`` and returns ``W^-1``.
    """
    Psi = np.asarray(Psi, dtype=float)
    K, d, _ = Psi.shape
    nu = np.broadcast_to(np.asarray(nu, dtype=float), (K,))
    Lp = np.linalg.cholesky(symmetrize(np.linalg.inv(Psi)))
    A = np.zeros((K, d, d))
    dof = nu[:, None] - np.arange(d)[None, :]
    A[:, np.arange(d), np.arange(d)] = np.sqrt(rng.chisquare(dof))
    il = np.tril_indices(d, -1)
    if il[0].size:
        A[:, il[0], il[1]] = rng.standard_normal((K, il[0].size))
    T = Lp @ A
    Tinv = np.linalg.inv(T)
    return symmetrize(np.swapaxes(Tinv, -1, -2) @ Tinv)


def sample_niw(mu_n, lam_n, Psi_n, nu_n, rng):
    covs = sample_inverse_wishart(Psi_n, nu_n, rng)
    K, d = mu_n.shape
    chol = np.linalg.cholesky(covs)
    z = rng.standard_normal((K, d))
    means = mu_n + np.einsum("kij,kj->ki", chol, z) / np.sqrt(lam_n)[:, None]
    return means, covs


def step_labels(state: GibbsState, data, rng) -> np.ndarray:
    """Draw each ``z_i`` from ``p(z_i = k | ...) ∝ w_k N(y_i | mu_k, Sigma_k)``."""
    data = np.asarray(data, dtype=float)
    if data.shape[0] == 0:
        state.labels = np.zeros(0, dtype=np.int64)
        return state.labels
    K = state.weights.size
    with np.errstate(divide="ignore"):
        logw = np.log(state.weights)
    L = np.linalg.cholesky(state.covs)
    Linv = np.linalg.inv(L)
    diff = data[:, None, :] - state.means[None, :, :]
    z = np.einsum("kij,nkj->nki", Linv, diff)
    logdet = 2.0 * np.log(np.diagonal(L, axis1=-2, axis2=-1)).sum(axis=-1)
    logp = logw[None, :] - 0.5 * (np.einsum("nki,nki->nk", z, z) + logdet[None, :])
    top = logp.max(axis=1, keepdims=True)
    if not np.all(np.isfinite(top)):
        raise FloatingPointError("all label probabilities vanished for some observation")
    prob = np.exp(logp - top)
    cum = np.cumsum(prob, axis=1)
    u = rng.random(data.shape[0]) * cum[:, -1]
    labels = np.minimum((cum < u[:, None]).sum(axis=1), K - 1)
    state.labels = labels.astype(np.int64)
    return state.labels


def step_sticks(state: GibbsState, rng):
    """``beta_k ~ Beta(1 + n_k, alpha + sum_{j>k} n_j)`` for ``k < K``; ``beta_K = 1``."""
    K = state.hyper.K
    counts = np.bincount(state.labels, minlength=K).astype(float)
    tail = np.concatenate([np.cumsum(counts[::-1])[::-1][1:], [0.0]])
    sticks = np.ones(K)
    if K > 1:
        sticks[:-1] = rng.beta(1.0 + counts[:-1], state.hyper.alpha + tail[:-1])
    state.sticks = sticks
    state.weights = stick_weights(sticks)
    return state.sticks, state.weights


def step_atoms(state: GibbsState, data, rng):
    """Draw every atom from its NIW full conditional (prior when empty)."""
    K = state.hyper.K
    counts, ybar, scatter = cluster_stats(_as_data(data, state.hyper.niw.dim), state.labels, K)
    post = niw_posterior_params(state.hyper.niw, counts, ybar, scatter)
    state.means, state.covs = sample_niw(*post, rng)
    return state.means, state.covs


def _as_data(data, d):
    data = np.asarray(data, dtype=float)
    if data.size == 0:
        return np.zeros((0, d))
    if data.ndim != 2 or data.shape[1] != d:
        raise ValueError(f"data must have shape (n, {d}), got {data.shape}")
    if not np.all(np.isfinite(data)):
        raise ValueError("data contains non-finite values")
    return data


def init_state(data, hyper: DPHyper, rng) -> GibbsState:
    """Uniform random labels; sticks and atoms from one prior draw."""
    niw = hyper.niw
    K, d = hyper.K, niw.dim
    n = data.shape[0]
    labels = rng.integers(0, K, size=n).astype(np.int64)
    sticks = np.ones(K)
    if K > 1:
        sticks[:-1] = rng.beta(1.0, hyper.alpha, size=K - 1)
    means, covs = sample_niw(
        np.broadcast_to(niw.mu0, (K, d)).copy(),
        np.full(K, niw.lam),
        np.broadcast_to(niw.Psi, (K, d, d)).copy(),
        np.full(K, niw.nu),
        rng,
    )
    return GibbsState(sticks, stick_weights(sticks), labels, means, covs, hyper)


def gibbs_sweep(state: GibbsState, data, rng):
    step_sticks(state, rng)
    step_atoms(state, data, rng)
    step_labels(state, data, rng)
    return state


def run_chain(data, hyper: DPHyper, iters=10000, burn_in=9000, thin=1, seed=0,
              callback=None) -> list[PosteriorDraw]:
    """Run the blocked Gibbs sampler and keep every ``thin``-th post-burn-in sweep.

    Returns ``(iters - burn_in) // thin`` draws; each packages all ``K``
    atoms with their stick-breaking weights and the labels of that sweep.
    """
    if not (iters > burn_in >= 0):
        raise ValueError("need iters > burn_in >= 0")
    if thin < 1:
        raise ValueError("thin must be >= 1")
    data = _as_data(data, hyper.niw.dim)
    rng = np.random.default_rng(seed)
    state = init_state(data, hyper, rng)
    draws = []
    for t in range(1, iters + 1):
        gibbs_sweep(state, data, rng)
        if t > burn_in and (t - burn_in) % thin == 0:
            draws.append(PosteriorDraw(state.measure(), state.labels.copy(), t))
        if callback is not None:
            callback(t, state)
    log.debug("chain finished: %d sweeps, %d draws kept", iters, len(draws))
    return draws


def conditional_density_refresh(labels, data, hyper: DPHyper, refresh_iters=10, seed=0):
    """Redraw sticks and atoms ``refresh_iters`` times with the labels frozen."""
    if refresh_iters < 1:
        raise ValueError("refresh_iters must be >= 1")
    data = _as_data(data, hyper.niw.dim)
    labels = np.asarray(labels, dtype=np.int64)
    if labels.size and (labels.min() < 0 or labels.max() >= hyper.K):
        raise ValueError("labels out of range for the truncation level")
    rng = np.random.default_rng(seed)
    state = init_state(data, hyper, rng)
    state.labels = labels.copy()
    out = []
    for _ in range(refresh_iters):
        step_sticks(state, rng)
        step_atoms(state, data, rng)
        out.append(state.measure())
    return out
