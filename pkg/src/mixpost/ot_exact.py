"""Exact optimal transport: discrete OT by network simplex, the closed-form
Gaussian W2, mixture Wasserstein and the 1-D quantile formula."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._backend import kernels
from .linalg import matrix_sqrt, symmetrize
from .measures import Discrete1DMeasure, GaussianAtom, MixingMeasure

MARGINAL_TOL = 1e-8


class InfeasibleTransport(ValueError):
    """Marginals with different total mass."""


@dataclass(frozen=True)
class TransportPlan:
    plan: np.ndarray
    row_marginal: np.ndarray
    col_marginal: np.ndarray

    def check(self, atol=1e-9) -> bool:
        return bool(
            np.all(self.plan >= 0)
            and np.allclose(self.plan.sum(axis=1), self.row_marginal, atol=atol, rtol=0)
            and np.allclose(self.plan.sum(axis=0), self.col_marginal, atol=atol, rtol=0)
        )


def exact_discrete_wasserstein(cost, alpha, beta, check_optimality=False):
    """Solve ``min <cost, pi>`` over couplings of ``alpha`` and ``beta``.

    Zero-mass atoms are removed before calling the simplex kernel and
    reinserted as empty rows/columns in the returned plan.

    Returns
    -------
    value : float
    plan : TransportPlan
    """
    C = np.asarray(cost, dtype=float)
    a = np.asarray(alpha, dtype=float).reshape(-1)
    b = np.asarray(beta, dtype=float).reshape(-1)
    if C.shape != (a.size, b.size):
        raise ValueError(f"cost shape {C.shape} does not match marginals ({a.size}, {b.size})")
    if not np.all(np.isfinite(C)):
        raise ValueError("cost matrix must be finite")
    if np.any(a < 0) or np.any(b < 0):
        raise ValueError("marginals must be nonnegative")
    if abs(a.sum() - b.sum()) > MARGINAL_TOL:
        raise InfeasibleTransport(f"marginal totals differ: {a.sum()!r} vs {b.sum()!r}")
    ia = np.flatnonzero(a > 0)
    ib = np.flatnonzero(b > 0)
    # equalize the totals exactly so the simplex basis stays consistent
    bb = b[ib] * (a[ia].sum() / b[ib].sum())
    value, sub = kernels.transport_simplex(np.ascontiguousarray(C[np.ix_(ia, ib)]), a[ia], bb)
    plan = np.zeros_like(C)
    plan[np.ix_(ia, ib)] = sub
    if check_optimality:
        _check_slackness(C[np.ix_(ia, ib)], sub)
    return value, TransportPlan(plan, a, b)


def _check_slackness(C, plan, tol=1e-9):
    """Recover duals on the support of ``plan`` and check reduced costs."""
    n, m = C.shape
    support = np.argwhere(plan > 0)
    u = np.full(n, np.nan)
    v = np.full(m, np.nan)
    u[support[0, 0]] = 0.0
    changed = True
    while changed:
        changed = False
        for i, j in support:
            if np.isnan(v[j]) and not np.isnan(u[i]):
                v[j] = C[i, j] - u[i]
                changed = True
            elif np.isnan(u[i]) and not np.isnan(v[j]):
                u[i] = C[i, j] - v[j]
                changed = True
    if np.any(np.isnan(u)) or np.any(np.isnan(v)):
        return  # degenerate support forest; duals not unique
    red = C - u[:, None] - v[None, :]
    scale = max(1.0, np.abs(C).max())
    if red.min() < -tol * scale:
        raise AssertionError(f"complementary slackness violated: min reduced cost {red.min()}")


def bures_trace(S1, S2) -> float:
    """``Tr((S1^{1/2} S2 S1^{1/2})^{1/2})``."""
    r = matrix_sqrt(S1)
    return float(np.trace(matrix_sqrt(symmetrize(r @ S2 @ r))))


def gaussian_w2_sq(a: GaussianAtom, b: GaussianAtom) -> float:
    """Squared W2 between ``N(a.mean, a.cov)`` and ``N(b.mean, b.cov)``."""
    if a.dim != b.dim:
        raise ValueError(f"dimension mismatch: {a.dim} vs {b.dim}")
    dm = a.mean - b.mean
    val = dm @ dm + np.trace(a.cov) + np.trace(b.cov) - 2.0 * bures_trace(a.cov, b.cov)
    return max(float(val), 0.0)


def gaussian_w2_sq_matrix(means1, covs1, means2, covs2) -> np.ndarray:
    """Pairwise squared Gaussian W2 between two stacks of atoms."""
    r1 = matrix_sqrt(covs1)  # (K1, d, d)
    inner = np.einsum("iab,jbc,icd->ijad", r1, covs2, r1)
    bures = np.trace(matrix_sqrt(symmetrize(inner)), axis1=-2, axis2=-1)
    dm = means1[:, None, :] - means2[None, :, :]
    tr1 = np.trace(covs1, axis1=-2, axis2=-1)
    tr2 = np.trace(covs2, axis1=-2, axis2=-1)
    C = np.einsum("ijd,ijd->ij", dm, dm) + tr1[:, None] + tr2[None, :] - 2.0 * bures
    return np.maximum(C, 0.0)


def mixture_wasserstein_sq(G1: MixingMeasure, G2: MixingMeasure, return_plan=False):
    """Discrete OT between mixing measures with Gaussian-W2^2 ground cost."""
    if G1.dim != G2.dim:
        raise ValueError(f"dimension mismatch: {G1.dim} vs {G2.dim}")
    C = gaussian_w2_sq_matrix(G1.means, G1.covs, G2.means, G2.covs)
    value, plan = exact_discrete_wasserstein(C, G1.weights, G2.weights)
    return (value, plan) if return_plan else value


def wasserstein_1d(p: float, G1: Discrete1DMeasure, G2: Discrete1DMeasure) -> float:
    """``W_p^p`` between two discrete measures on the line.

    Walks both cumulative distribution functions jointly and integrates
    ``|x - y|^p`` over each overlapping quantile interval.
    """
    if p < 1:
        raise ValueError("p must be >= 1")
    return float(kernels.w1d_sorted(G1.support, G1.weights, G2.support, G2.weights, float(p)))
