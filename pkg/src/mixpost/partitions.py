"""Partition losses (Binder, VI, one-minus-ARI) and the partition-first
baseline summary that picks the visited partition with least expected loss.

Label vectors are integer arrays; only the induced partition matters, so
any coding (0- or 1-based, sparse ids) is accepted.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.special import xlogy

LOSSES = ("binder", "vi", "omari")


@dataclass(frozen=True)
class ContingencyTable:
    counts: np.ndarray

    @classmethod
    def from_labels(cls, z1, z2) -> "ContingencyTable":
        z1 = np.asarray(z1).reshape(-1)
        z2 = np.asarray(z2).reshape(-1)
        if z1.shape != z2.shape:
            raise ValueError(f"label vectors differ in length: {z1.size} vs {z2.size}")
        _, a = np.unique(z1, return_inverse=True)
        _, b = np.unique(z2, return_inverse=True)
        ka, kb = a.max() + 1, b.max() + 1
        counts = np.bincount(a * kb + b, minlength=ka * kb).reshape(ka, kb)
        return cls(counts)

    @property
    def n(self) -> int:
        return int(self.counts.sum())

    @property
    def row_sums(self):
        return self.counts.sum(axis=1)

    @property
    def col_sums(self):
        return self.counts.sum(axis=0)


def _pairs(x):
    x = np.asarray(x, dtype=float)
    return float(np.sum(x * (x - 1.0)) / 2.0)


def _encode(z):
    return np.unique(np.asarray(z).reshape(-1), return_inverse=True)[1]


def _table(a, b):
    """Contingency counts of two already-encoded label vectors."""
    if a.shape != b.shape:
        raise ValueError(f"label vectors differ in length: {a.size} vs {b.size}")
    ka, kb = a.max() + 1, b.max() + 1
    return np.bincount(a * kb + b, minlength=ka * kb).reshape(ka, kb)


def _binder_counts(counts):
    n = counts.sum()
    if n < 2:
        raise ValueError("Binder loss needs n >= 2")
    disagree = _pairs(counts.sum(axis=1)) + _pairs(counts.sum(axis=0)) - 2.0 * _pairs(counts)
    return disagree / (n * (n - 1) / 2.0)


def _vi_counts(counts):
    n = counts.sum()
    p = counts / n
    pr = p.sum(axis=1)
    pc = p.sum(axis=0)
    # VI = 2 H(z1, z2) - H(z1) - H(z2)
    h_joint = -xlogy(p, p).sum()
    h_r = -xlogy(pr, pr).sum()
    h_c = -xlogy(pc, pc).sum()
    return max(float(2.0 * h_joint - h_r - h_c), 0.0)


def _ari_counts(counts):
    n = counts.sum()
    if n < 2:
        raise ValueError("ARI needs n >= 2")
    idx = _pairs(counts)
    a = _pairs(counts.sum(axis=1))
    b = _pairs(counts.sum(axis=0))
    total = n * (n - 1) / 2.0
    expected = a * b / total
    max_idx = 0.5 * (a + b)
    if max_idx == expected:
        # both partitions trivial (all-one or all-singletons) and identical
        return 1.0
    return (idx - expected) / (max_idx - expected)


def _omari_counts(counts):
    return 1.0 - _ari_counts(counts)


def binder_loss(z1, z2) -> float:
    """Fraction of the ``n choose 2`` pairs co-clustered in exactly one partition."""
    return float(_binder_counts(ContingencyTable.from_labels(z1, z2).counts))


def vi_loss(z1, z2) -> float:
    """Variation of information in nats, ``H(z1) + H(z2) - 2 I(z1, z2)``."""
    return _vi_counts(ContingencyTable.from_labels(z1, z2).counts)


def adjusted_rand_index(z1, z2) -> float:
    return float(_ari_counts(ContingencyTable.from_labels(z1, z2).counts))


def omari_loss(z1, z2) -> float:
    return 1.0 - adjusted_rand_index(z1, z2)


_FROM_COUNTS = {
    "binder": _binder_counts,
    "vi": _vi_counts,
    "omari": _omari_counts,
}


LOSS_FUNCTIONS: dict[str, Callable] = {
    "binder": binder_loss,
    "vi": vi_loss,
    "omari": omari_loss,
}


def get_loss(loss) -> Callable:
    if callable(loss):
        return loss
    try:
        return LOSS_FUNCTIONS[loss]
    except KeyError:
        raise ValueError(f"unknown partition loss {loss!r}; expected one of {LOSSES}") from None


def expected_partition_loss(loss, candidate, samples: Sequence) -> float:
    """Average of ``loss(sample, candidate)`` over the posterior samples."""
    if len(samples) == 0:
        raise ValueError("need at least one posterior sample")
    fn = get_loss(loss)
    return float(np.mean([fn(z, candidate) for z in samples]))


def loss_matrix(loss, samples: Sequence) -> np.ndarray:
    """Symmetric matrix of pairwise partition losses."""
    M = len(samples)
    out = np.zeros((M, M))
    if isinstance(loss, str) and loss in _FROM_COUNTS:
        # encode every sample once; each pair then costs one bincount
        fn = _FROM_COUNTS[loss]
        codes = [_encode(z) for z in samples]
        for i in range(M):
            for j in range(i + 1, M):
                out[i, j] = out[j, i] = fn(_table(codes[i], codes[j]))
        return out
    fn = get_loss(loss)
    for i in range(M):
        for j in range(i + 1, M):
            out[i, j] = out[j, i] = fn(samples[i], samples[j])
    return out


def greedy_partition_summary(loss, samples: Sequence, matrix=None):
    """Visited partition minimizing the expected loss; ties go to the lowest index.

    Returns
    -------
    index : int
    labels : ndarray
    expected : ndarray
        Expected loss of every sample used as the candidate.
    """
    if len(samples) == 0:
        raise ValueError("need at least one posterior sample")
    D = loss_matrix(loss, samples) if matrix is None else np.asarray(matrix)
    expected = D.mean(axis=1)
    idx = int(np.argmin(expected))
    return idx, np.asarray(samples[idx]), expected
