"""Bundled data, the four-component simulator and small fixture measures.

The Old Faithful file is the 272-row ``faithful`` data frame shipped
with R's ``datasets`` package (eruption duration and waiting time, both
in minutes), stored verbatim as CSV with header ``eruptions,waiting``.
"""
from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from importlib import resources

import numpy as np

from .evaluation import four_component_truth, simulate_four_component
from .measures import MixingMeasure

__all__ = [
    "OLD_FAITHFUL_SHA256",
    "DataCorruptionError",
    "load_old_faithful",
    "simulate_four_component",
    "four_component_truth",
    "Fixture",
    "FixtureSet",
    "fixtures",
]

OLD_FAITHFUL_SHA256 = "d40b983752ab7ec0b15b740089c3ca7b7b59d0c7433a029a1714d134de1e8d14"
_OLD_FAITHFUL = "old_faithful.csv"


class DataCorruptionError(RuntimeError):
    pass


def _bundled_bytes(name) -> bytes:
    return resources.files("mixpost").joinpath("data", name).read_bytes()


def load_old_faithful(verify=True, return_header=False):
    """The 272 x 2 Old Faithful matrix (eruptions, waiting).

    Raises
    ------
    DataCorruptionError
        If the bundled file does not match its recorded checksum.
    """
    raw = _bundled_bytes(_OLD_FAITHFUL)
    if verify:
        digest = hashlib.sha256(raw).hexdigest()
        if digest != OLD_FAITHFUL_SHA256:
            raise DataCorruptionError(f"old_faithful.csv checksum {digest} != {OLD_FAITHFUL_SHA256}")
    lines = raw.decode("ascii").strip().splitlines()
    header = lines[0].split(",")
    data = np.array([[float(v) for v in ln.split(",")] for ln in lines[1:]])
    return (data, header) if return_header else data


@dataclass(frozen=True)
class Fixture:
    """A named object with expected values; each tagged with its provenance.

    ``tag`` is one of ``"PAPER"`` (quoted from the source study),
    ``"TRIVIAL"`` (follows from definitions) or ``"DERIVED"`` (computed by
    an independent oracle named in ``oracle``).
    """
    name: str
    value: object
    expected: dict
    tag: str
    oracle: str = ""

    def __post_init__(self):
        if self.tag not in ("PAPER", "TRIVIAL", "DERIVED"):
            raise ValueError(f"unknown provenance tag {self.tag!r}")


@dataclass
class FixtureSet:
    items: dict = field(default_factory=dict)

    def add(self, fx: Fixture):
        self.items[fx.name] = fx

    def __getitem__(self, name) -> Fixture:
        return self.items[name]

    def __iter__(self):
        return iter(self.items.values())

    def __len__(self):
        return len(self.items)


def _gauss1d_pair():
    G1 = MixingMeasure([1.0], [[0.0]], [[[1.0]]])
    G2 = MixingMeasure([1.0], [[3.0]], [[[4.0]]])
    return G1, G2


def fixtures() -> FixtureSet:
    """Small measures and label vectors with expected values."""
    fs = FixtureSet()
    G1, G2 = _gauss1d_pair()
    # W2^2 between N(0,1) and N(3,4): (0-3)^2 + (1-2)^2
    fs.add(Fixture("gauss_1d_pair", (G1, G2), {"gaussian_w2_sq": 10.0}, "DERIVED",
                   "closed form (m1-m2)^2 + (s1-s2)^2"))
    fs.add(Fixture("four_component_truth", four_component_truth(),
                   {"weights": [0.25] * 4, "cov_diag": 2.25}, "PAPER"))
    fs.add(Fixture("partition_swap", (np.array([0, 0, 1, 1]), np.array([1, 1, 0, 0])),
                   {"binder": 0.0, "vi": 0.0, "ari": 1.0}, "TRIVIAL"))
    fs.add(Fixture("partition_cross", (np.array([0, 0, 1, 1]), np.array([0, 1, 0, 1])),
                   {"binder": 4.0 / 6.0, "vi": 2.0 * np.log(2.0), "ari": -0.5}, "DERIVED",
                   "pair counting by enumeration; entropies of the 2x2 table"))
    fs.add(Fixture("old_faithful_shape", None, {"rows": 272, "cols": 2}, "PAPER"))
    return fs
