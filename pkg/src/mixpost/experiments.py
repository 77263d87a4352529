"""End-to-end experiment driver: sampler -> summaries -> evaluation tables.

Two families of point estimates are produced from one set of posterior
draws:

* measure-first: the visited mixing measure with the least expected
  sliced loss (``vectorized``/``mix_sw``/``smix_w``), its density and its
  MAP partition;
* partition-first: the visited partition with the least expected
  Binder/VI/omARI loss, whose density is obtained by redrawing sticks and
  atoms with the partition frozen.

The evaluation reproduces the clustering, density and mixing-measure
tables of the simulation and Old Faithful studies.
"""
from __future__ import annotations

import dataclasses
import logging
import time
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from . import io as mio
from .evaluation import GridSlicer, GridSpec, DensityGrid, density_on_grid, mixing_measure_loss_table
from .gibbs import DPHyper, NiwParams, PosteriorDraw, conditional_density_refresh, old_faithful_hyper, run_chain, simulation_hyper
from .measures import MixingMeasure, prune
from .partitions import LOSSES, LOSS_FUNCTIONS, greedy_partition_summary, loss_matrix
from .sliced import KINDS
from .summarize import summarize_posterior

log = logging.getLogger(__name__)

METHOD_NAMES = {
    "vectorized": "SW",
    "mix_sw": "Mix-SW",
    "smix_w": "SMix-W",
    "binder": "Binder",
    "vi": "VI",
    "omari": "omARI",
}
LOSS_COLUMN = {"binder": "Binder", "vi": "VI", "omari": "omARI"}

# independent random streams derived from the master seed
STREAM_CHAIN = 1
STREAM_DIRECTIONS = 2
STREAM_REFRESH = 3
STREAM_EVAL = 4

BASELINE_DENSITY_MODES = ("loss_average", "mean_density")
PRIORS = ("simulation", "old_faithful")


def derive_seed(seed: int, *stream: int) -> int:
    """A 32-bit seed for one named stream of the master seed."""
    return int(np.random.SeedSequence([int(seed), *map(int, stream)]).generate_state(1)[0])


@dataclass
class PipelineConfig:
    """Every knob of a run; defaults follow the simulation study."""
    seed: int = 0
    n: int = 200
    prior: str = "simulation"
    mu0: list | None = None
    Psi: list | None = None
    lam: float = 1.0
    nu: float = 4.0
    alpha: float = 1.0
    K: int = 100
    iters: int = 10000
    burn_in: int = 9000
    thin: int = 1
    kinds: list = field(default_factory=lambda: list(KINDS))
    losses: list = field(default_factory=lambda: list(LOSSES))
    p: float = 2.0
    L: int = 100
    prune_floor: float = 1e-8
    shared: bool = True
    refresh_iters: int = 10
    baseline_density: str = "loss_average"
    resolution: int = 100
    margin: float = 1.0
    eval_L: int = 1000
    sw_draws: int | None = None
    mm_L: int | None = None
    threads: int = 1

    def __post_init__(self):
        self.validate()

    def validate(self):
        err = mio.ValidationError
        if not isinstance(self.seed, (int, np.integer)) or self.seed < 0:
            raise err("seed must be a nonnegative integer")
        if self.n < 1:
            raise err("n must be >= 1")
        if self.prior not in PRIORS:
            raise err(f"prior must be one of {PRIORS}")
        if not (self.iters > self.burn_in >= 0):
            raise err("need iters > burn_in >= 0")
        if self.thin < 1:
            raise err("thin must be >= 1")
        if self.K < 1:
            raise err("K must be >= 1")
        for k in self.kinds:
            if k not in KINDS:
                raise err(f"unknown sliced metric {k!r}; expected one of {KINDS}")
        for loss in self.losses:
            if loss not in LOSSES:
                raise err(f"unknown partition loss {loss!r}; expected one of {LOSSES}")
        if self.p < 1:
            raise err("p must be >= 1")
        if self.L < 1 or self.eval_L < 1 or (self.mm_L is not None and self.mm_L < 1):
            raise err("numbers of projections must be >= 1")
        if not 0.0 <= self.prune_floor < 1.0:
            raise err("prune_floor must lie in [0, 1)")
        if self.refresh_iters < 1:
            raise err("refresh_iters must be >= 1")
        if self.baseline_density not in BASELINE_DENSITY_MODES:
            raise err(f"baseline_density must be one of {BASELINE_DENSITY_MODES}")
        if self.resolution < 1:
            raise err("resolution must be >= 1")
        if self.sw_draws is not None and self.sw_draws < 1:
            raise err("sw_draws must be >= 1 or null")
        if self.threads < 1:
            raise err("threads must be >= 1")

    @classmethod
    def from_dict(cls, obj: Mapping) -> "PipelineConfig":
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(obj) - names)
        if unknown:
            raise mio.ValidationError(f"unknown config keys: {unknown}")
        try:
            return cls(**obj)
        except TypeError as exc:
            raise mio.ValidationError(str(exc)) from None

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def replace(self, **kw) -> "PipelineConfig":
        return PipelineConfig.from_dict({**self.to_dict(), **kw})

    def hyper(self, dim: int | None = None) -> DPHyper:
        base = simulation_hyper() if self.prior == "simulation" else old_faithful_hyper()
        mu0 = base.niw.mu0 if self.mu0 is None else np.asarray(self.mu0, dtype=float)
        Psi = base.niw.Psi if self.Psi is None else np.asarray(self.Psi, dtype=float)
        if dim is not None and mu0.size != dim:
            raise mio.ValidationError(f"prior mean has dimension {mu0.size}, data has {dim}")
        try:
            return DPHyper(NiwParams(mu0, self.lam, Psi, self.nu), self.alpha, self.K)
        except (ValueError, np.linalg.LinAlgError) as exc:
            raise mio.ValidationError(f"invalid prior: {exc}") from None

    @property
    def hash(self) -> str:
        return mio.config_hash(self.to_dict())

    def provenance(self) -> dict:
        return mio.provenance(self.to_dict(), self.seed)


def fit_chain(data, cfg: PipelineConfig) -> list[PosteriorDraw]:
    data = np.asarray(data, dtype=float)
    return run_chain(data, cfg.hyper(data.shape[1]), cfg.iters, cfg.burn_in, cfg.thin,
                     seed=derive_seed(cfg.seed, STREAM_CHAIN))


# ---------------------------------------------------------------- summaries


@dataclass
class MethodSummary:
    """A point estimate from one method.

    ``measures`` holds ``[G_hat]`` for measure-first methods and the
    refreshed draws given the frozen partition for partition-first ones.
    """
    method: str
    family: str
    index: int
    labels: np.ndarray
    measures: list
    expected_loss: float
    row_means: np.ndarray | None = None

    @property
    def name(self) -> str:
        return METHOD_NAMES.get(self.method, self.method)

    @property
    def measure(self) -> MixingMeasure | None:
        return self.measures[0] if self.family == "measure" else None

    @property
    def n_clusters(self) -> int:
        return int(np.unique(self.labels).size)

    def to_json(self) -> dict:
        out = {
            "method": self.method,
            "family": self.family,
            "index": int(self.index),
            "expected_loss": float(self.expected_loss),
            "n_clusters": self.n_clusters,
            "labels": (np.asarray(self.labels) + 1).tolist(),
        }
        if self.family == "measure":
            out["measure"] = self.measures[0].to_dict()
        else:
            out["refreshed_measures"] = [G.to_dict() for G in self.measures]
        if self.row_means is not None:
            out["row_means"] = np.asarray(self.row_means).tolist()
        return out

    @classmethod
    def from_json(cls, obj: Mapping) -> "MethodSummary":
        try:
            family = obj["family"]
            if family == "measure":
                measures = [MixingMeasure.from_dict(obj["measure"])]
            elif family == "partition":
                measures = [MixingMeasure.from_dict(m) for m in obj["refreshed_measures"]]
            else:
                raise ValueError(f"unknown family {family!r}")
            labels = np.asarray(obj["labels"], dtype=np.int64) - 1
            rm = obj.get("row_means")
            return cls(obj["method"], family, int(obj["index"]), labels, measures,
                       float(obj["expected_loss"]), None if rm is None else np.asarray(rm, dtype=float))
        except (KeyError, TypeError, ValueError) as exc:
            raise mio.ValidationError(f"malformed summary: {exc}") from None


def summarize_methods(draws: Sequence[PosteriorDraw], data, cfg: PipelineConfig,
                      hyper: DPHyper | None = None) -> dict[str, MethodSummary]:
    """Run every configured measure-first and partition-first summary."""
    if len(draws) == 0:
        raise mio.ValidationError("no posterior draws to summarize")
    data = np.asarray(data, dtype=float)
    hyper = cfg.hyper(data.shape[1]) if hyper is None else hyper
    measures = [d.measure for d in draws]
    out: dict[str, MethodSummary] = {}
    dir_seed = derive_seed(cfg.seed, STREAM_DIRECTIONS)
    for kind in cfg.kinds:
        s = summarize_posterior(measures, data, kind, cfg.p, cfg.L, dir_seed, cfg.prune_floor,
                                cfg.shared, cfg.threads)
        out[kind] = MethodSummary(kind, "measure", s.index, s.labels, [s.measure],
                                  s.expected_loss, s.row_means)
    samples = [d.labels for d in draws]
    refreshed: dict[int, list] = {}
    for loss in cfg.losses:
        idx, labels, expected = greedy_partition_summary(loss, samples, loss_matrix(loss, samples))
        if idx not in refreshed:
            # the refresh stream depends only on the chosen draw, so methods
            # agreeing on the partition share their refreshed densities
            refreshed[idx] = conditional_density_refresh(
                labels, data, hyper, cfg.refresh_iters,
                seed=derive_seed(cfg.seed, STREAM_REFRESH, idx))
        out[loss] = MethodSummary(loss, "partition", idx, np.asarray(labels), refreshed[idx],
                                  float(expected[idx]), expected)
    return out


# ------------------------------------------------------------------- tables


@dataclass
class Table:
    name: str
    columns: list
    rows: dict = field(default_factory=dict)
    notes: dict = field(default_factory=dict)

    def add(self, method: str, values: Sequence):
        if len(values) != len(self.columns):
            raise ValueError("row length does not match the columns")
        self.rows[method] = list(values)

    def value(self, method: str, column: str):
        return self.rows[method][self.columns.index(column)]

    def column(self, column: str) -> dict:
        j = self.columns.index(column)
        return {m: v[j] for m, v in self.rows.items()}

    def to_csv(self, path, meta: dict | None = None):
        meta = {**(meta or {}), **self.notes}
        mio.write_csv(path, ["method", *self.columns], ([m, *v] for m, v in self.rows.items()), meta)

    def to_text(self) -> str:
        head = ["method", *self.columns]
        body = [[m, *(mio.fmt(x) if not isinstance(x, str) else x for x in v)] for m, v in self.rows.items()]
        widths = [max(len(str(r[j])) for r in [head, *body]) for j in range(len(head))]
        return "\n".join("  ".join(str(c).ljust(w) for c, w in zip(r, widths)) for r in [head, *body])


def clustering_table(summaries: Mapping[str, MethodSummary], draw_labels: Sequence,
                     truth_labels=None, losses=LOSSES) -> Table:
    cols = ["k_star"] + [f"E[{LOSS_COLUMN[l]}]" for l in losses]
    if truth_labels is not None:
        cols += [f"{LOSS_COLUMN[l]}(truth)" for l in losses]
    table = Table("clustering", cols)
    cache: dict[bytes, list] = {}
    for s in _ordered(summaries):
        key = np.asarray(s.labels, dtype=np.int64).tobytes()
        if key not in cache:
            row = [s.n_clusters]
            row += [float(np.mean([LOSS_FUNCTIONS[l](s.labels, z) for z in draw_labels])) for l in losses]
            if truth_labels is not None:
                row += [float(LOSS_FUNCTIONS[l](s.labels, truth_labels)) for l in losses]
            cache[key] = row
        table.add(s.name, cache[key])
    return table


def _ordered(summaries: Mapping[str, MethodSummary]):
    """Partition-first rows first, then measure-first, each in canonical order."""
    order = list(LOSSES) + list(KINDS)
    keys = sorted(summaries, key=lambda k: order.index(k) if k in order else len(order))
    return [summaries[k] for k in keys]


def _sw_subset(M, k):
    if k is None or k >= M:
        return np.arange(M)
    return np.unique(np.round(np.linspace(0, M - 1, k)).astype(np.int64))


@dataclass
class DensityEvaluation:
    table: Table
    spec: GridSpec
    grids: dict  # display name -> DensityGrid of the point-estimate density
    truth_grid: DensityGrid | None = None


def density_table(summaries: Mapping[str, MethodSummary], draws: Sequence[MixingMeasure], data,
                  cfg: PipelineConfig, truth: MixingMeasure | None = None) -> DensityEvaluation:
    """Expected TV and SW between each point-estimate density and the posterior densities.

    TV uses raw grid values; SW renormalizes each grid to a probability
    vector on the cell centres. SW entries are reported as
    ``(mean of SW_p^p)^(1/p)``. For partition-first methods the losses are
    averaged over the refreshed densities (``loss_average``) or computed
    for their mean density (``mean_density``).
    """
    spec = GridSpec.from_data(data, cfg.resolution, cfg.margin)
    draw_grids = [density_on_grid(prune(G, cfg.prune_floor), spec) for G in draws]
    draw_vals = np.stack([g.values for g in draw_grids])
    sw_idx = _sw_subset(len(draws), cfg.sw_draws)
    sw_targets = [draw_grids[i] for i in sw_idx]
    slicer = GridSlicer(spec, cfg.eval_L, derive_seed(cfg.seed, STREAM_EVAL))
    truth_grid = None if truth is None else density_on_grid(truth, spec)
    vol = spec.cell_volume
    p = cfg.p

    cols = ["E[TV]"] + (["TV(truth)"] if truth is not None else [])
    cols += [f"E[SW{p:g}]"] + ([f"SW{p:g}(truth)"] if truth is not None else [])
    table = Table("density", cols, notes={
        "tv_grid": "unnormalized",
        "sw_grid": "renormalized",
        "sw_eval_L": cfg.eval_L,
        "sw_draws": len(sw_idx),
        "baseline_density": cfg.baseline_density,
    })
    grids = {}
    cache: dict[tuple, list] = {}
    for s in _ordered(summaries):
        if s.family == "measure":
            fams = [density_on_grid(prune(s.measure, cfg.prune_floor), spec)]
        else:
            fams = [density_on_grid(prune(G, cfg.prune_floor), spec) for G in s.measures]
            if cfg.baseline_density == "mean_density":
                fams = [DensityGrid(spec, np.mean([g.values for g in fams], axis=0))]
        grids[s.name] = DensityGrid(spec, np.mean([g.values for g in fams], axis=0))
        key = (s.family, s.index)
        if key not in cache:
            tv = [0.5 * vol * np.abs(draw_vals - g.values[None, :]).sum(axis=1).mean() for g in fams]
            sw = [slicer.sw_pp(g, sw_targets, p).mean() for g in fams]
            row = [float(np.mean(tv))]
            if truth_grid is not None:
                row.append(float(np.mean([0.5 * vol * np.abs(g.values - truth_grid.values).sum() for g in fams])))
            row.append(float(np.mean(sw)) ** (1.0 / p))
            if truth_grid is not None:
                row.append(float(np.mean([slicer.sw_pp(g, [truth_grid], p)[0] for g in fams])) ** (1.0 / p))
            cache[key] = row
        table.add(s.name, cache[key])
    return DensityEvaluation(table, spec, grids, truth_grid)


def mixing_table(summaries: Mapping[str, MethodSummary], draws: Sequence[MixingMeasure],
                 cfg: PipelineConfig, truth: MixingMeasure | None = None) -> Table:
    """Expected sliced distances from each measure-first summary to the draws.

    By default the directions are the ones used for summarization, so the
    column of each metric reports exactly the objective its summary minimizes.
    """
    measure_first = {s.name: s.measure for s in _ordered(summaries) if s.family == "measure"}
    L = cfg.L if cfg.mm_L is None else cfg.mm_L
    res = mixing_measure_loss_table(measure_first, draws, truth, cfg.kinds, L, cfg.p,
                                    derive_seed(cfg.seed, STREAM_DIRECTIONS), cfg.prune_floor)
    cols = []
    for k in cfg.kinds:
        cols.append(f"E[{METHOD_NAMES[k]}{cfg.p:g}]")
        if truth is not None:
            cols.append(f"{METHOD_NAMES[k]}{cfg.p:g}(truth)")
    table = Table("mixing_measure", cols, notes={"L": L})
    for name, row in res.items():
        vals = []
        for k in cfg.kinds:
            vals.append(row[k]["expected"])
            if truth is not None:
                vals.append(row[k]["truth"])
        table.add(name, vals)
    return table


@dataclass
class PipelineResult:
    draws: list
    summaries: dict
    tables: dict
    density: DensityEvaluation
    timings: dict


def evaluate_summaries(summaries: Mapping[str, MethodSummary], draws: Sequence[PosteriorDraw], data,
                       cfg: PipelineConfig, truth: MixingMeasure | None = None,
                       truth_labels=None) -> tuple[dict, DensityEvaluation]:
    if not summaries:
        raise mio.ValidationError("no summaries to evaluate")
    if len(draws) == 0:
        raise mio.ValidationError("no posterior draws to evaluate against")
    measures = [d.measure for d in draws]
    losses = [l for l in LOSSES if l in cfg.losses] or list(LOSSES)
    tables = {"clustering": clustering_table(summaries, [d.labels for d in draws], truth_labels, losses)}
    dens = density_table(summaries, measures, data, cfg, truth)
    tables["density"] = dens.table
    if any(s.family == "measure" for s in summaries.values()):
        tables["mixing_measure"] = mixing_table(summaries, measures, cfg, truth)
    return tables, dens


def run_pipeline(data, cfg: PipelineConfig, truth: MixingMeasure | None = None,
                 truth_labels=None, draws=None) -> PipelineResult:
    """Sample (unless ``draws`` is given), summarize and evaluate."""
    timings = {}
    t0 = time.perf_counter()
    if draws is None:
        draws = fit_chain(data, cfg)
    timings["sampler"] = time.perf_counter() - t0
    t1 = time.perf_counter()
    summaries = summarize_methods(draws, data, cfg)
    timings["summaries"] = time.perf_counter() - t1
    t2 = time.perf_counter()
    tables, dens = evaluate_summaries(summaries, draws, data, cfg, truth, truth_labels)
    timings["evaluation"] = time.perf_counter() - t2
    timings["total"] = time.perf_counter() - t0
    log.info("pipeline timings: %s", timings)
    return PipelineResult(list(draws), summaries, tables, dens, timings)


def grid_rows(grid: DensityGrid):
    """``(x, y, value)`` rows (or ``x1..xd, value``) for external plotting."""
    X = grid.spec.centers()
    return [list(x) + [v] for x, v in zip(X.tolist(), grid.values.tolist())]


def grid_header(dim: int) -> list:
    return ["x", "y", "value"] if dim == 2 else [f"x{j + 1}" for j in range(dim)] + ["value"]
