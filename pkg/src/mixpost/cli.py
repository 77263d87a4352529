"""Command-line front end.

Subcommands: ``simulate``, ``fit``, ``summarize``, ``evaluate`` and
``distances``. Settings come from built-in defaults, then an optional
JSON ``--config`` file, then command-line flags (flags win). Exit status
is 0 on success, 2 for invalid input and 1 for runtime failures.
"""
from __future__ import annotations

import argparse
import logging
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from . import io as mio
from ._backend import BACKEND
from .datasets import load_old_faithful
from .evaluation import simulate_four_component
from .experiments import (
    METHOD_NAMES, MethodSummary, PipelineConfig, evaluate_summaries, fit_chain, grid_header,
    grid_rows, summarize_methods,
)
from .linalg import NumericalError
from .measures import prune
from .ot_exact import mixture_wasserstein_sq
from .sliced import KINDS, sliced_distance

log = logging.getLogger("mixpost")

PRIOR_KEYS = ("prior", "mu0", "Psi", "lam", "nu", "alpha", "K")
# carried from the draws file so later stages share the master seed and chain settings
CHAIN_KEYS = PRIOR_KEYS + ("seed", "iters", "burn_in", "thin")

# flag -> (config key, type); defaults are suppressed so only given flags override
_FLAGS = {
    "simulate": [("--n", "n", int)],
    "fit": [("--prior", "prior", str), ("--K", "K", int), ("--alpha", "alpha", float),
            ("--iters", "iters", int), ("--burn-in", "burn_in", int), ("--thin", "thin", int)],
    "summarize": [("--L", "L", int), ("--p", "p", float), ("--prune-floor", "prune_floor", float),
                  ("--refresh-iters", "refresh_iters", int), ("--prior", "prior", str),
                  ("--K", "K", int), ("--alpha", "alpha", float)],
    "evaluate": [("--L", "L", int), ("--p", "p", float), ("--prune-floor", "prune_floor", float),
                 ("--eval-L", "eval_L", int), ("--resolution", "resolution", int),
                 ("--margin", "margin", float), ("--sw-draws", "sw_draws", int),
                 ("--mm-L", "mm_L", int), ("--baseline-density", "baseline_density", str)],
    "distances": [("--L", "L", int), ("--p", "p", float), ("--prune-floor", "prune_floor", float)],
}


def _add_common(sp):
    sp.add_argument("--config", type=Path, help="JSON file with configuration keys")
    sp.add_argument("--seed", dest="cfg_seed", type=int, default=argparse.SUPPRESS, help="master seed")
    sp.add_argument("--threads", dest="cfg_threads", type=int, default=argparse.SUPPRESS,
                    help="worker cap; results do not depend on it")
    sp.add_argument("-v", "--verbose", action="count", default=0)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mixpost", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"mixpost {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("simulate", help="draw data from the four-component mixture")
    sp.add_argument("--out", type=Path, required=True, help="output directory")

    sp = sub.add_parser("fit", help="run the blocked Gibbs sampler")
    sp.add_argument("--data", type=str, required=True,
                    help="data CSV, or 'old_faithful' for the bundled dataset")
    sp.add_argument("--out", type=Path, required=True)

    sp = sub.add_parser("summarize", help="point estimates from posterior draws")
    sp.add_argument("--draws", type=Path, required=True)
    sp.add_argument("--data", type=str, required=True)
    sp.add_argument("--out", type=Path, required=True)
    sp.add_argument("--kinds", nargs="*", dest="cfg_kinds", default=argparse.SUPPRESS,
                    help=f"sliced metrics among {KINDS}")
    sp.add_argument("--losses", nargs="*", dest="cfg_losses", default=argparse.SUPPRESS,
                    help="partition losses among binder, vi, omari")
    sp.add_argument("--fresh-directions", dest="cfg_shared", action="store_false",
                    default=argparse.SUPPRESS, help="draw new directions per pair")

    sp = sub.add_parser("evaluate", help="clustering, density and mixing-measure tables")
    sp.add_argument("--draws", type=Path, required=True)
    sp.add_argument("--data", type=str, required=True)
    sp.add_argument("--summaries", type=Path, required=True, help="directory written by summarize")
    sp.add_argument("--out", type=Path, required=True)
    sp.add_argument("--truth", type=Path, help="true mixing measure JSON")
    sp.add_argument("--truth-labels", type=Path, help="true labels CSV (1-based)")
    sp.add_argument("--no-grids", action="store_true", help="skip writing density grid CSVs")

    sp = sub.add_parser("distances", help="distances between two measure JSON files")
    sp.add_argument("a", type=Path)
    sp.add_argument("b", type=Path)
    sp.add_argument("--kinds", nargs="*", dest="cfg_kinds", default=argparse.SUPPRESS)
    sp.add_argument("--out", type=Path, help="write JSON here instead of stdout")

    for name, flags in _FLAGS.items():
        sp = sub.choices[name]
        for flag, key, typ in flags:
            sp.add_argument(flag, dest=f"cfg_{key}", type=typ, default=argparse.SUPPRESS)
        _add_common(sp)
    return parser


def resolve_config(args, base: dict | None = None) -> PipelineConfig:
    """Defaults < ``base`` < ``--config`` file < explicit flags."""
    merged = dict(base or {})
    if getattr(args, "config", None) is not None:
        obj = mio.read_json(args.config)
        if not isinstance(obj, dict):
            raise mio.ValidationError(f"{args.config}: config must be a JSON object")
        merged.update(obj)
    for k, v in vars(args).items():
        if k.startswith("cfg_"):
            merged[k[4:]] = v
    return PipelineConfig.from_dict(merged)


def _load_data(spec: str) -> np.ndarray:
    if spec == "old_faithful":
        return load_old_faithful()
    return mio.read_data_csv(spec)


def _meta(cfg: PipelineConfig, **extra) -> dict:
    return {**cfg.provenance(), **extra}


def cmd_simulate(args) -> int:
    cfg = resolve_config(args)
    data, truth, labels = simulate_four_component(cfg.n, cfg.seed)
    out = mio.ensure_dir(args.out)
    meta = _meta(cfg)
    mio.write_data_csv(out / "data.csv", data, ["y1", "y2"], meta)
    mio.write_measure(out / "truth.json", truth, meta)
    mio.write_labels_csv(out / "labels.csv", labels, meta)
    log.info("wrote %d observations to %s", cfg.n, out)
    return 0


def cmd_fit(args) -> int:
    cfg = resolve_config(args, {"prior": "old_faithful"} if args.data == "old_faithful" else None)
    data = _load_data(args.data)
    out = mio.ensure_dir(args.out)
    t0 = time.perf_counter()
    draws = fit_chain(data, cfg)
    wall = time.perf_counter() - t0
    meta = _meta(cfg)
    mio.write_draws_jsonl(out / "draws.jsonl", draws, {**meta, "config": cfg.to_dict()})
    mio.write_json(out / "run.json", {"config": cfg.to_dict(), "n_draws": len(draws),
                                      "wall_time_seconds": wall, "backend": BACKEND,
                                      "version": __version__}, meta)
    log.info("kept %d draws in %.1f s", len(draws), wall)
    return 0


def _chain_from_meta(meta) -> dict:
    if not meta or "config" not in meta:
        return {}
    return {k: meta["config"][k] for k in CHAIN_KEYS if k in meta["config"]}


def cmd_summarize(args) -> int:
    draws, meta = mio.read_draws_jsonl(args.draws)
    cfg = resolve_config(args, _chain_from_meta(meta))
    data = _load_data(args.data)
    if data.shape[0] != draws[0].labels.size:
        raise mio.ValidationError(
            f"data has {data.shape[0]} rows but draws carry {draws[0].labels.size} labels")
    summaries = summarize_methods(draws, data, cfg)
    out = mio.ensure_dir(args.out)
    m = _meta(cfg)
    for key, s in summaries.items():
        mio.write_json(out / f"summary_{key}.json", s.to_json(), {**m, "config": cfg.to_dict()})
        mio.write_labels_csv(out / f"labels_{key}.csv", s.labels, m)
        log.info("%s: index %d, expected loss %s", s.name, s.index, mio.fmt(s.expected_loss))
    return 0


def _read_summaries(directory: Path) -> dict:
    if not directory.is_dir():
        raise mio.ValidationError(f"{directory}: summaries directory not found")
    out = {}
    for path in sorted(directory.glob("summary_*.json")):
        s = MethodSummary.from_json(mio.read_json(path))
        out[s.method] = s
    if not out:
        raise mio.ValidationError(f"{directory}: no summary_*.json files")
    return out


def cmd_evaluate(args) -> int:
    draws, meta = mio.read_draws_jsonl(args.draws)
    summaries = _read_summaries(args.summaries)
    first = mio.read_json(next(iter(sorted(args.summaries.glob("summary_*.json")))))
    base = dict(first.get("meta", {}).get("config", {}))
    cfg = resolve_config(args, base)
    data = _load_data(args.data)
    truth = mio.read_measure(args.truth) if args.truth else None
    truth_labels = mio.read_labels_csv(args.truth_labels) if args.truth_labels else None
    if truth_labels is not None and truth_labels.size != data.shape[0]:
        raise mio.ValidationError("true labels and data differ in length")
    tables, dens = evaluate_summaries(summaries, draws, data, cfg, truth, truth_labels)
    out = mio.ensure_dir(args.out)
    m = _meta(cfg)
    for name, table in tables.items():
        table.to_csv(out / f"{name}.csv", m)
        print(f"[{name}]\n{table.to_text()}\n")
    if not args.no_grids:
        header = grid_header(dens.spec.dim)
        for name, grid in dens.grids.items():
            mio.write_csv(out / f"grid_{name}.csv", header, grid_rows(grid), m)
        if dens.truth_grid is not None:
            mio.write_csv(out / "grid_truth.csv", header, grid_rows(dens.truth_grid), m)
    return 0


def cmd_distances(args) -> int:
    cfg = resolve_config(args)
    G1 = mio.read_measure(args.a)
    G2 = mio.read_measure(args.b)
    if G1.dim != G2.dim:
        raise mio.ValidationError(f"dimension mismatch: {G1.dim} vs {G2.dim}")
    P1, P2 = prune(G1, cfg.prune_floor), prune(G2, cfg.prune_floor)
    result = {}
    for kind in cfg.kinds:
        est = sliced_distance(kind, cfg.p, cfg.L, cfg.seed, P1, P2)
        result[kind] = {"name": METHOD_NAMES[kind], "value_pth_power": est.value,
                        "distance": est.distance}
    result["mixture_wasserstein"] = {"squared": mixture_wasserstein_sq(G1, G2),
                                     "distance": float(np.sqrt(mixture_wasserstein_sq(G1, G2)))}
    text = mio.dumps({"meta": _meta(cfg), "L": cfg.L, "p": cfg.p, "distances": result}, indent=2)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    else:
        print(text)
    return 0


COMMANDS = {
    "simulate": cmd_simulate,
    "fit": cmd_fit,
    "summarize": cmd_summarize,
    "evaluate": cmd_evaluate,
    "distances": cmd_distances,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (np.linalg.LinAlgError, NumericalError, FloatingPointError) as exc:
        print(f"mixpost: numerical failure: {exc}", file=sys.stderr)
        return 1
    except (ValueError, FileNotFoundError) as exc:
        print(f"mixpost: error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"mixpost: I/O error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001 - last-resort runtime failure
        log.debug("unhandled", exc_info=True)
        print(f"mixpost: runtime error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
