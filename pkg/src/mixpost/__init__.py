"""Posterior summaries of Gaussian mixing measures under sliced optimal transport losses."""

__version__ = "0.1.0"

from ._backend import BACKEND
from .measures import GaussianAtom, MixingMeasure, mixture_density, prune
from .ot_exact import exact_discrete_wasserstein, gaussian_w2_sq, mixture_wasserstein_sq, wasserstein_1d
from .sliced import KINDS, sample_directions, sliced_distance, distance_between_samples
from .partitions import binder_loss, vi_loss, omari_loss, adjusted_rand_index
from .gibbs import DPHyper, NiwParams, run_chain
from .summarize import build_distance_matrix, greedy_select, map_partition, summarize_posterior
from .evaluation import simulate_four_component
from .datasets import load_old_faithful

__all__ = [
    "BACKEND",
    "GaussianAtom",
    "MixingMeasure",
    "mixture_density",
    "prune",
    "exact_discrete_wasserstein",
    "gaussian_w2_sq",
    "mixture_wasserstein_sq",
    "wasserstein_1d",
    "KINDS",
    "sample_directions",
    "sliced_distance",
    "distance_between_samples",
    "binder_loss",
    "vi_loss",
    "omari_loss",
    "adjusted_rand_index",
    "DPHyper",
    "NiwParams",
    "run_chain",
    "build_distance_matrix",
    "greedy_select",
    "map_partition",
    "summarize_posterior",
    "simulate_four_component",
    "load_old_faithful",
]
