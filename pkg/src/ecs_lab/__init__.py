"""Exact verification lab for the Roter family of rank-one ECS metrics."""

from __future__ import annotations

from .config import RunConfig, load_config
from .curvature import LocalGeometry, classify_ecs, olszak_distribution
from .homogeneity import build_homogeneous_witness, homogeneity_criterion
from .linalg import conjugacy_solve
from .model import ChartPoint, ModelData, make_model, make_point
from .runner import Report, random_model_sweep, run_suite
from .scalar import Jet, eval_jet, parse_f

__all__ = [
    "ChartPoint",
    "Jet",
    "LocalGeometry",
    "ModelData",
    "Report",
    "RunConfig",
    "build_homogeneous_witness",
    "classify_ecs",
    "conjugacy_solve",
    "eval_jet",
    "homogeneity_criterion",
    "load_config",
    "make_model",
    "make_point",
    "olszak_distribution",
    "parse_f",
    "random_model_sweep",
    "run_suite",
]

__version__ = "0.1.0"
