"""Fabric smoothing and folding by model-predictive control over exact
cloth-simulator rollouts."""

from .action import ActionBounds, ExecConfig, PickPull, execute, sample_action
from .cloth import ClothParams, ClothState, init_flat, settle, step
from .cost import Goal, Thresholds, classify_success, pixel_l2, vertex_l2
from .observe import CANONICAL, RenderConfig, coverage, render
from .optimize import CemConfig, CmaEsConfig, cem_minimize, cmaes_minimize
from .plan import EpisodeResult, PlannerConfig, make_goal, plan_step, run_episode
from .policy import tier_start

__version__ = "0.1.0"

__all__ = [
    "ActionBounds",
    "CANONICAL",
    "CemConfig",
    "ClothParams",
    "ClothState",
    "CmaEsConfig",
    "EpisodeResult",
    "ExecConfig",
    "Goal",
    "PickPull",
    "PlannerConfig",
    "RenderConfig",
    "Thresholds",
    "cem_minimize",
    "classify_success",
    "cmaes_minimize",
    "coverage",
    "execute",
    "init_flat",
    "make_goal",
    "pixel_l2",
    "plan_step",
    "render",
    "run_episode",
    "sample_action",
    "settle",
    "step",
    "tier_start",
    "vertex_l2",
]
