"""Planning costs and fold-success classification."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

import numpy as np

from .cloth import ClothState
from .observe import CANONICAL, OBS_C, OBS_H, OBS_W, render

CROP = 7
GoalKind = Literal["smooth", "fold1", "fold2"]
VertexMode = Literal["sum_sq", "sum_norm"]


@dataclass(frozen=True)
class Goal:
    obs: np.ndarray
    mesh: ClothState
    kind: GoalKind

    @classmethod
    def from_state(cls, state: ClothState, kind: GoalKind) -> Goal:
        return cls(render(state, CANONICAL), state.copy(), kind)


def _check_obs(a: np.ndarray) -> None:
    if a.shape != (OBS_H, OBS_W, OBS_C):
        raise ValueError(f"observation must be {(OBS_H, OBS_W, OBS_C)}, got {a.shape}")


def pixel_l2(a: np.ndarray, b: np.ndarray) -> float:
    """L2 norm of the difference over the inner 42x42 pixels, all channels."""
    if a.shape != b.shape:
        raise ValueError(f"observation shapes differ: {a.shape} vs {b.shape}")
    _check_obs(a)
    d = a[CROP:-CROP, CROP:-CROP].astype(np.float64) - b[CROP:-CROP, CROP:-CROP].astype(np.float64)
    return float(np.sqrt(np.sum(d * d)))


def _points(m) -> np.ndarray:
    return m.points if isinstance(m, ClothState) else np.asarray(m, dtype=np.float64)


def vertex_l2(mesh_a, mesh_b, mode: VertexMode = "sum_sq") -> float:
    """Distance between corresponding mesh points.

    ``sum_sq`` adds squared point distances, ``sum_norm`` adds the distances.
    Accepts ``ClothState`` objects or ``(N, 3)`` arrays.
    """
    pa, pb = _points(mesh_a), _points(mesh_b)
    if pa.shape != pb.shape:
        raise ValueError(f"mesh sizes differ: {pa.shape} vs {pb.shape}")
    d2 = np.sum((pa - pb) ** 2, axis=1)
    if mode == "sum_sq":
        return float(np.sum(d2))
    if mode == "sum_norm":
        return float(np.sum(np.sqrt(d2)))
    raise ValueError(f"unknown vertex_l2 mode {mode!r}")


@dataclass(frozen=True)
class Thresholds:
    """Success cut-offs; a cost strictly below either one counts."""

    pixel: float = np.inf
    vertex: float = np.inf


def classify_success(final, goal: Goal, thresholds: Thresholds) -> bool:
    """``final`` is an observation array or a ``ClothState``.

    Both sides must come from the canonical render config.
    """
    if isinstance(final, ClothState):
        if pixel_l2(render(final, CANONICAL), goal.obs) < thresholds.pixel:
            return True
        return vertex_l2(final, goal.mesh) < thresholds.vertex
    return pixel_l2(np.asarray(final), goal.obs) < thresholds.pixel


@dataclass(frozen=True)
class Calibration:
    threshold: float
    margin: float
    gap: float
    success_max: float
    failure_min: float

    @property
    def separable(self) -> bool:
        return self.gap > 0

    @property
    def relative_margin(self) -> float:
        """Distance from threshold to the nearer cluster, over the gap."""
        return self.margin / self.gap if self.gap > 0 else 0.0


def calibrate_threshold(success_costs, failure_costs) -> Calibration:
    """Midpoint between the worst success and the best failure.

    ``gap`` is the distance between the two cluster means and ``margin``
    the distance from the threshold to the closer cluster edge; a negative
    margin means the clusters overlap.
    """
    s = np.asarray(success_costs, dtype=np.float64)
    f = np.asarray(failure_costs, dtype=np.float64)
    if s.size == 0 or f.size == 0:
        raise ValueError("both clusters need at least one cost")
    hi, lo = float(s.max()), float(f.min())
    thr = 0.5 * (hi + lo)
    return Calibration(
        threshold=thr,
        margin=min(thr - hi, lo - thr),
        gap=float(f.mean() - s.mean()),
        success_max=hi,
        failure_min=lo,
    )
