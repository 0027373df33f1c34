"""Pick-and-pull actions: representation, sampling and execution."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels as K
from .cloth import ClothState


@dataclass(frozen=True)
class PickPull:
    """Grasp the top layer at (x, y), lift, translate by (dx, dy), release."""

    x: float
    y: float
    dx: float
    dy: float

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.dx, self.dy], dtype=float)

    @classmethod
    def from_array(cls, a) -> PickPull:
        x, y, dx, dy = (float(v) for v in a)
        return cls(x, y, dx, dy)


@dataclass(frozen=True)
class ActionBounds:
    max_pull: float = 0.4

    def __post_init__(self):
        if not 0 < self.max_pull <= 1:
            raise ValueError(f"max_pull must be in (0, 1], got {self.max_pull}")


OLD_BOUNDS = ActionBounds(0.4)
NEW_BOUNDS = ActionBounds(0.6)


@dataclass(frozen=True)
class ExecConfig:
    grasp_radius: float = 0.02
    top_layer_band: float = 0.01
    lift_height: float = 0.1
    drag_step: float = 0.04
    settle_tol: float = 2e-3
    settle_max_steps: int = 600

    def __post_init__(self):
        for name in ("grasp_radius", "top_layer_band", "lift_height", "drag_step", "settle_tol", "settle_max_steps"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")

    def as_array(self) -> np.ndarray:
        a = np.empty(K.N_EXEC)
        a[K.E_GRASP_R] = self.grasp_radius
        a[K.E_BAND] = self.top_layer_band
        a[K.E_LIFT] = self.lift_height
        a[K.E_DRAG] = self.drag_step
        a[K.E_SETTLE_TOL] = self.settle_tol
        a[K.E_SETTLE_MAX] = self.settle_max_steps
        return a


@dataclass
class ExecResult:
    state: ClothState
    grasped: bool
    pinned_count: int
    truncated: bool


class DegenerateFabricError(ValueError):
    """The fabric projection has no area to sample pick points from."""


def clip_to_plane(x: float, y: float, dx: float, dy: float) -> tuple[float, float]:
    """Shrink (dx, dy) so that (x + dx, y + dy) lands on the unit plane."""
    return K.clip_delta(float(x), float(y), float(dx), float(dy))


def clip_action(a: PickPull, bounds: ActionBounds | None = None) -> PickPull:
    x = min(max(a.x, 0.0), 1.0)
    y = min(max(a.y, 0.0), 1.0)
    dx, dy = a.dx, a.dy
    if bounds is not None:
        m = bounds.max_pull
        dx = min(max(dx, -m), m)
        dy = min(max(dy, -m), m)
    dx, dy = clip_to_plane(x, y, dx, dy)
    return PickPull(x, y, dx, dy)


def corner_projections(state: ClothState) -> np.ndarray:
    return state.points[state.corner_indices(), :2].copy()


def sample_action(
    bounds: ActionBounds, corner_bias: float, state: ClothState, rng: np.random.Generator
) -> PickPull:
    return sample_action_flagged(bounds, corner_bias, state, rng)[0]


def sample_action_flagged(
    bounds: ActionBounds, corner_bias: float, state: ClothState, rng: np.random.Generator
) -> tuple[PickPull, bool]:
    """Draw one data-collection action.

    With probability ``corner_bias`` the pick is the projection of a random
    fabric corner; otherwise it is uniform on the unit plane, redrawn until it
    falls inside the bounding box of the fabric's projection.  Deltas are
    uniform in ``[-max_pull, max_pull]`` and then truncated at the plane edge.

    Returns the action and whether the pick was a corner pick.
    """
    if not 0.0 <= corner_bias <= 1.0:
        raise ValueError("corner_bias must be in [0, 1]")
    xy = state.points[:, :2]
    lo = np.clip(xy.min(axis=0), 0.0, 1.0)
    hi = np.clip(xy.max(axis=0), 0.0, 1.0)
    if np.any(hi - lo <= 0):
        raise DegenerateFabricError("fabric bounding box on the plane has zero area")
    is_corner = bool(rng.random() < corner_bias)
    if is_corner:
        x, y = corner_projections(state)[rng.integers(4)]
        x, y = float(np.clip(x, 0, 1)), float(np.clip(y, 0, 1))
    else:
        while True:
            x, y = rng.random(2)
            if lo[0] <= x <= hi[0] and lo[1] <= y <= hi[1]:
                break
    dx, dy = rng.uniform(-bounds.max_pull, bounds.max_pull, size=2)
    dx, dy = clip_to_plane(x, y, dx, dy)
    return PickPull(float(x), float(y), float(dx), float(dy)), is_corner


def execute(
    state: ClothState, a: PickPull, cfg: ExecConfig | None = None, lift_scale: float = 1.0
) -> ExecResult:
    """Run a pick-and-pull on a copy of ``state`` and let the cloth settle.

    Grasps every point within ``grasp_radius`` of the pick (in projection)
    whose height is within ``top_layer_band`` of the highest such point.  An
    empty grasp returns the input mesh untouched.
    """
    cfg = cfg or ExecConfig()
    dx, dy = clip_to_plane(a.x, a.y, a.dx, a.dy)
    truncated = (dx, dy) != (a.dx, a.dy)
    out = state.copy()
    p = state.params
    m, _ = K.execute(
        out.points, out.prev_points, out.pinned,
        p.as_array(), float(a.x), float(a.y), dx, dy, cfg.as_array(), float(lift_scale),
    )
    return ExecResult(out, m > 0, int(m), truncated)


def grasp_candidates(state: ClothState, x: float, y: float, cfg: ExecConfig | None = None) -> np.ndarray:
    cfg = cfg or ExecConfig()
    return K.grasp_set(state.points, float(x), float(y), cfg.grasp_radius, cfg.top_layer_band)
