"""Mass-spring cloth: parameters, state, and time integration."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from functools import lru_cache

import numpy as np

from . import _kernels as K


@dataclass(frozen=True)
class ClothParams:
    """Physical constants of the cloth, in plane-side units (plane side = 1).

    The numbers are nondimensional calibration values; the invariant test
    suite is what pins down whether they are acceptable.

    ``strain_limit`` caps every spring at ``(1 + strain_limit)`` times its rest
    length after each Verlet update (a deformation constraint in the style of
    Provot), so dragged cloth follows the gripper without the stiffness that
    would make explicit integration unstable at ``dt``.  ``contact_retain``
    scales the Verlet velocity of points touching another layer.
    """

    n: int = 25
    side: float = 1.0
    mass: float = 1.0
    k_struct: float = 500.0
    k_shear: float = 500.0
    damping: float = 0.95
    dt: float = 0.02
    gravity: float = 2.0
    self_collision_radius: float = 0.035
    self_collision_k: float = 1000.0
    friction_retain: float = 0.7
    strain_limit: float = 0.1
    strain_iters: int = 4
    contact_retain: float = 0.9
    compress_scale: float = 0.05
    static_friction: float = 0.0

    def __post_init__(self):
        if self.n < 2:
            raise ValueError(f"n must be >= 2, got {self.n}")
        if not self.side > 0:
            raise ValueError(f"side must be positive, got {self.side}")
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if not 0 < self.damping <= 1:
            raise ValueError(f"damping must be in (0, 1], got {self.damping}")
        if not 0 < self.friction_retain < 1:
            raise ValueError("friction_retain must be in (0, 1)")
        if self.self_collision_radius >= self.rest_length:
            raise ValueError("self_collision_radius must be below the structural rest length")

    @property
    def rest_length(self) -> float:
        return self.side / (self.n - 1)

    def as_array(self) -> np.ndarray:
        a = np.empty(K.N_PHYS)
        a[K.P_N] = self.n
        a[K.P_MASS] = self.mass
        a[K.P_K_STRUCT] = self.k_struct
        a[K.P_K_SHEAR] = self.k_shear
        a[K.P_DAMPING] = self.damping
        a[K.P_DT] = self.dt
        a[K.P_GRAVITY] = self.gravity
        a[K.P_SC_RADIUS] = self.self_collision_radius
        a[K.P_SC_K] = self.self_collision_k
        a[K.P_FRICTION] = self.friction_retain
        a[K.P_STRAIN] = self.strain_limit
        a[K.P_STRAIN_ITERS] = self.strain_iters
        a[K.P_CONTACT] = self.contact_retain
        a[K.P_COMPRESS] = self.compress_scale
        a[K.P_STATIC] = self.static_friction
        a[K.P_SIDE] = self.side
        return a


@dataclass(frozen=True)
class Topology:
    """Spring list of an n x n grid: structural (kind 0) then shear (kind 1)."""

    si: np.ndarray
    sj: np.ndarray
    rest: np.ndarray
    kind: np.ndarray
    tri: np.ndarray


@lru_cache(maxsize=8)
def topology(n: int, side: float) -> Topology:
    h = side / (n - 1)
    si, sj, rest, kind = [], [], [], []
    idx = np.arange(n * n).reshape(n, n)
    pairs = [
        (idx[:, :-1], idx[:, 1:], h, 0),
        (idx[:-1, :], idx[1:, :], h, 0),
        (idx[:-1, :-1], idx[1:, 1:], h * np.sqrt(2), 1),
        (idx[:-1, 1:], idx[1:, :-1], h * np.sqrt(2), 1),
    ]
    for a, b, length, k in pairs:
        si.append(a.ravel())
        sj.append(b.ravel())
        rest.append(np.full(a.size, length))
        kind.append(np.full(a.size, k, dtype=np.int8))
    top = Topology(
        si=np.concatenate(si).astype(np.int64),
        sj=np.concatenate(sj).astype(np.int64),
        rest=np.concatenate(rest),
        kind=np.concatenate(kind),
        tri=K.triangles(n),
    )
    for arr in (top.si, top.sj, top.rest, top.tri):
        arr.setflags(write=False)
    return top


@dataclass
class ClothState:
    """Positions, Verlet history and pin flags of an n x n point grid.

    Point ``r * n + c`` sits at ``(c, r) * rest_length`` in the flat layout, so
    vertex 0 is the corner at the origin.  Treat instances as values: the
    module-level operations return new states and never mutate their input.
    """

    points: np.ndarray
    prev_points: np.ndarray
    pinned: np.ndarray
    params: ClothParams = field(default_factory=ClothParams)

    def copy(self) -> ClothState:
        return ClothState(self.points.copy(), self.prev_points.copy(), self.pinned.copy(), self.params)

    @property
    def n(self) -> int:
        return self.params.n

    def corner_indices(self) -> np.ndarray:
        n = self.params.n
        return np.array([0, n - 1, n * (n - 1), n * n - 1])

    def flat_targets(self) -> np.ndarray:
        """Where every point would be if the cloth lay smooth on the plane."""
        return flat_grid(self.params)


def flat_grid(params: ClothParams) -> np.ndarray:
    n = params.n
    h = params.rest_length
    r, c = np.divmod(np.arange(n * n), n)
    return np.column_stack([c * h, r * h, np.zeros(n * n)])


def init_flat(params: ClothParams | None = None) -> ClothState:
    params = params or ClothParams()
    pts = flat_grid(params)
    return ClothState(pts, pts.copy(), np.zeros(params.n**2, dtype=bool), params)


def _check_params(state: ClothState, params: ClothParams | None) -> ClothParams:
    params = params or state.params
    if state.points.shape != (params.n**2, 3):
        raise ValueError("state does not match params")
    return params


def step(state: ClothState, params: ClothParams | None = None) -> ClothState:
    params = _check_params(state, params)
    out = replace(state.copy(), params=params)
    K.step(out.points, out.prev_points, out.pinned, params.as_array())
    return out


def step_with_displacement(state: ClothState, params: ClothParams | None = None) -> tuple[ClothState, float]:
    params = _check_params(state, params)
    out = replace(state.copy(), params=params)
    disp = K.step(out.points, out.prev_points, out.pinned, params.as_array())
    return out, disp


def settle(
    state: ClothState, params: ClothParams | None = None, tol: float = 5e-4, max_steps: int = 600
) -> tuple[ClothState, int]:
    """Step until the largest single-step point displacement drops below
    ``tol``.  Hitting ``max_steps`` is not an error; compare the returned
    count against it."""
    if not tol > 0:
        raise ValueError("tol must be positive")
    params = _check_params(state, params)
    out = replace(state.copy(), params=params)
    taken = K.settle(out.points, out.prev_points, out.pinned, params.as_array(), tol, max_steps)
    return out, int(taken)


def _indices(state: ClothState, indices) -> np.ndarray:
    idx = np.atleast_1d(np.asarray(indices, dtype=np.int64))
    if idx.size and (idx.min() < 0 or idx.max() >= state.points.shape[0]):
        raise IndexError(f"point index out of range [0, {state.points.shape[0]})")
    return idx


def pin(state: ClothState, indices) -> ClothState:
    idx = _indices(state, indices)
    out = state.copy()
    out.pinned[idx] = True
    return out


def unpin(state: ClothState, indices) -> ClothState:
    idx = _indices(state, indices)
    out = state.copy()
    out.pinned[idx] = False
    return out


def kinetic_proxy(state: ClothState) -> float:
    return float(np.sum((state.points - state.prev_points) ** 2))
