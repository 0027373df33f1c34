"""Top-down RGBD rendering, coverage and out-of-bounds checks.

The camera is orthographic and looks straight down at the unit plane.  An
observation is a ``(56, 56, 4)`` float32 array: RGB, then depth, all in
``[0, 255]``.  The unit plane fills the inner 42x42 pixels; row 0 is the far
side (large y).
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from functools import lru_cache
from pathlib import Path

import numpy as np

from . import _kernels as K
from .cloth import ClothState

OBS_W = 56
OBS_H = 56
OBS_C = 4
COVERAGE_GRID = 200
OOB_MARGIN = 0.25

# The camera frames the plane with a 7-pixel border, so the cost crop's
# inner 42x42 pixels see exactly the unit plane.
VIEW_BORDER = 7
VIEW_SPAN = OBS_W / (OBS_W - 2 * VIEW_BORDER)
VIEW_ORIGIN = -VIEW_BORDER / (OBS_W - 2 * VIEW_BORDER)

# depth channel: plane at the offset level, 255 at this height above it
DEPTH_FULL_HEIGHT = 0.2
DEPTH_CANONICAL_OFFSET = 40.0
UNDERSIDE_DELTA = 50.0

DEFAULT_FABRIC = (25.0, 89.0, 217.0)
DEFAULT_PLANE = (128.0, 128.0, 128.0)


def underside(rgb) -> tuple[float, float, float]:
    """The bottom face is the top colour darkened by a fixed delta."""
    return tuple(float(max(v - UNDERSIDE_DELTA, 0.0)) for v in rgb)


@dataclass(frozen=True)
class RenderConfig:
    fabric_rgb_top: tuple[float, float, float] = DEFAULT_FABRIC
    fabric_rgb_bottom: tuple[float, float, float] = underside(DEFAULT_FABRIC)
    plane_rgb: tuple[float, float, float] = DEFAULT_PLANE
    gamma: float = 1.0
    depth_offset: float = DEPTH_CANONICAL_OFFSET
    pixel_noise_amp: float = 0.0
    camera_jitter: tuple[float, float] = (0.0, 0.0)
    rng_seed: int = 0

    def __post_init__(self):
        if not self.gamma > 0:
            raise ValueError("gamma must be positive")
        if self.pixel_noise_amp < 0:
            raise ValueError("pixel_noise_amp must be non-negative")
        if not 0 <= self.rng_seed < 2**24:
            # stored as f32 in episode files, which is exact below 2**24
            raise ValueError("rng_seed must be in [0, 2**24)")

    def as_array(self) -> np.ndarray:
        """The 15 scalars in declaration order (episode-file render block)."""
        return np.array(
            [
                *self.fabric_rgb_top,
                *self.fabric_rgb_bottom,
                *self.plane_rgb,
                self.gamma,
                self.depth_offset,
                self.pixel_noise_amp,
                *self.camera_jitter,
                self.rng_seed,
            ],
            dtype=np.float64,
        )

    @classmethod
    def from_array(cls, a) -> RenderConfig:
        a = [float(v) for v in a]
        if len(a) != 15:
            raise ValueError(f"render block needs 15 values, got {len(a)}")
        return cls(
            fabric_rgb_top=tuple(a[0:3]),
            fabric_rgb_bottom=tuple(a[3:6]),
            plane_rgb=tuple(a[6:9]),
            gamma=a[9],
            depth_offset=a[10],
            pixel_noise_amp=a[11],
            camera_jitter=(a[12], a[13]),
            rng_seed=int(a[14]),
        )


CANONICAL = RenderConfig()


@dataclass(frozen=True)
class RenderRanges:
    """Sampling intervals for per-episode domain randomization.

    Colours are sampled per channel; the underside keeps the fixed delta.
    Camera jitter is Gaussian with ``jitter_std`` in plane units.
    """

    fabric_lo: tuple[float, float, float] = (0.0, 0.0, 128.0)
    fabric_hi: tuple[float, float, float] = (115.0, 179.0, 255.0)
    plane_lo: float = 102.0
    plane_hi: float = 153.0
    gamma: tuple[float, float] = (0.7, 1.3)
    depth_offset: tuple[float, float] = (40.0, 50.0)
    noise_amp: float = 15.0
    jitter_std: float = 0.04
    reseed: bool = True

    def __post_init__(self):
        if not (0.7 <= self.gamma[0] <= self.gamma[1] <= 1.3):
            raise ValueError("gamma range must lie in [0.7, 1.3]")
        if not 0 <= self.noise_amp <= 15:
            raise ValueError("noise amplitude must lie in [0, 15]")
        if any(lo > hi for lo, hi in zip(self.fabric_lo, self.fabric_hi)) or self.plane_lo > self.plane_hi:
            raise ValueError("colour ranges must have lo <= hi")
        if self.depth_offset[0] > self.depth_offset[1] or self.jitter_std < 0:
            raise ValueError("invalid depth or jitter range")

    @classmethod
    def fixed(cls, base: RenderConfig) -> RenderRanges:
        """Zero-width ranges that reproduce ``base`` exactly."""
        plane = base.plane_rgb[0]
        if not base.plane_rgb[0] == base.plane_rgb[1] == base.plane_rgb[2]:
            raise ValueError("fixed ranges need a grey plane")
        return cls(
            fabric_lo=base.fabric_rgb_top,
            fabric_hi=base.fabric_rgb_top,
            plane_lo=plane,
            plane_hi=plane,
            gamma=(base.gamma, base.gamma),
            depth_offset=(base.depth_offset, base.depth_offset),
            noise_amp=base.pixel_noise_amp,
            jitter_std=0.0,
            reseed=False,
        )


def _f32(v) -> float:
    # episode files store the config as f32; sampling on that grid keeps
    # the stored config identical to the one used for rendering
    return float(np.float32(v))


def randomize_render(base: RenderConfig, ranges: RenderRanges, rng: np.random.Generator) -> RenderConfig:
    """Draw one config, to be held fixed for a whole episode.

    A zero-width interval yields its single value; with zero jitter the
    base jitter is kept, and ``reseed=False`` keeps the base noise seed.
    """
    top = tuple(_f32(rng.uniform(lo, hi)) for lo, hi in zip(ranges.fabric_lo, ranges.fabric_hi))
    grey = _f32(rng.uniform(ranges.plane_lo, ranges.plane_hi))
    gamma = _f32(rng.uniform(*ranges.gamma))
    offset = _f32(rng.uniform(*ranges.depth_offset))
    if ranges.jitter_std > 0:
        jitter = tuple(_f32(v) for v in rng.normal(0.0, ranges.jitter_std, size=2))
    else:
        jitter = base.camera_jitter
    seed = int(rng.integers(2**24)) if ranges.reseed else base.rng_seed
    return replace(
        base,
        fabric_rgb_top=top,
        fabric_rgb_bottom=underside(top),
        plane_rgb=(grey, grey, grey),
        gamma=gamma,
        depth_offset=offset,
        pixel_noise_amp=ranges.noise_amp,
        camera_jitter=jitter,
        rng_seed=seed,
    )


@dataclass
class Raster:
    """Per-pixel face sign (+1 top, -1 bottom, 0 plane) and surface height."""

    face: np.ndarray
    height: np.ndarray = field(repr=False)


def rasterize(points: np.ndarray, tri: np.ndarray, width: int, height: int, origin=(0.0, 0.0),
              span: float = 1.0) -> Raster:
    """Rasterize over the square of side ``span`` whose lower-left corner is
    ``origin``."""
    zbuf = np.zeros((height, width))
    face = np.zeros((height, width), dtype=np.int8)
    K.rasterize(np.ascontiguousarray(points, dtype=np.float64), tri, width, height,
                float(origin[0]), float(origin[1]), float(span), zbuf, face)
    return Raster(face, zbuf)


@lru_cache(maxsize=8)
def mesh_triangles(n: int) -> np.ndarray:
    tri = K.triangles(n)
    tri.setflags(write=False)
    return tri


def _noise(cfg: RenderConfig) -> np.ndarray:
    rng = np.random.default_rng(cfg.rng_seed)
    return rng.uniform(-cfg.pixel_noise_amp, cfg.pixel_noise_amp, size=(OBS_H, OBS_W, 3))


def shade(raster: Raster, cfg: RenderConfig) -> np.ndarray:
    face = raster.face
    rgb = np.empty(face.shape + (3,))
    rgb[:] = cfg.plane_rgb
    rgb[face > 0] = cfg.fabric_rgb_top
    rgb[face < 0] = cfg.fabric_rgb_bottom
    depth = np.where(face != 0, cfg.depth_offset + raster.height * (255.0 - DEPTH_CANONICAL_OFFSET) / DEPTH_FULL_HEIGHT,
                     cfg.depth_offset)
    if cfg.gamma != 1.0:
        rgb = 255.0 * (np.clip(rgb, 0, 255) / 255.0) ** (1.0 / cfg.gamma)
    if cfg.pixel_noise_amp > 0:
        rgb = rgb + _noise(cfg)
    obs = np.concatenate([rgb, depth[..., None]], axis=-1)
    return np.clip(obs, 0.0, 255.0).astype(np.float32)


def render_points(points: np.ndarray, n: int, cfg: RenderConfig = CANONICAL) -> np.ndarray:
    tri = mesh_triangles(n)
    ox = VIEW_ORIGIN + cfg.camera_jitter[0]
    oy = VIEW_ORIGIN + cfg.camera_jitter[1]
    raster = rasterize(points, tri, OBS_W, OBS_H, (ox, oy), VIEW_SPAN)
    return shade(raster, cfg)


def render(state: ClothState, cfg: RenderConfig = CANONICAL) -> np.ndarray:
    """Render a 56x56x4 RGBD observation of ``state``."""
    return render_points(state.points, state.n, cfg)


def empty_observation(cfg: RenderConfig = CANONICAL) -> np.ndarray:
    """What the camera sees with no fabric on the plane."""
    raster = Raster(np.zeros((OBS_H, OBS_W), np.int8), np.zeros((OBS_H, OBS_W)))
    return shade(raster, cfg)


def coverage_points(points: np.ndarray, n: int, grid: int = COVERAGE_GRID) -> float:
    tri = mesh_triangles(n)
    count = K.coverage_count(np.ascontiguousarray(points, dtype=np.float64), tri, grid)
    return 100.0 * count / (grid * grid)


def coverage(state: ClothState, grid: int = COVERAGE_GRID) -> float:
    """Percent of grid cell centres on [0,1]^2 under the projected mesh."""
    return coverage_points(state.points, state.n, grid)


def out_of_bounds(state: ClothState, margin: float = OOB_MARGIN) -> bool:
    return bool(K.out_of_bounds(state.points, float(margin)))


def _to_u8(a: np.ndarray) -> np.ndarray:
    return np.clip(np.rint(a), 0, 255).astype(np.uint8)


def write_ppm(path, obs: np.ndarray) -> None:
    """RGB channels as binary P6."""
    rgb = _to_u8(obs[..., :3])
    h, w = rgb.shape[:2]
    Path(path).write_bytes(b"P6\n%d %d\n255\n" % (w, h) + rgb.tobytes())


def write_pgm(path, obs: np.ndarray) -> None:
    """Depth channel as binary P5."""
    d = _to_u8(obs[..., 3])
    h, w = d.shape
    Path(path).write_bytes(b"P5\n%d %d\n255\n" % (w, h) + d.tobytes())


def read_pnm(path) -> np.ndarray:
    """Read back a P5/P6 file written by ``write_ppm``/``write_pgm``."""
    data = Path(path).read_bytes()
    parts = data.split(b"\n", 3)
    if len(parts) < 4 or parts[0] not in (b"P5", b"P6") or parts[2] != b"255":
        raise ValueError(f"{path}: not an 8-bit binary PGM/PPM")
    w, h = (int(v) for v in parts[1].split())
    ch = 3 if parts[0] == b"P6" else 1
    px = np.frombuffer(parts[3], dtype=np.uint8)
    if px.size != w * h * ch:
        raise ValueError(f"{path}: expected {w * h * ch} pixel bytes, got {px.size}")
    return px.reshape((h, w, ch) if ch == 3 else (h, w))
