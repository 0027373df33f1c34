"""Episode files, dataset generation and cost-pair export.

Episode file layout (all little-endian)::

    b"FVSF"  u32 version  u32 n  u32 T  u32 obs_w  u32 obs_h  u32 obs_c
    f32 meshes        (T+1, n*n, 3)
    f32 observations  (T+1, obs_h, obs_w, obs_c)
    f32 actions       (T, 4)
    f32 coverage      (T+1,)
    f32 render block  (15,)   RenderConfig fields in declaration order
    u64 seed
"""

from __future__ import annotations

import json
import struct
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .action import ActionBounds, ExecConfig, execute, sample_action_flagged
from .cloth import ClothParams
from .observe import CANONICAL, OBS_C, OBS_H, OBS_W, RenderConfig, RenderRanges, coverage, randomize_render, render
from .policy import TierParams, tier_start

MAGIC = b"FVSF"
VERSION = 1
HEADER = struct.Struct("<4s6I")
RENDER_FIELDS = 15
SEED = struct.Struct("<Q")
F32 = np.dtype("<f4")


class EpisodeFormatError(ValueError):
    """A malformed episode file; the message names the failing field."""


@dataclass
class EpisodeRecord:
    meshes: np.ndarray  # (T+1, n*n, 3)
    observations: np.ndarray  # (T+1, H, W, C)
    actions: np.ndarray  # (T, 4)
    coverage: np.ndarray  # (T+1,)
    seed: int
    render: RenderConfig = CANONICAL

    def __post_init__(self):
        t1 = len(self.meshes)
        if len(self.observations) != t1 or len(self.coverage) != t1 or len(self.actions) != t1 - 1:
            raise ValueError("meshes, observations and coverage need T+1 entries and actions T")
        if self.meshes.ndim != 3 or self.meshes.shape[2] != 3:
            raise ValueError(f"meshes must be (T+1, N, 3), got {self.meshes.shape}")
        if np.any(self.coverage < 0) or np.any(self.coverage > 100):
            raise ValueError("coverage must lie in [0, 100]")

    @property
    def length(self) -> int:
        return len(self.actions)

    @property
    def n(self) -> int:
        return int(round(np.sqrt(self.meshes.shape[1])))


def episode_nbytes(n: int, t: int, obs_shape=(OBS_H, OBS_W, OBS_C)) -> int:
    h, w, c = obs_shape
    return HEADER.size + (t + 1) * (n * n * 12 + h * w * c * 4) + t * 16 + (t + 1) * 4 + RENDER_FIELDS * 4 + SEED.size


def encode_episode(rec: EpisodeRecord) -> bytes:
    n = rec.n
    if n * n != rec.meshes.shape[1]:
        raise ValueError("mesh point count is not a square")
    h, w, c = rec.observations.shape[1:]
    parts = [
        HEADER.pack(MAGIC, VERSION, n, rec.length, w, h, c),
        np.ascontiguousarray(rec.meshes, dtype=F32).tobytes(),
        np.ascontiguousarray(rec.observations, dtype=F32).tobytes(),
        np.ascontiguousarray(rec.actions, dtype=F32).reshape(-1, 4).tobytes(),
        np.ascontiguousarray(rec.coverage, dtype=F32).tobytes(),
        rec.render.as_array().astype(F32).tobytes(),
        SEED.pack(rec.seed),
    ]
    return b"".join(parts)


def write_episode(rec: EpisodeRecord, path) -> None:
    Path(path).write_bytes(encode_episode(rec))


def decode_episode(data: bytes) -> EpisodeRecord:
    if len(data) < HEADER.size:
        raise EpisodeFormatError(f"header: need {HEADER.size} bytes, got {len(data)}")
    magic, version, n, t, w, h, c = HEADER.unpack_from(data)
    if magic != MAGIC:
        raise EpisodeFormatError(f"magic: expected {MAGIC!r}, got {magic!r}")
    if version != VERSION:
        raise EpisodeFormatError(f"version: expected {VERSION}, got {version}")
    if n < 2:
        raise EpisodeFormatError(f"n: expected >= 2, got {n}")
    blocks = [
        ("meshes", (t + 1, n * n, 3)),
        ("observations", (t + 1, h, w, c)),
        ("actions", (t, 4)),
        ("coverage", (t + 1,)),
        ("render", (RENDER_FIELDS,)),
    ]
    off = HEADER.size
    arrays = {}
    for name, shape in blocks:
        size = int(np.prod(shape)) * 4
        if off + size > len(data):
            raise EpisodeFormatError(f"{name}: need {size} bytes at offset {off}, file has {len(data) - off}")
        arrays[name] = np.frombuffer(data, dtype=F32, count=size // 4, offset=off).reshape(shape).copy()
        off += size
    if off + SEED.size != len(data):
        raise EpisodeFormatError(f"seed: expected {SEED.size} trailing bytes, got {len(data) - off}")
    (seed,) = SEED.unpack_from(data, off)
    try:
        rcfg = RenderConfig.from_array(arrays["render"])
        return EpisodeRecord(arrays["meshes"], arrays["observations"], arrays["actions"], arrays["coverage"], seed, rcfg)
    except ValueError as e:
        raise EpisodeFormatError(f"render/coverage: {e}") from e


def read_episode(path) -> EpisodeRecord:
    return decode_episode(Path(path).read_bytes())


# ---------------------------------------------------------------------------
# dataset generation


@dataclass(frozen=True)
class DatasetConfig:
    """Random-policy data collection.  ``old()`` and ``new()`` give the two
    published recipes."""

    episodes: int = 100
    episode_len: int = 15
    max_pull: float = 0.4
    corner_bias: float = 0.0
    tiers: tuple[int, ...] = (0, 1, 2, 3)
    randomize: bool = True
    seed: int = 0
    cloth: ClothParams = field(default_factory=ClothParams)
    exec_cfg: ExecConfig = field(default_factory=ExecConfig)
    ranges: RenderRanges = field(default_factory=RenderRanges)

    def __post_init__(self):
        if self.episode_len < 1:
            raise ValueError("episode_len must be >= 1")
        if self.episodes < 0:
            raise ValueError("episodes must be >= 0")
        if not self.tiers or any(t not in (0, 1, 2, 3) for t in self.tiers):
            raise ValueError("tiers must be a non-empty subset of 0..3")

    @classmethod
    def old(cls, **kw) -> DatasetConfig:
        return cls(**{"episode_len": 15, "max_pull": 0.4, "corner_bias": 0.0, **kw})

    @classmethod
    def new(cls, **kw) -> DatasetConfig:
        return cls(**{"episode_len": 10, "max_pull": 0.6, "corner_bias": 0.3, **kw})


def episode_seed(master: int, index: int) -> int:
    """64-bit seed of one episode, a function of (master seed, index) only."""
    state = np.random.SeedSequence(master, spawn_key=(index,)).generate_state(2, np.uint32)
    return int(state[0]) | (int(state[1]) << 32)


@dataclass
class GeneratedEpisode:
    record: EpisodeRecord
    tier: int
    corner_picks: int


def generate_episode(cfg: DatasetConfig, seed: int) -> GeneratedEpisode:
    """One random-policy episode; fully determined by ``cfg`` and ``seed``."""
    rng = np.random.default_rng(seed)
    tier = int(cfg.tiers[rng.integers(len(cfg.tiers))])
    state = tier_start(tier, rng, TierParams(cloth=cfg.cloth, exec_cfg=cfg.exec_cfg))
    rcfg = randomize_render(CANONICAL, cfg.ranges, rng) if cfg.randomize else CANONICAL
    bounds = ActionBounds(cfg.max_pull)
    meshes = [state.points.copy()]
    obs = [render(state, rcfg)]
    cov = [coverage(state)]
    actions = []
    corners = 0
    for _ in range(cfg.episode_len):
        a, is_corner = sample_action_flagged(bounds, cfg.corner_bias, state, rng)
        corners += is_corner
        state = execute(state, a, cfg.exec_cfg).state
        actions.append(a.as_array())
        meshes.append(state.points.copy())
        obs.append(render(state, rcfg))
        cov.append(coverage(state))
    rec = EpisodeRecord(np.array(meshes), np.array(obs), np.array(actions), np.array(cov), seed, rcfg)
    return GeneratedEpisode(rec, tier, corners)


def _generate_one(args) -> dict:
    cfg, index, out_dir = args
    seed = episode_seed(cfg.seed, index)
    ep = generate_episode(cfg, seed)
    name = f"episode_{index:06d}.fvsf"
    write_episode(ep.record, Path(out_dir) / name)
    return {
        "file": name,
        "seed": seed,
        "tier": ep.tier,
        "corner_picks": ep.corner_picks,
        "actions": ep.record.length,
    }


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    return obj


def generate_dataset(cfg: DatasetConfig, out_dir, jobs: int = 1) -> dict:
    """Write ``cfg.episodes`` episode files and ``manifest.json``.

    Output bytes depend only on ``cfg``; ``jobs`` only changes speed.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    work = [(cfg, i, str(out)) for i in range(cfg.episodes)]
    if jobs > 1 and len(work) > 1:
        with ProcessPoolExecutor(jobs) as pool:
            entries = list(pool.map(_generate_one, work, chunksize=max(1, len(work) // (4 * jobs))))
    else:
        entries = [_generate_one(w) for w in work]
    manifest = {
        "format": MAGIC.decode(),
        "version": VERSION,
        "seed": cfg.seed,
        "config": _jsonable(asdict(cfg)),
        "files": entries,
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return manifest


def load_manifest(out_dir) -> dict:
    return json.loads((Path(out_dir) / "manifest.json").read_text())


# ---------------------------------------------------------------------------
# cost pairs

# 1-indexed observation pairs with varied temporal gaps
COST_PAIRS = ((1, 2), (1, 3), (1, 5), (1, 9), (6, 8), (6, 10), (6, 7), (3, 4), (3, 7), (3, 9))
# every other pair is stored in reverse order
FLIPPED = (False, True) * 5


@dataclass(frozen=True)
class CostPair:
    first: int  # 0-indexed observation indices, in stored order
    second: int
    label: float


def pair_label(rec: EpisodeRecord, i: int, j: int) -> float:
    """Sum of squared point distances between the meshes at 1-indexed i, j."""
    d = rec.meshes[i - 1].astype(np.float64) - rec.meshes[j - 1].astype(np.float64)
    return float(np.sum(d * d))


def sample_cost_pairs(rec: EpisodeRecord) -> list[CostPair]:
    """The ten fixed pairs of an episode, labelled with the mesh distance."""
    need = max(max(p) for p in COST_PAIRS)
    if len(rec.observations) < need:
        raise ValueError(f"episode has {len(rec.observations)} observations, cost pairs need {need}")
    out = []
    for (i, j), flip in zip(COST_PAIRS, FLIPPED):
        a, b = (j, i) if flip else (i, j)
        out.append(CostPair(a - 1, b - 1, pair_label(rec, a, b)))
    return out


PAIR_MAGIC = b"FVCP"
PAIR_HEADER = struct.Struct("<4s5I")


def export_cost_pairs(records, path) -> float:
    """Write (obs_a, obs_b, label) records with labels divided by their max.

    Returns the normalizer.
    """
    pairs = [(rec, p) for rec in records for p in sample_cost_pairs(rec)]
    if not pairs:
        raise ValueError("no episodes to export")
    scale = max(p.label for _, p in pairs)
    scale = scale if scale > 0 else 1.0
    h, w, c = pairs[0][0].observations.shape[1:]
    with open(path, "wb") as f:
        f.write(PAIR_HEADER.pack(PAIR_MAGIC, VERSION, len(pairs), h, w, c))
        for rec, p in pairs:
            f.write(rec.observations[p.first].astype(F32).tobytes())
            f.write(rec.observations[p.second].astype(F32).tobytes())
            f.write(np.array([p.label / scale], dtype=F32).tobytes())
    return scale


def read_cost_pairs(path) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    data = Path(path).read_bytes()
    if len(data) < PAIR_HEADER.size:
        raise EpisodeFormatError("header: file too short")
    magic, version, count, h, w, c = PAIR_HEADER.unpack_from(data)
    if magic != PAIR_MAGIC:
        raise EpisodeFormatError(f"magic: expected {PAIR_MAGIC!r}, got {magic!r}")
    if version != VERSION:
        raise EpisodeFormatError(f"version: expected {VERSION}, got {version}")
    rec = np.dtype([("a", F32, (h, w, c)), ("b", F32, (h, w, c)), ("label", F32)])
    if len(data) - PAIR_HEADER.size != count * rec.itemsize:
        raise EpisodeFormatError(f"records: expected {count} records of {rec.itemsize} bytes")
    arr = np.frombuffer(data, dtype=rec, offset=PAIR_HEADER.size)
    return arr["a"].copy(), arr["b"].copy(), arr["label"].copy()
