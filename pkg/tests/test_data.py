import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fabric_mpc.data import (
    COST_PAIRS,
    DatasetConfig,
    EpisodeFormatError,
    EpisodeRecord,
    decode_episode,
    encode_episode,
    episode_nbytes,
    episode_seed,
    export_cost_pairs,
    generate_dataset,
    generate_episode,
    load_manifest,
    pair_label,
    read_cost_pairs,
    read_episode,
    sample_cost_pairs,
    write_episode,
)
from fabric_mpc.observe import RenderConfig

from .helpers import vertex_l2_loop


def random_record(seed: int, t: int = 3, n: int = 5) -> EpisodeRecord:
    rng = np.random.default_rng(seed)
    f32 = lambda a: a.astype(np.float32)
    return EpisodeRecord(
        f32(rng.random((t + 1, n * n, 3))),
        f32(rng.uniform(0, 255, (t + 1, 56, 56, 4))),
        f32(rng.uniform(-0.4, 1, (t, 4))),
        f32(rng.uniform(0, 100, t + 1)),
        int(rng.integers(2**63)),
        RenderConfig(gamma=0.875, pixel_noise_amp=3.0, rng_seed=int(rng.integers(2**24))),
    )


def same(a: EpisodeRecord, b: EpisodeRecord) -> bool:
    return (all(np.array_equal(getattr(a, k), getattr(b, k)) for k in ("meshes", "observations", "actions", "coverage"))
            and a.seed == b.seed and a.render == b.render)


@given(seed=st.integers(0, 2**32 - 1), t=st.integers(0, 4))
def test_round_trip(seed, t):
    rec = random_record(seed, t)
    data = encode_episode(rec)
    assert len(data) == episode_nbytes(5, t)
    assert same(decode_episode(data), rec)
    assert encode_episode(decode_episode(data)) == data


def test_file_round_trip(tmp_path):
    rec = random_record(1)
    write_episode(rec, tmp_path / "e.fvsf")
    assert same(read_episode(tmp_path / "e.fvsf"), rec)


def test_size_formula():
    # header + meshes + observations + actions + coverage + render block + seed
    t, n = 15, 25
    expected = 28 + (t + 1) * (n * n * 12 + 56 * 56 * 4 * 4) + t * 16 + (t + 1) * 4 + 15 * 4 + 8
    assert episode_nbytes(n, t) == expected == 923216


@pytest.mark.parametrize("cut", [0, 10, 27, 28, 500, -9, -1])
def test_truncated_file_is_a_parse_error(cut):
    data = encode_episode(random_record(2))
    with pytest.raises(EpisodeFormatError):
        decode_episode(data[:cut])


def test_error_names_field():
    data = bytearray(encode_episode(random_record(3)))
    bad = bytes(b"XXXX" + data[4:])
    with pytest.raises(EpisodeFormatError, match="magic"):
        decode_episode(bad)
    data[4] = 9
    with pytest.raises(EpisodeFormatError, match="version"):
        decode_episode(bytes(data))
    with pytest.raises(EpisodeFormatError, match="seed"):
        decode_episode(encode_episode(random_record(3)) + b"\0")


def test_record_validation():
    rec = random_record(4)
    with pytest.raises(ValueError):
        EpisodeRecord(rec.meshes, rec.observations, rec.actions[:-1], rec.coverage, 0)
    with pytest.raises(ValueError):
        EpisodeRecord(rec.meshes, rec.observations, rec.actions, rec.coverage + 200, 0)


def test_episode_seed_is_stable():
    assert episode_seed(0, 5) == episode_seed(0, 5)
    assert episode_seed(0, 5) != episode_seed(0, 6) != episode_seed(1, 5)
    assert 0 <= episode_seed(123, 0) < 2**64


def test_recipes():
    old, new = DatasetConfig.old(), DatasetConfig.new()
    assert (old.episode_len, old.max_pull, old.corner_bias) == (15, 0.4, 0.0)
    assert (new.episode_len, new.max_pull, new.corner_bias) == (10, 0.6, 0.3)
    with pytest.raises(ValueError):
        DatasetConfig(episode_len=0)


def test_generate_two_episodes(tmp_path):
    cfg = DatasetConfig.new(episodes=2, episode_len=3, seed=5)
    manifest = generate_dataset(cfg, tmp_path)
    files = sorted(p.name for p in tmp_path.iterdir())
    assert files == ["episode_000000.fvsf", "episode_000001.fvsf", "manifest.json"]
    assert load_manifest(tmp_path) == manifest
    rec = read_episode(tmp_path / files[0])
    assert rec.length == 3 and rec.seed == manifest["files"][0]["seed"]
    assert np.all(np.abs(rec.actions[:, 2:]) <= 0.6 + 1e-6)
    end = rec.actions[:, :2] + rec.actions[:, 2:]
    assert np.all((end >= -1e-6) & (end <= 1 + 1e-6))


def test_generation_is_deterministic_and_job_independent(tmp_path):
    cfg = DatasetConfig.old(episodes=3, episode_len=2, seed=11)
    generate_dataset(cfg, tmp_path / "a")
    generate_dataset(cfg, tmp_path / "b", jobs=2)
    for name in ("episode_000000.fvsf", "episode_000001.fvsf", "episode_000002.fvsf", "manifest.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_randomized_render_survives_the_file_format():
    ep = generate_episode(DatasetConfig.new(episode_len=1), seed=4)
    assert decode_episode(encode_episode(ep.record)).render == ep.record.render


def test_generate_episode_tiers_and_render():
    ep = generate_episode(DatasetConfig.new(episode_len=1, tiers=(2,), randomize=False), seed=3)
    assert ep.tier == 2
    assert ep.record.render == RenderConfig()


def test_cost_pairs():
    rec = random_record(5, t=10)
    pairs = sample_cost_pairs(rec)
    assert len(pairs) == 10
    stored = {(p.first + 1, p.second + 1) for p in pairs}
    flipped = sum((b, a) in COST_PAIRS for a, b in stored)
    assert flipped == 5
    for p in pairs:
        oracle = vertex_l2_loop(rec.meshes[p.first].astype(float), rec.meshes[p.second].astype(float))
        assert p.label == pytest.approx(oracle, rel=1e-9)
    assert pair_label(rec, 1, 1) == 0.0
    with pytest.raises(ValueError):
        sample_cost_pairs(random_record(5, t=8))


def test_cost_pair_export(tmp_path):
    recs = [random_record(s, t=10) for s in (6, 7)]
    scale = export_cost_pairs(recs, tmp_path / "pairs.bin")
    a, b, labels = read_cost_pairs(tmp_path / "pairs.bin")
    assert a.shape == (20, 56, 56, 4) and labels.shape == (20,)
    assert labels.max() == pytest.approx(1.0)
    first = sample_cost_pairs(recs[0])[0]
    assert np.array_equal(a[0], recs[0].observations[first.first])
    assert labels[0] * scale == pytest.approx(first.label, rel=1e-6)
