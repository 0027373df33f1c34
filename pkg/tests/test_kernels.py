import numpy as np
import pytest

from fabric_mpc import _kernels as K
from fabric_mpc.action import OLD_BOUNDS, ExecConfig, PickPull, execute, sample_action
from fabric_mpc.cloth import ClothParams
from fabric_mpc.observe import OOB_MARGIN

from .helpers import contact_pairs, random_state


@pytest.mark.parametrize("seed", [3, 7, 11])
def test_neighbour_list_contacts_match_brute_force(seed):
    s = random_state(seed)
    # stir the cloth so points cross in and out of the list's skin
    s.points[:, 2] += 0.05
    phys = s.params.as_array()
    radius = s.params.self_collision_radius
    x, y, z = K._split(s.points)
    px, py, pz = K._split(s.prev_points)
    w = K.make_work(s.n * s.n, s.n)
    contact = w[9]
    for _ in range(60):
        pts = np.stack([x, y, z], axis=1)
        expected = np.zeros(len(pts), bool)
        for i, j in contact_pairs(pts, s.n, radius):
            expected[i] = expected[j] = True
        K._step(x, y, z, px, py, pz, s.pinned, phys, w)
        assert np.array_equal(contact > 0, expected)


def test_rollout_equals_sequential_execute():
    rng = np.random.default_rng(4)
    s = random_state(5)
    acts = [sample_action(OLD_BOUNDS, 0.3, s, rng) for _ in range(3)]
    seq = s
    for a in acts:
        seq = execute(seq, a).state
    arr = np.array([a.as_array() for a in acts])
    pos, prev = s.points.copy(), s.prev_points.copy()
    done, oob = K.rollout(pos, prev, s.pinned.copy(), s.params.as_array(), arr, ExecConfig().as_array(), OOB_MARGIN)
    assert done == 3 and not oob
    assert np.array_equal(pos, seq.points)


def test_rollout_batch_matches_single_rollouts():
    s = random_state(2)
    rng = np.random.default_rng(0)
    acts = np.stack([[sample_action(OLD_BOUNDS, 0.0, s, rng).as_array() for _ in range(2)] for _ in range(3)])
    phys, ex = s.params.as_array(), ExecConfig().as_array()
    out, done, oob = K.rollout_batch(s.points, s.prev_points, s.pinned, phys, acts, ex, OOB_MARGIN)
    for k in range(3):
        pos, prev = s.points.copy(), s.prev_points.copy()
        K.rollout(pos, prev, s.pinned.copy(), phys, acts[k], ex, OOB_MARGIN)
        assert np.array_equal(out[k], pos)


def test_clip_delta():
    assert K.clip_delta(0.9, 0.9, 0.5, 0.5) == pytest.approx((0.1, 0.1))
    assert K.clip_delta(0.2, 0.5, -0.3, 0.1) == pytest.approx((-0.2, 0.1))


def test_empty_grasp_leaves_flat_cloth_alone():
    pos = np.zeros((625, 3))
    g = np.arange(25) / 24
    pos[:, 0] = np.tile(g, 25)
    pos[:, 1] = np.repeat(g, 25)
    assert len(K.grasp_set(pos, 1.5, 1.5, 0.02, 0.01)) == 0
    assert len(K.grasp_set(pos, 0.5, 0.5, 0.02, 0.01)) >= 1


def test_triangle_count():
    assert K.triangles(25).shape == (2 * 24 * 24, 3)


def test_params_vector_order():
    p = ClothParams()
    v = p.as_array()
    assert v[K.P_N] == p.n
    assert v[K.P_DAMPING] == p.damping
    assert v[K.P_SC_RADIUS] == p.self_collision_radius
    assert len(v) == K.N_PHYS


def test_pickpull_array_round_trip():
    a = PickPull(0.1, 0.2, 0.3, -0.1)
    assert PickPull.from_array(a.as_array()) == a
