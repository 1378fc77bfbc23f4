"""
 Surrogate cap-unscrewing environment: reward terms against a longhand
 transcription, stage dynamics, success and termination, bottle sets.
"""

import os

import numpy
import pytest

from vtaobimanip import environment as env
from vtaobimanip import rl
from vtaobimanip.errors import DimensionError, EnvironmentStateError, \
    ValidationError

import testutils


def expected_right(s):
    c_flag = 1.0 if s.cap_contacts[20:].any() else 0.0
    R = testutils.quat_matrix(s.bottle_quat)
    top = s.bottle_pos + R @ numpy.array(
        [0, 0, s.bottle.body_height / 2 + s.bottle.cap_height])
    d_fz = numpy.mean(numpy.abs(s.right_tips[:, 2] - top[2]))
    return (0.5 * min(s.cap_angle, 7.0) + 1.1 * c_flag * s.cap_vel
            + 0.5 * numpy.exp(-10 * d_fz))


def expected_stage1(s):
    R = testutils.quat_matrix(s.bottle_quat)
    axis = R[:, 2]
    v = s.palm_point - s.bottle_pos
    d_h2b = numpy.linalg.norm(v - numpy.dot(v, axis) * axis)
    n_con = numpy.sum(s.contacts[:20])
    return -5.0 * d_h2b + 0.05 * n_con + expected_right(s)


def expected_stage2(s):
    d_h2t = numpy.linalg.norm(s.palm_point - s.palm_target)
    d_o2i = numpy.linalg.norm(s.bottle_pos - s.bottle_pos_ini)
    q_diff = testutils.hamilton(s.bottle_quat,
                                testutils.conjugate(s.q_ini))
    d_qua = 2 * numpy.arcsin(min(numpy.linalg.norm(q_diff[1:]), 1.0))
    return (numpy.exp(-5 * d_h2t) + numpy.exp(-10 * d_o2i)
            + 1.0 / (abs(d_qua) + 1) + expected_right(s))


def random_state(stage, rng):
    s = env.reset(env.EASY_BOTTLE, stage)
    s.palm_point = rng.normal(0, 0.1, 3)
    s.palm_target = rng.normal(0, 0.1, 3)
    s.bottle_pos = rng.normal(0, 0.1, 3)
    s.bottle_pos_ini = rng.normal(0, 0.1, 3)
    s.bottle_quat = testutils.random_quat(rng)
    s.q_ini = testutils.random_quat(rng)
    s.contacts = rng.random(40) < 0.3
    s.cap_contacts = s.contacts & (rng.random(40) < 0.5)
    s.right_tips = rng.normal(0, 0.1, (5, 3))
    s.cap_angle = rng.uniform(-2, 10)
    s.cap_vel = rng.normal(0, 2)
    return s


@pytest.mark.parametrize("stage", [1, 2])
def test_reward_against_oracle(stage):
    rng = numpy.random.default_rng(stage)
    reward = env.reward_stage1 if stage == 1 else env.reward_stage2
    expected = expected_stage1 if stage == 1 else expected_stage2
    for _ in range(1000):
        s = random_state(stage, rng)
        r = reward(s)
        assert abs(r.total - expected(s)) <= 1e-9
        assert abs(r.total - (r.r_left + r.r_right)) <= 1e-12


def test_reward_terms_per_stage():
    rng = numpy.random.default_rng(0)
    r1 = env.reward_stage1(random_state(1, rng))
    assert r1.r_htdis == r1.r_bdis == r1.r_brot == 0.0
    r2 = env.reward_stage2(random_state(2, rng))
    assert r2.r_hdis == r2.r_fcon == 0.0
    assert sorted(r2.as_dict()) == sorted(env.REWARD_TERMS)


def test_reward_wrong_stage():
    with pytest.raises(EnvironmentStateError):
        env.reward_stage2(env.reset(env.EASY_BOTTLE, 1))
    with pytest.raises(EnvironmentStateError):
        env.reward_stage1(env.reset(env.EASY_BOTTLE, 2))


def test_quaternion_angle():
    assert env.quaternion_angle(numpy.array([1.0, 0, 0, 0]),
                                numpy.array([1.0, 0, 0, 0])) == 0.0
    for theta in (0.1, 1.0, 2.5):
        q = numpy.array([numpy.cos(theta / 2), numpy.sin(theta / 2), 0, 0])
        assert numpy.isclose(env.quaternion_angle(
            q, numpy.array([1.0, 0, 0, 0])), theta)


def test_reset_layout():
    s = env.reset(env.EASY_BOTTLE, 1)
    assert s.q.shape == (48,)
    assert numpy.allclose(s.bottle_pos, [0, 0, 0.05])
    assert not s.contacts[:20].any()
    assert numpy.allclose(s.palm_point, s.palm_target)
    obs = env.BimanualCapEnv(env.EASY_BOTTLE, 1, render=False).reset()
    assert obs.proprio.shape == (env.PROPRIO_DIM,)
    assert obs.tactile.shape == (40,)
    assert obs.image is None


def test_stage1_bottle_is_fixed():
    rng = numpy.random.default_rng(2)
    s = env.reset(env.EASY_BOTTLE, 1)
    pos, quat = s.bottle_pos.copy(), s.bottle_quat.copy()
    for _ in range(40):
        s, r, done, info = env.step(s, rng.uniform(-1, 1, env.ACTION_DIM))
        assert numpy.array_equal(s.bottle_pos, pos)
        assert numpy.array_equal(s.bottle_quat, quat)
        if done:
            break


def test_stage2_free_fall():
    cfg = env.EnvConfig()
    s0 = env.reset(env.EASY_BOTTLE, 2, config=cfg)
    s = s0
    g, dt = cfg.gravity, cfg.dt
    for n in range(1, 10):
        s, r, done, info = env.step(s, numpy.zeros(env.ACTION_DIM), cfg)
        assert info['n_left_contacts'] < cfg.attach_contacts
        z = s0.bottle_pos[2] - g * dt * dt * n * (n + 1) / 2
        assert numpy.isclose(s.bottle_pos[2], z, atol=1e-12)
        if done:
            break
    assert s.dropped and not s.success
    assert s.bottle_pos[2] < 0


def test_stage2_push_attaches():
    s = env.reset(env.EASY_BOTTLE, 2)
    a = numpy.zeros(env.ACTION_DIM)
    a[41] = 0.5
    s, r, done, info = env.step(s, a)
    assert info['n_left_contacts'] >= 3
    assert s.attached
    for _ in range(20):
        s, r, done, info = env.step(s, numpy.zeros(env.ACTION_DIM))
    assert not s.dropped
    assert numpy.isclose(s.bottle_pos[2], 0.05, atol=1e-9)


def test_success_threshold():
    s = env.reset(env.EASY_BOTTLE, 1)
    s.cap_angle = numpy.pi
    assert not env.detect_success(s)
    s.cap_angle = numpy.pi + 1e-9
    assert env.detect_success(s)


def test_step_errors():
    s = env.reset(env.EASY_BOTTLE, 1)
    with pytest.raises(DimensionError):
        env.step(s, numpy.zeros(env.ACTION_DIM - 1))
    a = numpy.zeros(env.ACTION_DIM)
    a[3] = numpy.nan
    with pytest.raises(ValidationError):
        env.step(s, a)
    s.done = True
    with pytest.raises(EnvironmentStateError):
        env.step(s, numpy.zeros(env.ACTION_DIM))
    with pytest.raises(ValidationError):
        env.reset(env.EASY_BOTTLE, 3)
    with pytest.raises(ValidationError):
        env.BottleSpec(cap_radius=0.04, body_radius=0.035).validate()
    with pytest.raises(EnvironmentStateError):
        env.BimanualCapEnv(env.EASY_BOTTLE).step(numpy.zeros(46))


def test_step_does_not_modify_state():
    s = env.reset(env.EASY_BOTTLE, 2)
    before = s.copy()
    env.step(s, numpy.ones(env.ACTION_DIM))
    assert numpy.array_equal(s.q, before.q)
    assert numpy.array_equal(s.bottle_pos, before.bottle_pos)


def test_timeout():
    cfg = env.EnvConfig(horizon=5)
    s = env.reset(env.EASY_BOTTLE, 1, config=cfg)
    for _ in range(5):
        s, r, done, info = env.step(s, numpy.zeros(env.ACTION_DIM), cfg)
    assert done and info['timeout']


def test_bottle_sets():
    seen, unseen = env.make_bottle_sets(0)
    assert len(seen) == 10 and len(unseen) == 5
    for u in unseen:
        d = min(numpy.linalg.norm(u.normalized() - s.normalized())
                for s in seen)
        assert d >= env.SET_MARGIN
    for b in seen + unseen:
        b.validate()
        for k, (lo, hi) in env.BOTTLE_RANGES.items():
            assert lo <= getattr(b, k) <= hi
    again, _ = env.make_bottle_sets(0)
    assert again == seen


def test_render_labels():
    cfg = env.EnvConfig(image_size=48)
    s = env.reset(env.EASY_BOTTLE, 1, config=cfg)
    image, tactile = env.render_observation(s, config=cfg)
    assert image.shape == (48, 48, 3)
    assert image.min() >= 0 and image.max() <= 1
    assert tactile.dtype == numpy.uint8
    links, _ = env.world_links(env.robot_hand(), s.q, env._wrists(s))
    idx = [0, env.robot_hand().palm_link] + list(env.robot_hand().probe_links)
    from vtaobimanip.render import LABELS, render_scene
    _, labels = render_scene(cfg.camera(), s.bottle_pos, s.bottle_quat,
                             s.bottle, [(links[0, idx], 'left_hand'),
                                        (links[1, idx], 'right_hand')],
                             cfg.sphere_radius)
    present = set(numpy.unique(labels))
    assert LABELS['body'] in present
    assert LABELS['cap'] in present


def test_vec_env_autoreset():
    cfg = env.EnvConfig(horizon=3)
    venv = env.VecBimanualEnv([env.EASY_BOTTLE], 2, 1, cfg, render=False)
    obs = venv.reset()
    assert obs.proprio.shape == (2, env.PROPRIO_DIM)
    for _ in range(3):
        obs, rewards, dones, infos = venv.step(numpy.zeros((2, 46)))
    assert dones.all()
    assert len(venv.tracker) == 2
    assert len(venv.pop_completed()) == 2
    assert all(s.steps == 0 for s in obs.state)
    venv.close()


def test_vec_env_threaded_matches_serial():
    cfg = env.EnvConfig(horizon=3)
    rng = numpy.random.default_rng(7)
    actions = rng.uniform(-0.1, 0.1, (7, 4, 46))
    runs = []
    for workers in (1, 4):
        venv = env.VecBimanualEnv([env.EASY_BOTTLE], 4, 1, cfg, seed=3,
                                  render=False, workers=workers)
        venv.reset()
        for a in actions:
            obs, _, _, _ = venv.step(a)
        runs.append((venv.pop_completed(), obs.proprio,
                     venv.episodes.copy()))
        venv.close()
    (done1, p1, ep1), (done4, p4, ep4) = runs
    # completions come out in index order within each step
    assert [d[0] for d in done4] == [0, 1, 2, 3, 0, 1, 2, 3]
    assert done1 == done4
    assert numpy.array_equal(ep1, ep4)
    assert numpy.allclose(p1, p4)


def test_oracle_solves_easy_bottle(oracle):
    table = rl.evaluate(oracle, [env.EASY_BOTTLE], [], repeats=3)
    assert table.rows[0].successes == 3


def test_oracle_stage1_turns_cap(oracle):
    s = env.reset(env.EASY_BOTTLE, 1)
    for _ in range(300):
        s, r, done, info = env.step(s, oracle.action(s))
        if done:
            break
    assert s.success


class StillPolicy(object):
    uses_pixels = False

    def act(self, obs):
        return numpy.zeros((len(obs.proprio), env.ACTION_DIM))


def test_still_policy_fails():
    seen, unseen = env.make_bottle_sets(0, 2, 1)
    table = rl.evaluate(StillPolicy(), seen, unseen, repeats=2,
                        env_config=env.EnvConfig(horizon=30))
    assert len(table.rows) == 3
    assert all(r.successes == 0 for r in table.rows)


def test_rollout_trace(tmp_path):
    rows = env.env_rollout(env.EASY_BOTTLE, stage=2, steps=12,
                           policy='random', out_dir=str(tmp_path), seed=3)
    assert len(rows) == 12
    names, data = testutils.read_columns(os.path.join(str(tmp_path),
                                                      'trace.txt'))
    assert names[:3] == ['step', 'stage', 'cap_angle']
    assert data.shape == (12, len(names))
    again = env.env_rollout(env.EASY_BOTTLE, stage=2, steps=12,
                            policy='random', seed=3)
    assert [r['cap_angle'] for r in rows] == [r['cap_angle'] for r in again]


if __name__ == "__main__":
    pytest.main()
