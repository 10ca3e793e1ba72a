import math

import numpy as np
import pytest

from glucb import env


def test_make_rng_is_reproducible():
    a = env.make_rng(123, 4).standard_normal(50)
    b = env.make_rng(123, 4).standard_normal(50)
    np.testing.assert_array_equal(a, b)
    c = env.make_rng(123, 5).standard_normal(50)
    assert not np.array_equal(a, c)


def test_bulk_draws_equal_sequential_draws():
    bulk = env.make_rng(9, 1).standard_normal(100)
    rng = env.make_rng(9, 1)
    seq = np.array([rng.standard_normal() for _ in range(100)])
    np.testing.assert_array_equal(bulk, seq)


def test_arm_set_rejects_bad_input():
    with pytest.raises(ValueError):
        env.ArmSet(np.array([[1.0, 0.0]]))
    with pytest.raises(ValueError):
        env.ArmSet(np.array([[2.0, 0.0], [0.0, 1.0]]))
    arms = env.ArmSet(np.eye(3))
    assert arms.K == 3 and arms.d == 3
    with pytest.raises(ValueError):
        arms.arms[0, 0] = 5.0


def test_instance_requires_unique_best():
    with pytest.raises(ValueError):
        env.Instance.from_arrays(np.eye(2), [1.0, 1.0])
    with pytest.raises(ValueError):
        env.Instance.from_arrays(np.eye(2), [1.0, 0.0, 0.0])


def test_pull_noiseless():
    inst = env.gen_soare(2, noise_std=0.0)
    rng = env.make_rng(0)
    assert env.pull(inst, 0, rng) == 1.0
    assert env.pull(inst, 2, rng) == pytest.approx(math.cos(0.1))
    assert env.pull(inst, 2, rng) == pytest.approx(0.99500, abs=1e-5)


def test_pull_moments():
    inst = env.gen_soare(2)
    rng = env.make_rng(1)
    ys = np.array([env.pull(inst, 2, rng) for _ in range(100_000)])
    assert abs(ys.mean() - math.cos(0.1)) < 0.02
    assert abs(ys.var() - 1.0) < 0.05


def test_pull_index_out_of_range():
    inst = env.three_arm(0.5)
    with pytest.raises(IndexError):
        env.pull(inst, 3, env.make_rng(0))
    with pytest.raises(IndexError):
        env.pull(inst, -1, env.make_rng(0))


def test_gaps():
    inst = env.three_arm(0.4)
    np.testing.assert_allclose(env.gaps(inst), [0.0, 1.0, 1 - math.cos(0.4)], atol=1e-15)
    mab = env.standard_basis([1.0, 0.5, 0.0])
    assert env.best_arm(mab) == 0
    np.testing.assert_allclose(env.gaps(mab), [0.0, 0.5, 1.0])
    assert env.min_gap(env.gen_soare(2)) == pytest.approx(0.0049958347219741794, rel=1e-12)


def test_soare_layout():
    inst = env.gen_soare(2)
    np.testing.assert_allclose(inst.arms[2], [0.99500, 0.09983], atol=1e-5)
    np.testing.assert_array_equal(inst.arms, env.three_arm(0.1).arms)
    five = env.gen_soare(5)
    assert five.K == 6
    np.testing.assert_array_equal(five.means[1:5], 0.0)
    with pytest.raises(ValueError):
        env.gen_soare(1)
    with pytest.raises(ValueError):
        env.gen_soare(3, omega=math.pi / 2)


def test_three_arm():
    inst = env.three_arm(math.pi / 6)
    np.testing.assert_allclose(inst.arms[2], [math.sqrt(3) / 2, 0.5])
    assert env.min_gap(env.three_arm(0.1)) == pytest.approx(0.0049958, abs=1e-7)
    for bad in (0.0, -0.1, math.pi / 2, 2.0):
        with pytest.raises(ValueError):
            env.three_arm(bad)


def test_sphere_orthonormal_fixture():
    inst = env.gen_sphere(4, 4, gamma=0.01, arms=np.eye(4))
    means = inst.means
    assert sorted(means)[-2:] == pytest.approx([0.01, 0.99])
    assert env.best_arm(inst) == int(np.argmax(means))


def test_sphere_deterministic_and_valid():
    a = env.gen_sphere(10, 100, rng=env.make_rng(7))
    b = env.gen_sphere(10, 100, rng=env.make_rng(7))
    np.testing.assert_array_equal(a.arms, b.arms)
    np.testing.assert_array_equal(a.theta_star, b.theta_star)
    np.testing.assert_allclose(np.linalg.norm(a.arms, axis=1), 1.0)
    for seed in range(100):
        inst = env.gen_sphere(10, 100, rng=env.make_rng(seed))
        assert env.min_gap(inst) > 0


def test_sphere_rejects_bad_parameters():
    for kwargs in ({"d": 1}, {"d": 3, "K": 1}, {"d": 3, "gamma": 0.5}):
        with pytest.raises(ValueError):
            env.gen_sphere(rng=env.make_rng(0), **kwargs)


def test_crowded():
    inst = env.gen_crowded(3, phis=[0.0])
    np.testing.assert_allclose(inst.arms[2], [math.sqrt(2) / 2, math.sqrt(2) / 2])
    assert env.gaps(inst)[2] == pytest.approx(0.29289, abs=1e-5)
    assert inst.means[1] == pytest.approx(-math.sqrt(2) / 2)
    big = env.gen_crowded(100, rng=env.make_rng(1))
    assert big.K == 100 and big.d == 2
    assert env.best_arm(big) == 0
    assert np.all(big.means[1:] < 1.0)


def test_crowded_rejects_dominating_jitter():
    rng = env.make_rng(5)
    inst = env.gen_crowded(2000, sigma=3.0, rng=rng)
    assert env.best_arm(inst) == 0


def test_instance_file_round_trip(tmp_path):
    inst = env.gen_sphere(5, 20, rng=env.make_rng(3), noise_std=0.5)
    path = tmp_path / "inst.json"
    env.dump_instance(inst, path)
    back = env.load_instance(path)
    np.testing.assert_array_equal(back.arms, inst.arms)
    np.testing.assert_array_equal(back.theta_star, inst.theta_star)
    assert back.noise_std == 0.5
    assert path.read_text() == env.instance_to_text(back)


def test_arm_set_only_file(tmp_path):
    path = tmp_path / "arms.json"
    path.write_text('{"d": 2, "arms": [[1, 0], [0, 1]]}')
    arms, theta, noise = env.load_arms(path)
    assert theta is None and arms.shape == (2, 2) and noise == 1.0
    with pytest.raises(ValueError):
        env.load_instance(path)
    path.write_text('{"d": 3, "arms": [[1, 0], [0, 1]]}')
    with pytest.raises(ValueError):
        env.load_arms(path)
