import numpy as np
import pytest

from oracles import dense_cmc, dense_predict, dense_update
from storesight.errors import NonPositiveSize, SingularInnovation, SingularTransform
from storesight.kalman import AffineTransform, KalmanFilter, KalmanState

kf = KalmanFilter()


def random_state(rng):
    mean = np.r_[rng.uniform(0, 1000, 2), rng.uniform(10, 200, 2), rng.normal(0, 3, 4)]
    A = rng.normal(size=(8, 8))
    cov = A @ A.T + 0.1 * np.eye(8)
    return KalmanState(mean, cov)


def test_initiate():
    s = kf.initiate((10, 20, 5, 8))
    assert s.mean.tolist() == [10, 20, 5, 8, 0, 0, 0, 0]
    assert np.count_nonzero(s.covariance - np.diag(np.diag(s.covariance))) == 0
    assert np.allclose(
        np.sqrt(np.diag(s.covariance)),
        [2 * 5 / 20, 2 * 8 / 20, 2 * 5 / 20, 2 * 8 / 20, 10 * 5 / 160, 10 * 8 / 160, 10 * 5 / 160, 10 * 8 / 160],
    )
    with pytest.raises(NonPositiveSize):
        kf.initiate((0, 0, 0, 4))


def test_initiate_then_noiseless_predict_is_still():
    quiet = KalmanFilter(0.0, 0.0)
    s = quiet.predict(quiet.initiate((10, 20, 5, 8)))
    assert s.mean.tolist() == [10, 20, 5, 8, 0, 0, 0, 0]


def test_predict_moves_by_velocity():
    s = KalmanState(np.array([10.0, 20, 5, 8, 1, 0, 0, 0]), np.eye(8))
    m = kf.predict(s).mean
    assert m[:4].tolist() == [11, 20, 5, 8]
    assert m[4:].tolist() == [1, 0, 0, 0]


def test_predict_and_update_match_dense_oracle():
    rng = np.random.default_rng(11)
    for _ in range(200):
        s = random_state(rng)
        p = kf.predict(s)
        m, P = dense_predict(s.mean, s.covariance)
        assert np.allclose(p.mean, m, atol=1e-9, rtol=0) and np.allclose(p.covariance, P, atol=1e-9, rtol=0)
        z = p.mean[:4] + rng.normal(0, 5, 4)
        u = kf.update(p, z)
        m, P = dense_update(p.mean, p.covariance, z)
        assert np.allclose(u.mean, m, atol=1e-9, rtol=1e-12) and np.allclose(u.covariance, P, atol=1e-9, rtol=1e-12)


def test_update_with_zero_innovation_keeps_mean():
    s = kf.predict(kf.initiate((50, 60, 20, 40)))
    assert np.allclose(kf.update(s, s.mean[:4]).mean, s.mean, atol=1e-12)


def test_update_contracts_measured_variances():
    rng = np.random.default_rng(2)
    for _ in range(50):
        s = random_state(rng)
        u = kf.update(s, s.mean[:4] + rng.normal(0, 2, 4))
        assert np.all(np.diag(u.covariance)[:4] <= np.diag(s.covariance)[:4] + 1e-12)


def test_repeated_update_moves_closer():
    s = kf.predict(kf.initiate((50, 60, 20, 40)))
    z = np.array([60.0, 55, 22, 38])
    once = kf.update(s, z)
    twice = kf.update(once, z)
    assert np.linalg.norm(twice.mean[:4] - z) < np.linalg.norm(once.mean[:4] - z) < np.linalg.norm(s.mean[:4] - z)


def test_singular_innovation():
    s = KalmanState(np.array([0, 0, 0.0, 0.0, 0, 0, 0, 0]), np.zeros((8, 8)))
    with pytest.raises(SingularInnovation):
        kf.update(s, np.zeros(4))


def test_cmc_identity_and_translation():
    s = kf.predict(kf.initiate((100, 200, 30, 60)))
    same = kf.apply_cmc(s, AffineTransform.identity())
    assert np.array_equal(same.mean, s.mean) and np.array_equal(same.covariance, s.covariance)
    moved = kf.apply_cmc(s, AffineTransform.from_translation(5, -3))
    assert moved.mean[0] == s.mean[0] + 5 and moved.mean[1] == s.mean[1] - 3
    assert np.array_equal(moved.mean[2:], s.mean[2:])
    assert np.array_equal(moved.covariance, s.covariance)


def test_cmc_rotation_matches_dense_oracle():
    rng = np.random.default_rng(5)
    rot = np.array([[0.0, -1.0], [1.0, 0.0]])
    for linear in (rot, 1.3 * rot, rng.normal(size=(2, 2)) + 2 * np.eye(2)):
        t = AffineTransform(linear, rng.normal(0, 10, 2))
        s = random_state(rng)
        out = kf.apply_cmc(s, t)
        m, P = dense_cmc(s.mean, s.covariance, t.linear, t.translation)
        assert np.allclose(out.mean, m, atol=1e-9) and np.allclose(out.covariance, P, atol=1e-9)


def test_singular_transform_rejected():
    with pytest.raises(SingularTransform):
        AffineTransform(np.array([[1.0, 2.0], [2.0, 4.0]]), np.zeros(2))


def test_covariance_stays_symmetric_psd():
    rng = np.random.default_rng(9)
    truth = np.array([300.0, 300.0, 40.0, 100.0])
    s = kf.initiate(truth)
    for k in range(1000):
        s = kf.predict(s)
        z = truth + [2.0 * np.sin(k / 20), 0.5 * k % 50, 0.0, 0.0] + rng.normal(0, 2, 4)
        s = kf.update(s, z)
        P = s.covariance
        assert np.max(np.abs(P - P.T)) <= 1e-9
        assert np.linalg.eigvalsh(P).min() >= -1e-8
        assert s.mean[2] > 0 and s.mean[3] > 0


def test_converges_on_noiseless_constant_velocity_target():
    truth = np.array([100.0, 200.0, 40.0, 100.0])
    vel = np.array([3.0, -1.5, 0.0, 0.0])
    s = kf.initiate(truth)
    errors = []
    for k in range(1, 51):
        z = truth + k * vel
        s = kf.update(kf.predict(s), z)
        errors.append(np.sqrt(np.mean((kf.predict(s).mean[:4] - (z + vel)) ** 2)))
    # prediction error of the next position shrinks steadily once velocity is learnt
    tail = errors[5:]
    assert all(b <= a + 1e-12 for a, b in zip(tail, tail[1:]))
    assert errors[-1] < 0.05 * errors[0]
