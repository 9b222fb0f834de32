"""Constant-velocity Kalman filter over ``(cx, cy, w, h)`` box measurements.

The state tracks width and height directly rather than aspect ratio::

    x = [cx, cy, w, h, vcx, vcy, vw, vh]

with a unit time step. Noise standard deviations scale with the current box
size, so large (near) people get proportionally looser gates than small ones.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import NonPositiveSize, SingularInnovation, SingularTransform

STD_POSITION = 1.0 / 20
STD_VELOCITY = 1.0 / 160


@dataclass(frozen=True)
class KalmanState:
    mean: np.ndarray
    covariance: np.ndarray

    @property
    def measurement(self) -> np.ndarray:
        return self.mean[:4]


@dataclass(frozen=True)
class AffineTransform:
    """Global image motion between consecutive frames: ``p' = linear @ p + translation``."""

    linear: np.ndarray = field(default_factory=lambda: np.eye(2))
    translation: np.ndarray = field(default_factory=lambda: np.zeros(2))

    def __post_init__(self):
        linear = np.asarray(self.linear, dtype=float).reshape(2, 2)
        translation = np.asarray(self.translation, dtype=float).reshape(2)
        if not (np.all(np.isfinite(linear)) and np.all(np.isfinite(translation))):
            raise SingularTransform("transform has non-finite entries")
        if abs(np.linalg.det(linear)) <= 1e-12:
            raise SingularTransform("linear part of transform is singular")
        object.__setattr__(self, "linear", linear)
        object.__setattr__(self, "translation", translation)

    @classmethod
    def identity(cls) -> "AffineTransform":
        return cls()

    @classmethod
    def from_translation(cls, dx: float, dy: float) -> "AffineTransform":
        return cls(np.eye(2), np.array([dx, dy], dtype=float))

    @property
    def scale(self) -> float:
        return float(np.sqrt(abs(np.linalg.det(self.linear))))


class KalmanFilter:
    """Stateless filter; every method returns a new :class:`KalmanState`."""

    ndim = 4

    def __init__(self, std_position: float = STD_POSITION, std_velocity: float = STD_VELOCITY):
        self.std_position = std_position
        self.std_velocity = std_velocity

    def _size_scaled(self, w: float, h: float, pos_factor: float, vel_factor: float) -> np.ndarray:
        p = self.std_position * pos_factor
        v = self.std_velocity * vel_factor
        return np.array([p * w, p * h, p * w, p * h, v * w, v * h, v * w, v * h])

    def process_noise(self, mean: np.ndarray) -> np.ndarray:
        return np.diag(self._size_scaled(mean[2], mean[3], 1.0, 1.0) ** 2)

    def measurement_noise(self, mean: np.ndarray) -> np.ndarray:
        p = self.std_position
        w, h = mean[2], mean[3]
        return np.diag(np.array([p * w, p * h, p * w, p * h]) ** 2)

    def initiate(self, z) -> KalmanState:
        z = np.asarray(z, dtype=float)
        if not (z[2] > 0 and z[3] > 0):
            raise NonPositiveSize(f"measurement size must be positive, got w={z[2]} h={z[3]}")
        mean = np.concatenate([z, np.zeros(4)])
        std = self._size_scaled(z[2], z[3], 2.0, 10.0)
        return KalmanState(mean, np.diag(std**2))

    def predict(self, s: KalmanState) -> KalmanState:
        m, P = s.mean, s.covariance
        mean = m.copy()
        mean[:4] += m[4:]
        # F P F^T for F = [[I, I], [0, I]], done blockwise
        A, B = P[:4, :4], P[:4, 4:]
        C, D = P[4:, :4], P[4:, 4:]
        cov = np.empty_like(P)
        cov[:4, :4] = A + B + C + D
        cov[:4, 4:] = B + D
        cov[4:, :4] = C + D
        cov[4:, 4:] = D
        cov += self.process_noise(m)
        return KalmanState(mean, cov)

    def update(self, s: KalmanState, z) -> KalmanState:
        z = np.asarray(z, dtype=float)
        m, P = s.mean, s.covariance
        S = P[:4, :4] + self.measurement_noise(m)
        try:
            chol = np.linalg.cholesky(S)
        except np.linalg.LinAlgError as exc:
            raise SingularInnovation("innovation covariance is not positive definite") from exc
        if np.linalg.cond(S) > 1e14:
            raise SingularInnovation("innovation covariance is numerically singular")
        # K = P H^T S^-1, solved through the Cholesky factor
        PHt = P[:, :4]
        K = np.linalg.solve(chol.T, np.linalg.solve(chol, PHt.T)).T
        mean = m + K @ (z - m[:4])
        cov = P - K @ P[:4, :]
        cov = 0.5 * (cov + cov.T)
        return KalmanState(mean, cov)

    @staticmethod
    def apply_cmc(s: KalmanState, t: AffineTransform) -> KalmanState:
        """Move a state into the coordinates of the next (camera-moved) frame."""
        L, scale = t.linear, t.scale
        m, P = s.mean, s.covariance
        mean = m.copy()
        mean[0:2] = L @ m[0:2] + t.translation
        mean[4:6] = L @ m[4:6]
        mean[2:4] = scale * m[2:4]
        mean[6:8] = scale * m[6:8]
        # conjugate by T = blockdiag(L, s, s, L, s, s) without building it
        blocks = (slice(0, 2), slice(2, 4), slice(4, 6), slice(6, 8))
        factors = (L, scale, L, scale)
        cov = np.empty_like(P)
        for bi, fi in zip(blocks, factors):
            for bj, fj in zip(blocks, factors):
                blk = P[bi, bj]
                blk = fi @ blk if isinstance(fi, np.ndarray) else fi * blk
                blk = blk @ fj.T if isinstance(fj, np.ndarray) else blk * fj
                cov[bi, bj] = blk
        return KalmanState(mean, cov)
