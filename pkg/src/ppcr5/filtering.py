"""Single-sensor particle filtering for a bearing-only tracker.

State is planar position plus velocity, advanced by a quasi-constant
velocity model: per step, each velocity axis gains ``q_vel * N(0,1)`` and
each position axis advances by ``dt`` times the *previous* velocity plus
``q_pos * N(0,1)``.  A passive sensor measures the azimuth to the target
with additive Gaussian noise; weighting, systematic resampling and a
kernel density estimate over the weighted cloud complete the toolkit.

Clouds have value semantics: no operation mutates its input, so clouds
may be shared freely across threads with distinct generator streams.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

_SQRT_2PI = float(np.sqrt(2.0 * np.pi))
KDE_FLOOR = 1e-300
KDE_BANDWIDTH_FLOOR = 1e-3


class FilterDivergenceError(RuntimeError):
    """Every particle weight vanished; the filter lost the target this step."""


class StateVector4(NamedTuple):
    """Planar position and velocity (position units, per-step velocity)."""

    x: float
    y: float
    vx: float
    vy: float

    def as_array(self) -> np.ndarray:
        return np.array(self, dtype=float)


class Particle(NamedTuple):
    state: StateVector4
    weight: float


@dataclass(frozen=True)
class MotionModel:
    """Quasi-constant velocity model gains; dt in time units."""

    dt: float = 1.0
    q_vel: float = 0.1
    q_pos: float = 0.3

    def __post_init__(self) -> None:
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if self.q_vel < 0 or self.q_pos < 0:
            raise ValueError("noise gains must be >= 0")


@dataclass(frozen=True)
class Sensor:
    """Passive bearing sensor: position and azimuth noise std (radians)."""

    pos_x: float
    pos_y: float
    sigma_bearing: float = 0.01

    def __post_init__(self) -> None:
        if not self.sigma_bearing > 0:
            raise ValueError("sigma_bearing must be positive")


@dataclass(frozen=True)
class Measurement:
    """Noisy azimuth seen by one sensor at one time step."""

    sensor_id: int
    bearing: float
    time: int

    def __post_init__(self) -> None:
        object.__setattr__(self, "bearing", float(wrap_angle(self.bearing)))


def wrap_angle(a):
    """Wrap angles to (-pi, pi]."""
    w = np.mod(np.asarray(a, dtype=float) + np.pi, 2.0 * np.pi) - np.pi
    w = np.where(w <= -np.pi, np.pi, w)
    return float(w) if w.ndim == 0 else w


class ParticleCloud:
    """Weighted particle set: states (n, 4) as [x, y, vx, vy], weights (n,)."""

    __slots__ = ("states", "weights")

    def __init__(self, states, weights) -> None:
        st = np.array(states, dtype=float)
        w = np.array(weights, dtype=float)
        if st.ndim != 2 or st.shape[1] != 4:
            raise ValueError(f"states must have shape (n, 4), got {st.shape}")
        if w.shape != (st.shape[0],) or st.shape[0] < 1:
            raise ValueError("need one weight per particle and at least one particle")
        if not np.all(np.isfinite(st)):
            raise ValueError("states must be finite")
        if not np.all(np.isfinite(w)) or np.any(w < 0):
            raise ValueError("weights must be finite and >= 0")
        self.states = st
        self.weights = w

    @classmethod
    def gaussian(
        cls,
        center: StateVector4,
        spread,
        n: int,
        rng: np.random.Generator,
    ) -> "ParticleCloud":
        """Equally weighted cloud drawn around a center with per-axis stds."""
        spread = np.asarray(spread, dtype=float)
        states = center.as_array() + rng.standard_normal((n, 4)) * spread
        return cls(states, np.full(n, 1.0 / n))

    def __len__(self) -> int:
        return self.states.shape[0]

    def particle(self, i: int) -> Particle:
        return Particle(StateVector4(*self.states[i]), float(self.weights[i]))

    @property
    def is_normalized(self) -> bool:
        return abs(self.weights.sum() - 1.0) <= 1e-9

    def normalized(self) -> "ParticleCloud":
        total = self.weights.sum()
        if not total > 0:
            raise FilterDivergenceError("cannot normalize a zero-weight cloud")
        return ParticleCloud(self.states, self.weights / total)

    def copy(self) -> "ParticleCloud":
        return ParticleCloud(self.states, self.weights)

    def mean_state(self) -> StateVector4:
        w = self.weights / self.weights.sum()
        return StateVector4(*(w @ self.states))

    def weighted_std(self) -> np.ndarray:
        """Per-axis weighted standard deviation."""
        w = self.weights / self.weights.sum()
        mu = w @ self.states
        return np.sqrt(w @ (self.states - mu) ** 2)

    def position_spread(self) -> float:
        """Root total position variance, sqrt(var_x + var_y)."""
        sd = self.weighted_std()
        return float(np.sqrt(sd[0] ** 2 + sd[1] ** 2))


def predict(cloud: ParticleCloud, model: MotionModel, rng: np.random.Generator) -> ParticleCloud:
    """Advance every particle one step; weights are untouched.

    Velocity noise is drawn first, but positions advance with the previous
    velocity, matching the model's ordering.
    """
    vel_noise = rng.standard_normal((len(cloud), 2)) * model.q_vel
    pos_noise = rng.standard_normal((len(cloud), 2)) * model.q_pos
    pos = cloud.states[:, :2] + model.dt * cloud.states[:, 2:] + pos_noise
    vel = cloud.states[:, 2:] + vel_noise
    return ParticleCloud(np.hstack([pos, vel]), cloud.weights)


def bearing(sensor: Sensor, state: StateVector4) -> float:
    """Four-quadrant azimuth from sensor to target, in (-pi, pi].

    Measured from the +x axis; raises if target and sensor coincide.
    """
    dx = state.x - sensor.pos_x
    dy = state.y - sensor.pos_y
    if dx == 0.0 and dy == 0.0:
        raise ValueError("target coincides with sensor; bearing undefined")
    return wrap_angle(np.arctan2(dy, dx))


def bearings(sensor: Sensor, xy: np.ndarray) -> np.ndarray:
    """Vectorized azimuths for an (n, 2) position block (nan when coincident)."""
    dx = xy[:, 0] - sensor.pos_x
    dy = xy[:, 1] - sensor.pos_y
    out = np.arctan2(dy, dx)
    out[(dx == 0.0) & (dy == 0.0)] = np.nan
    return wrap_angle(out)


def likelihood(sensor: Sensor, z: Measurement, state: StateVector4) -> float:
    """Gaussian density of the wrapped angular error of one state.

    A state sitting exactly on the sensor has no defined bearing and gets
    likelihood zero.
    """
    if state.x == sensor.pos_x and state.y == sensor.pos_y:
        return 0.0
    err = wrap_angle(z.bearing - bearing(sensor, state))
    s = sensor.sigma_bearing
    return float(np.exp(-0.5 * (err / s) ** 2) / (s * _SQRT_2PI))


def likelihoods(sensor: Sensor, z: Measurement, states: np.ndarray) -> np.ndarray:
    """Vectorized :func:`likelihood` over an (n, 4) state block."""
    err = wrap_angle(z.bearing - bearings(sensor, states[:, :2]))
    s = sensor.sigma_bearing
    out = np.exp(-0.5 * (err / s) ** 2) / (s * _SQRT_2PI)
    return np.where(np.isnan(err), 0.0, out)


def update_weights(
    cloud: ParticleCloud, sensor: Sensor, z: Measurement
) -> tuple[ParticleCloud, float]:
    """Multiply weights by the measurement likelihood and renormalize.

    Returns the reweighted cloud and the pre-normalization weight sum (an
    evidence proxy).  Raises :class:`FilterDivergenceError` when every
    weight underflows to zero.
    """
    w = cloud.weights * likelihoods(sensor, z, cloud.states)
    total = float(w.sum())
    if not total > 0.0:
        raise FilterDivergenceError(
            f"all {len(cloud)} particle weights underflowed at step {z.time}"
        )
    return ParticleCloud(cloud.states, w / total), total


def systematic_resample(
    cloud: ParticleCloud, n_out: int, rng: np.random.Generator
) -> ParticleCloud:
    """Low-variance resampling with a single uniform offset.

    Returns ``n_out`` equally weighted particles; particle i is copied
    close to ``n_out * w_i`` times.
    """
    if n_out < 1:
        raise ValueError("need n_out >= 1")
    w = cloud.weights / cloud.weights.sum()
    positions = (np.arange(n_out) + rng.uniform()) / n_out
    idx = np.searchsorted(np.cumsum(w), positions, side="right")
    idx = np.minimum(idx, len(cloud) - 1)
    return ParticleCloud(cloud.states[idx], np.full(n_out, 1.0 / n_out))


def silverman_bandwidths(cloud: ParticleCloud) -> np.ndarray:
    """Per-axis Silverman bandwidths from the cloud's weighted stds.

    Uses the multivariate rule h = sd * (4 / (n_eff (d+2)))^(1/(d+4)) with
    the effective sample size 1 / sum(w^2); degenerate axes are floored.
    """
    w = cloud.weights / cloud.weights.sum()
    n_eff = 1.0 / float(w @ w)
    d = cloud.states.shape[1]
    factor = (4.0 / (n_eff * (d + 2.0))) ** (1.0 / (d + 4.0))
    return np.maximum(cloud.weighted_std() * factor, KDE_BANDWIDTH_FLOOR)


def kde_densities(cloud: ParticleCloud, points: np.ndarray) -> np.ndarray:
    """Weighted Gaussian product-kernel density at each query point (m, 4)."""
    h = silverman_bandwidths(cloud)
    w = cloud.weights / cloud.weights.sum()
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    # (m, n): squared Mahalanobis distance under the diagonal bandwidths
    z2 = np.zeros((pts.shape[0], len(cloud)))
    for axis in range(cloud.states.shape[1]):
        diff = (pts[:, axis, None] - cloud.states[None, :, axis]) / h[axis]
        z2 += diff * diff
    norm = float(np.prod(h)) * _SQRT_2PI ** cloud.states.shape[1]
    est = np.exp(-0.5 * z2) @ w / norm
    return np.maximum(est, KDE_FLOOR)


def kde_density(cloud: ParticleCloud, point: StateVector4) -> float:
    """Kernel density estimate of the cloud at a single state."""
    return float(kde_densities(cloud, point.as_array()[None, :])[0])
