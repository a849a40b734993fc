"""Truth simulation, measurement generation and experiment orchestration.

A scenario describes sensors, a target trajectory, per-sensor filter
initialization and a fusion rule.  ``run_filter`` executes one replicate
(local steps, fusion, feedback, metrics); ``run_monte_carlo`` repeats it
over derived seeds and aggregates divergence statistics.  Every stream of
randomness is keyed by (master seed, run, stage), so batches are
bit-reproducible and replicates are independent.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

import numpy as np

from .distributed import (
    FusionRule,
    LocalPosterior,
    feedback,
    fuse,
    local_step,
)
from .filtering import (
    FilterDivergenceError,
    Measurement,
    MotionModel,
    ParticleCloud,
    Sensor,
    StateVector4,
    bearing,
    predict,
    wrap_angle,
)
from .rng import generator, seed_sequence

# stage tags for stream derivation
STREAM_TRUTH = 0
STREAM_MEAS = 1
STREAM_INIT = 2
STREAM_FILTER = 3

TRAJECTORY_KINDS = ("constant_velocity", "scripted")


@dataclass(frozen=True)
class TrajectorySpec:
    """Target path: straight constant velocity, or scripted velocity resets."""

    kind: str
    start: StateVector4
    steps: int
    waypoints: tuple[tuple[int, float, float], ...] = ()

    def __post_init__(self) -> None:
        if self.kind not in TRAJECTORY_KINDS:
            raise ValueError(f"kind must be one of {TRAJECTORY_KINDS}, got {self.kind!r}")
        if self.steps < 1:
            raise ValueError("steps must be >= 1")
        marks = [w[0] for w in self.waypoints]
        if any(b <= a for a, b in zip(marks, marks[1:])):
            raise ValueError("waypoint steps must be strictly increasing")
        if self.kind == "constant_velocity" and self.waypoints:
            raise ValueError("constant_velocity trajectories take no waypoints")


@dataclass(frozen=True)
class InitSpec:
    """Per-sensor initial cloud centers and the shared per-axis spread."""

    centers: tuple[StateVector4, ...]
    spread: tuple[float, float, float, float] = (5.0, 5.0, 0.5, 0.5)

    def __post_init__(self) -> None:
        if len(self.centers) < 1:
            raise ValueError("need at least one init center")
        if any(not s > 0 for s in self.spread):
            raise ValueError("init spreads must be positive")


@dataclass(frozen=True)
class ScenarioConfig:
    """Complete declarative description of one tracking experiment."""

    sensors: tuple[Sensor, ...]
    trajectory: TrajectorySpec
    init: InitSpec
    particles: int = 200
    fusion: FusionRule = FusionRule.WHITENED
    seed: int = 0
    runs: int = 1
    divergence_threshold: float = 30.0
    motion: MotionModel = field(default_factory=MotionModel)
    truth_noisy: bool = False
    feedback_enabled: bool = True

    def __post_init__(self) -> None:
        if len(self.sensors) < 1:
            raise ValueError("need at least one sensor")
        if len(self.init.centers) != len(self.sensors):
            raise ValueError("need one init center per sensor")
        if self.runs < 1:
            raise ValueError("runs must be >= 1")
        if self.particles < 1:
            raise ValueError("particles must be >= 1")
        if not self.divergence_threshold > 0:
            raise ValueError("divergence_threshold must be positive")


@dataclass
class RunMetrics:
    """Per-step tracking statistics of one replicate."""

    pos_rmse: np.ndarray
    speed_rmse: np.ndarray
    pos_spread: np.ndarray
    estimates: np.ndarray  # (steps, 4) fused weighted-mean state per step
    diverged: bool
    diverge_step: int  # step of a filter abort, -1 when the run completed
    final_error: float


@dataclass
class MonteCarloSummary:
    """Aggregate of independent replicates of one scenario and rule."""

    rule: FusionRule
    runs: int
    divergence_rate: float
    mean_final_error: float
    mean_pos_rmse: np.ndarray
    mean_speed_rmse: np.ndarray
    mean_pos_spread: np.ndarray
    mean_estimates: np.ndarray
    truth: list[StateVector4]
    truth_hash: str
    per_run: list[RunMetrics]
    clouds_run0: list[ParticleCloud] | None = None


def simulate_truth(
    spec: TrajectorySpec,
    model: MotionModel,
    rng: np.random.Generator | None = None,
    noisy: bool = False,
) -> list[StateVector4]:
    """Target states for steps 0..steps.

    Waypoints reset the velocity at their step before the position
    advances.  With ``noisy`` the motion-model noise is added on top of
    the scripted kinematics.
    """
    if noisy and rng is None:
        raise ValueError("noisy truth needs a generator")
    resets = {w[0]: (w[1], w[2]) for w in spec.waypoints}
    x, y, vx, vy = spec.start
    out = [StateVector4(x, y, vx, vy)]
    for t in range(spec.steps):
        if t in resets:
            vx, vy = resets[t]
        if noisy:
            nvx, nvy = rng.standard_normal(2) * model.q_vel
            npx, npy = rng.standard_normal(2) * model.q_pos
        else:
            nvx = nvy = npx = npy = 0.0
        x, y = x + model.dt * vx + npx, y + model.dt * vy + npy
        vx, vy = vx + nvx, vy + nvy
        out.append(StateVector4(x, y, vx, vy))
    return out


def generate_measurements(
    truth: list[StateVector4],
    sensors: tuple[Sensor, ...],
    rng: np.random.Generator,
) -> list[list[Measurement]]:
    """Noisy azimuths of the true target, per step 1..steps, per sensor."""
    out = []
    for t in range(1, len(truth)):
        row = []
        for sid, sensor in enumerate(sensors):
            b = bearing(sensor, truth[t]) + sensor.sigma_bearing * rng.standard_normal()
            row.append(Measurement(sensor_id=sid, bearing=wrap_angle(b), time=t))
        out.append(row)
    return out


def truth_digest(truth: list[StateVector4]) -> str:
    """Short stable hash of a truth trajectory, for paired-design checks."""
    arr = np.ascontiguousarray([s.as_array() for s in truth], dtype=float)
    return hashlib.sha256(arr.tobytes()).hexdigest()[:16]


def _gen(seed: int, *key: int) -> np.random.Generator:
    return generator(seed_sequence(seed, *key))


def _initial_priors(config: ScenarioConfig, run_index: int) -> list[ParticleCloud]:
    n = config.particles
    spread = config.init.spread
    if config.fusion is FusionRule.BAYES:
        # the product rule needs one shared support from the first step on,
        # so the shared prior samples the equal mixture of the per-sensor inits
        rng = _gen(config.seed, run_index, STREAM_INIT, len(config.sensors))
        pick = rng.integers(0, len(config.init.centers), size=n)
        states = np.empty((n, 4))
        for c, center in enumerate(config.init.centers):
            take = pick == c
            states[take] = center.as_array() + rng.standard_normal(
                (int(take.sum()), 4)
            ) * np.asarray(spread)
        shared = ParticleCloud(states, np.full(n, 1.0 / n))
        return [shared.copy() for _ in config.sensors]
    return [
        ParticleCloud.gaussian(center, spread, n, _gen(config.seed, run_index, STREAM_INIT, s))
        for s, center in enumerate(config.init.centers)
    ]


def _pooled_spread(clouds: list[ParticleCloud]) -> float:
    states = np.vstack([c.states for c in clouds])
    weights = np.concatenate([c.weights for c in clouds])
    return ParticleCloud(states, weights / weights.sum()).position_spread()


def run_filter(
    config: ScenarioConfig,
    truth: list[StateVector4],
    measurements: list[list[Measurement]],
    run_index: int = 0,
    keep_clouds: bool = False,
) -> tuple[RunMetrics, list[ParticleCloud] | None]:
    """One replicate: local steps, fusion, feedback, metrics.

    A filter abort (every weight underflowing) is recorded, not raised:
    the estimate freezes at its last value and the run is flagged
    divergent with the aborting step.  A run whose final position error
    exceeds the configured threshold is also flagged divergent.
    """
    steps = config.trajectory.steps
    if len(truth) != steps + 1 or len(measurements) != steps:
        raise ValueError("truth/measurement lengths do not match the trajectory")
    n = config.particles
    n_sensors = len(config.sensors)
    rule = config.fusion
    seed = config.seed

    priors = _initial_priors(config, run_index)
    last_est = StateVector4(*np.mean([c.as_array() for c in config.init.centers], axis=0))
    last_spread = _pooled_spread(priors)

    pos_err = np.empty(steps)
    speed_err = np.empty(steps)
    spread = np.empty(steps)
    estimates = np.empty((steps, 4))
    clouds: list[ParticleCloud] | None = [] if keep_clouds else None
    diverged = False
    diverge_step = -1

    for t in range(1, steps + 1):
        if not diverged:
            try:
                if rule is FusionRule.BAYES:
                    shared = predict(
                        priors[0], config.motion, _gen(seed, run_index, STREAM_FILTER, t, n_sensors + 1)
                    )
                    locals_ = [
                        local_step(
                            priors[s],
                            config.sensors[s],
                            measurements[t - 1][s],
                            config.motion,
                            _gen(seed, run_index, STREAM_FILTER, t, s),
                            n_out=n,
                            predicted=shared,
                        )
                        for s in range(n_sensors)
                    ]
                else:
                    locals_ = [
                        local_step(
                            priors[s],
                            config.sensors[s],
                            measurements[t - 1][s],
                            config.motion,
                            _gen(seed, run_index, STREAM_FILTER, t, s),
                            n_out=n,
                        )
                        for s in range(n_sensors)
                    ]
                fused = fuse(rule, locals_, n, _gen(seed, run_index, STREAM_FILTER, t, n_sensors))
                last_est = fused.mean_state()
                last_spread = fused.position_spread()
                if config.feedback_enabled:
                    priors = feedback(fused, locals_)
                else:
                    priors = [loc.cloud.copy() for loc in locals_]
                if keep_clouds:
                    clouds.append(fused.copy())
            except FilterDivergenceError:
                diverged = True
                diverge_step = t
                if keep_clouds:
                    clouds.append(None)
        elif keep_clouds:
            clouds.append(None)

        estimates[t - 1] = last_est.as_array()
        pos_err[t - 1] = float(np.hypot(last_est.x - truth[t].x, last_est.y - truth[t].y))
        speed_err[t - 1] = float(np.hypot(last_est.vx - truth[t].vx, last_est.vy - truth[t].vy))
        spread[t - 1] = last_spread

    final_error = float(pos_err[-1])
    if final_error > config.divergence_threshold:
        diverged = True
    metrics = RunMetrics(
        pos_rmse=pos_err,
        speed_rmse=speed_err,
        pos_spread=spread,
        estimates=estimates,
        diverged=diverged,
        diverge_step=diverge_step,
        final_error=final_error,
    )
    return metrics, clouds


def run_monte_carlo(config: ScenarioConfig, keep_clouds_run0: bool = False) -> MonteCarloSummary:
    """Independent replicates with per-run derived seeds, aggregated."""
    per_run: list[RunMetrics] = []
    clouds_run0 = None
    truth0: list[StateVector4] | None = None
    for run in range(config.runs):
        truth = simulate_truth(
            config.trajectory,
            config.motion,
            _gen(config.seed, run, STREAM_TRUTH),
            noisy=config.truth_noisy,
        )
        measurements = generate_measurements(
            truth, config.sensors, _gen(config.seed, run, STREAM_MEAS)
        )
        metrics, clouds = run_filter(
            config, truth, measurements, run_index=run, keep_clouds=keep_clouds_run0 and run == 0
        )
        per_run.append(metrics)
        if run == 0:
            truth0 = truth
            clouds_run0 = clouds

    diverged = sum(m.diverged for m in per_run)
    converged_errors = [m.final_error for m in per_run if not m.diverged]
    return MonteCarloSummary(
        rule=config.fusion,
        runs=config.runs,
        divergence_rate=diverged / config.runs,
        mean_final_error=float(np.mean(converged_errors)) if converged_errors else float("nan"),
        mean_pos_rmse=np.mean([m.pos_rmse for m in per_run], axis=0),
        mean_speed_rmse=np.mean([m.speed_rmse for m in per_run], axis=0),
        mean_pos_spread=np.mean([m.pos_spread for m in per_run], axis=0),
        mean_estimates=np.mean([m.estimates for m in per_run], axis=0),
        truth=truth0,
        truth_hash=truth_digest(truth0),
        per_run=per_run,
        clouds_run0=clouds_run0,
    )
