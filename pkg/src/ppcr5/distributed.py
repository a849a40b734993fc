"""Distributed fusion of per-sensor particle filters with feedback.

Each sensor runs a local predict/update/resample step; the local
posteriors are then fused into a single cloud which is re-injected as
every local filter's next prior.  Four fusion rules are provided:

* ``bayes``   - the local posteriors all derive from one shared predicted
  cloud, so the fused weight of each predicted particle is the product of
  all sensors' measurement likelihoods at that particle.
* ``pcr5``    - draw one candidate per sensor from its posterior cloud and
  keep one with probability proportional to the candidate's own-posterior
  density, estimated as KDE over the sensor's predicted cloud times its
  measurement likelihood.
* ``whitened``- same drawing process, but the selection weight is the
  posterior-to-prediction ratio (likelihood over per-sensor evidence);
  the shared prior is thereby counted once, not twice.
* ``mean``    - uniform mixture of the local posteriors.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .filtering import (
    FilterDivergenceError,
    MotionModel,
    Measurement,
    ParticleCloud,
    Sensor,
    kde_densities,
    likelihoods,
    predict,
    systematic_resample,
    update_weights,
)

FUSION_REDRAW_CAP = 100


class FusionRule(Enum):
    """Fusion paradigm applied to the local posteriors at every step."""

    BAYES = "bayes"
    PCR5 = "pcr5"
    WHITENED = "whitened"
    MEAN = "mean"

    @classmethod
    def from_name(cls, name: str) -> "FusionRule":
        try:
            return cls(name.lower())
        except ValueError:
            valid = ", ".join(r.value for r in cls)
            raise ValueError(f"unknown fusion rule {name!r}; valid rules: {valid}") from None


@dataclass
class LocalPosterior:
    """One sensor's contribution to a fusion step.

    ``cloud`` is the resampled (equally weighted) posterior, ``predicted``
    the cloud before the measurement update.  ``likelihoods`` holds this
    sensor's measurement likelihood at each posterior particle, and
    ``predicted_likelihoods`` the same at each predicted particle (the
    Bayesian rule reweights the shared predicted cloud with those).
    ``evidence`` is the prediction-weighted mean likelihood, i.e. the
    normalizer turning likelihood values into the posterior-to-prediction
    ratio: without it a poorly matched sensor's candidates would carry
    exponentially small selection weights and the fused cloud would
    collapse onto the best-matched sensor alone.
    """

    sensor_id: int
    cloud: ParticleCloud
    predicted: ParticleCloud
    likelihoods: np.ndarray
    predicted_likelihoods: np.ndarray
    evidence: float = 1.0

    def __post_init__(self) -> None:
        if len(self.likelihoods) != len(self.cloud):
            raise ValueError("need one likelihood per posterior particle")
        if len(self.predicted_likelihoods) != len(self.predicted):
            raise ValueError("need one likelihood per predicted particle")
        if not self.evidence > 0:
            raise ValueError("evidence must be positive")


def local_step(
    prior: ParticleCloud,
    sensor: Sensor,
    z: Measurement,
    model: MotionModel,
    rng: np.random.Generator,
    n_out: int | None = None,
    predicted: ParticleCloud | None = None,
) -> LocalPosterior:
    """Predict, weight by the local measurement, resample.

    A pre-computed ``predicted`` cloud may be injected so that several
    sensors share one prediction (required by the Bayesian rule).
    """
    if predicted is None:
        predicted = predict(prior, model, rng)
    updated, evidence = update_weights(predicted, sensor, z)
    cloud = systematic_resample(updated, n_out or len(prior), rng)
    return LocalPosterior(
        sensor_id=z.sensor_id,
        cloud=cloud,
        predicted=predicted,
        likelihoods=likelihoods(sensor, z, cloud.states),
        predicted_likelihoods=likelihoods(sensor, z, predicted.states),
        evidence=evidence / predicted.weights.sum(),
    )


def fuse_bayes(
    locals_: list[LocalPosterior],
    rng: np.random.Generator,
    n_out: int | None = None,
) -> ParticleCloud:
    """Product-of-likelihoods fusion on the shared predicted cloud."""
    base = locals_[0].predicted
    for loc in locals_[1:]:
        if loc.predicted is not base and not np.array_equal(loc.predicted.states, base.states):
            raise ValueError("Bayesian fusion requires all locals to share one predicted cloud")
    w = base.weights.copy()
    for loc in locals_:
        w *= loc.predicted_likelihoods
    total = w.sum()
    if not total > 0.0:
        raise FilterDivergenceError(
            "product of sensor likelihoods underflowed on every predicted particle"
        )
    return systematic_resample(ParticleCloud(base.states, w / total), n_out or len(base), rng)


def _candidate_matrix(
    locals_: list[LocalPosterior], n_out: int, rng: np.random.Generator
) -> np.ndarray:
    """Candidate particle indices, one row per output particle, one column per sensor."""
    cols = [rng.integers(0, len(loc.cloud), size=n_out) for loc in locals_]
    return np.column_stack(cols)


def _select_by_weight(
    locals_: list[LocalPosterior],
    weight_tables: list[np.ndarray],
    n_out: int,
    rng: np.random.Generator,
) -> ParticleCloud:
    """Draw candidates, keep one per row proportionally to its table weight.

    Rows whose candidates all carry zero weight are redrawn; after
    :data:`FUSION_REDRAW_CAP` failed rounds the step is declared divergent.
    """
    idx = _candidate_matrix(locals_, n_out, rng)
    u = rng.uniform(size=n_out)
    weights = np.column_stack([weight_tables[s][idx[:, s]] for s in range(len(locals_))])

    totals = weights.sum(axis=1)
    dead = ~(totals > 0.0)
    rounds = 0
    while dead.any():
        rounds += 1
        if rounds > FUSION_REDRAW_CAP:
            raise FilterDivergenceError(
                f"{int(dead.sum())} fusion draws kept zero selection weight after "
                f"{FUSION_REDRAW_CAP} redraws"
            )
        k = int(dead.sum())
        redraw = np.column_stack([rng.integers(0, len(loc.cloud), size=k) for loc in locals_])
        idx[dead] = redraw
        u[dead] = rng.uniform(size=k)
        weights[dead] = np.column_stack(
            [weight_tables[s][redraw[:, s]] for s in range(len(locals_))]
        )
        totals = weights.sum(axis=1)
        dead = ~(totals > 0.0)

    cum = np.cumsum(weights, axis=1)
    choice = (cum <= (u * totals)[:, None]).sum(axis=1)
    choice = np.minimum(choice, len(locals_) - 1)

    states = np.empty((n_out, 4))
    for s, loc in enumerate(locals_):
        take = choice == s
        states[take] = loc.cloud.states[idx[take, s]]
    return ParticleCloud(states, np.full(n_out, 1.0 / n_out))


def fuse_pcr5(
    locals_: list[LocalPosterior], n_out: int, rng: np.random.Generator
) -> ParticleCloud:
    """Conflict-redistribution fusion: weight = own-posterior density.

    The posterior density of a candidate is only available through its
    particles, so it is estimated as KDE over the sensor's predicted cloud
    times the recorded measurement likelihood (an unnormalized posterior).
    """
    tables = [
        kde_densities(loc.predicted, loc.cloud.states) * loc.likelihoods for loc in locals_
    ]
    return _select_by_weight(locals_, tables, n_out, rng)


def fuse_whitened(
    locals_: list[LocalPosterior], n_out: int, rng: np.random.Generator
) -> ParticleCloud:
    """Whitened fusion: weight = posterior-to-prediction ratio.

    The ratio equals the measurement likelihood divided by the sensor's
    evidence, so a sensor is judged by how much its measurement sharpens
    its own prediction, not by the absolute likelihood scale; with
    constant likelihoods every weight is exactly one and the fused cloud
    reduces to the mixture of the local predictions.
    """
    tables = [loc.likelihoods / loc.evidence for loc in locals_]
    return _select_by_weight(locals_, tables, n_out, rng)


def fuse_mean(
    locals_: list[LocalPosterior], n_out: int, rng: np.random.Generator
) -> ParticleCloud:
    """Equal-weight mixture: each output particle comes from a random sensor."""
    idx = _candidate_matrix(locals_, n_out, rng)
    choice = rng.integers(0, len(locals_), size=n_out)
    states = np.empty((n_out, 4))
    for s, loc in enumerate(locals_):
        take = choice == s
        states[take] = loc.cloud.states[idx[take, s]]
    return ParticleCloud(states, np.full(n_out, 1.0 / n_out))


def fuse(
    rule: FusionRule,
    locals_: list[LocalPosterior],
    n_out: int,
    rng: np.random.Generator,
) -> ParticleCloud:
    """Dispatch to the configured fusion rule."""
    if rule is FusionRule.BAYES:
        return fuse_bayes(locals_, rng, n_out)
    if rule is FusionRule.PCR5:
        return fuse_pcr5(locals_, n_out, rng)
    if rule is FusionRule.WHITENED:
        return fuse_whitened(locals_, n_out, rng)
    return fuse_mean(locals_, n_out, rng)


def feedback(fused: ParticleCloud, locals_: list[LocalPosterior]) -> list[ParticleCloud]:
    """Next-step priors: one independent copy of the fused cloud per sensor."""
    if not fused.is_normalized:
        raise ValueError("fused cloud must be normalized before feedback")
    return [fused.copy() for _ in locals_]
