"""Monte-Carlo sampling of fused densities.

The conflict-redistributing rule has a three-step sampling form: draw one
candidate from each source together with the source's own density value
at its draw, then keep one candidate with probability proportional to
those density values.  This module implements that selection kernel, its
generalizations (arbitrary non-negative weights, and the equal-weight
mixture used by mean fusion), and a batch sampler.

Sample sources are callables ``source(rng, size) -> (points, densities)``
where ``points`` is a float array of shape ``(size,)`` or ``(size, d)``
and ``densities`` holds the source's own density evaluated at each point.
"""

from __future__ import annotations

from typing import Callable, NamedTuple, Sequence

import numpy as np

from .densities import Gaussian1D


class ZeroWeightError(ValueError):
    """Every candidate weight vanished; the caller must redraw or abort."""


class EvaluatedSample(NamedTuple):
    """A drawn point paired with its own source's density at that point."""

    point: float | np.ndarray
    density: float


def pcr5_select(s1: EvaluatedSample, s2: EvaluatedSample, u: float) -> EvaluatedSample:
    """Keep one of two evaluated samples.

    Returns ``s1`` iff ``u`` < d1 / (d1 + d2); densities must not both be
    zero.
    """
    total = s1.density + s2.density
    if not total > 0.0:
        raise ZeroWeightError("both candidate densities are zero; redraw the pair")
    return s1 if u < s1.density / total else s2


def weighted_select(candidates: Sequence[tuple], u: float):
    """Pick candidate i with probability weight_i / sum(weights).

    ``candidates`` is a sequence of (point, weight) pairs with weights >= 0
    and positive total; ``u`` is a single uniform draw in [0, 1].
    """
    weights = np.asarray([w for _, w in candidates], dtype=float)
    if np.any(weights < 0) or not np.all(np.isfinite(weights)):
        raise ValueError("weights must be finite and >= 0")
    total = weights.sum()
    if not total > 0.0:
        raise ZeroWeightError("all candidate weights are zero")
    cum = np.cumsum(weights)
    idx = int(np.searchsorted(cum, u * total, side="right"))
    return candidates[min(idx, len(candidates) - 1)][0]


def mean_fuse_select(candidates: Sequence, u: float):
    """Uniform choice among candidates: one draw from the equal-weight mixture."""
    if len(candidates) == 0:
        raise ValueError("need at least one candidate")
    return candidates[min(int(u * len(candidates)), len(candidates) - 1)]


def gaussian_source(g: Gaussian1D) -> Callable:
    """Batch sample source for a 1-D Gaussian, self-evaluating its density."""

    def draw(rng: np.random.Generator, size: int):
        pts = rng.normal(g.mean, g.sigma, size)
        return pts, g.pdf(pts)

    return draw


def pcr5_sample_batch(
    draw1: Callable,
    draw2: Callable,
    n: int,
    rng: np.random.Generator,
    max_redraws: int = 100,
) -> np.ndarray:
    """Draw ``n`` independent samples of the fused density.

    Per sample: one candidate from each source, then the selection kernel
    of :func:`pcr5_select`.  Pairs whose densities are both zero are
    redrawn, at most ``max_redraws`` times, after which the batch aborts.
    Deterministic given the generator state.
    """
    if n < 1:
        raise ValueError("need n >= 1 samples")
    y1, d1 = draw1(rng, n)
    y2, d2 = draw2(rng, n)
    y1 = np.asarray(y1, dtype=float)
    y2 = np.asarray(y2, dtype=float)
    d1 = np.asarray(d1, dtype=float)
    d2 = np.asarray(d2, dtype=float)
    u = rng.uniform(size=n)

    total = d1 + d2
    dead = ~(total > 0.0)
    rounds = 0
    while dead.any():
        rounds += 1
        if rounds > max_redraws:
            raise ZeroWeightError(
                f"{int(dead.sum())} of {n} candidate pairs still had zero total density "
                f"after {max_redraws} redraws; sources may share no support"
            )
        k = int(dead.sum())
        ry1, rd1 = draw1(rng, k)
        ry2, rd2 = draw2(rng, k)
        y1[dead], d1[dead] = ry1, rd1
        y2[dead], d2[dead] = ry2, rd2
        u[dead] = rng.uniform(size=k)
        total = d1 + d2
        dead = ~(total > 0.0)

    take_first = u * total < d1
    if y1.ndim == 1:
        return np.where(take_first, y1, y2)
    return np.where(take_first[:, None], y1, y2)
