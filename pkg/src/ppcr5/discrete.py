"""Conflict-redistributing fusion of discrete belief assignments.

A belief assignment distributes unit mass over the non-empty subsets of a
small finite frame.  The conjunctive consensus multiplies masses onto set
intersections; whatever lands on the empty set is *conflict*, and the
PCR5 rule sends each partial conflict back to the two subsets that caused
it, proportionally to their own masses.  When both assignments are
ordinary probability vectors (singleton focal elements only) the rule
collapses to a closed form over atoms, implemented separately as
:func:`discrete_p_pcr5`.

Subsets are encoded as bitmasks over the ordered element list, which
keeps the set algebra exact for frames of up to 8 elements.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping

import numpy as np

MASS_TOL = 1e-12


class FrameMismatchError(ValueError):
    """Assignments over different frames cannot be fused."""


@dataclass(frozen=True)
class FiniteFrame:
    """Ordered universe of mutually exclusive atomic events."""

    elements: tuple[str, ...]

    def __post_init__(self) -> None:
        if isinstance(self.elements, str) or not isinstance(self.elements, tuple):
            object.__setattr__(self, "elements", tuple(self.elements))
        if len(self.elements) < 1:
            raise ValueError("frame needs at least one element")
        if len(set(self.elements)) != len(self.elements):
            raise ValueError("frame elements must be unique")
        if len(self.elements) > 8:
            raise ValueError("bitmask subset encoding supports at most 8 elements")

    @property
    def size(self) -> int:
        return len(self.elements)

    @property
    def full_mask(self) -> int:
        return (1 << self.size) - 1

    def mask_of(self, labels: str | Iterable[str]) -> int:
        """Bitmask of the subset holding ``labels`` (a label or an iterable)."""
        if isinstance(labels, str):
            labels = (labels,)
        mask = 0
        for lab in labels:
            try:
                mask |= 1 << self.elements.index(lab)
            except ValueError:
                raise KeyError(f"label {lab!r} not in frame {self.elements}") from None
        return mask

    def labels_of(self, mask: int) -> tuple[str, ...]:
        return tuple(e for i, e in enumerate(self.elements) if mask >> i & 1)


class DiscreteBBA:
    """Mass assignment over non-empty subsets of a finite frame.

    ``masses`` maps subset bitmasks to non-negative masses.  The empty set
    never appears as a key; zero-mass entries are dropped so the remaining
    keys are exactly the focal elements.  The total must equal
    ``expected_total`` (1 for a proper assignment, less for the raw
    conjunctive consensus whose conflict share is reported separately).
    """

    __slots__ = ("frame", "masses")

    def __init__(
        self,
        frame: FiniteFrame,
        masses: Mapping[int, float],
        *,
        expected_total: float = 1.0,
        tol: float = MASS_TOL,
    ) -> None:
        cleaned: dict[int, float] = {}
        for mask, value in masses.items():
            mask = int(mask)
            value = float(value)
            if mask == 0:
                raise ValueError("empty set cannot carry mass")
            if not 0 <= mask <= frame.full_mask:
                raise ValueError(f"subset mask {mask} outside frame of size {frame.size}")
            if not np.isfinite(value) or value < 0:
                raise ValueError(f"mass for subset {frame.labels_of(mask)} must be finite and >= 0")
            if value > 0.0:
                cleaned[mask] = cleaned.get(mask, 0.0) + value
        total = sum(cleaned.values())
        if abs(total - expected_total) > tol:
            raise ValueError(f"masses sum to {total!r}, expected {expected_total!r} (tol {tol:g})")
        self.frame = frame
        self.masses = cleaned

    @classmethod
    def from_labels(
        cls,
        frame: FiniteFrame,
        assignment: Mapping[str | tuple[str, ...], float],
        **kwargs,
    ) -> "DiscreteBBA":
        return cls(frame, {frame.mask_of(k): v for k, v in assignment.items()}, **kwargs)

    def mass(self, subset: int | str | Iterable[str]) -> float:
        mask = subset if isinstance(subset, int) else self.frame.mask_of(subset)
        return self.masses.get(mask, 0.0)

    def total(self) -> float:
        return sum(self.masses.values())

    def as_dict(self) -> dict[tuple[str, ...], float]:
        return {self.frame.labels_of(m): v for m, v in sorted(self.masses.items())}

    def __repr__(self) -> str:
        body = ", ".join(f"{'|'.join(k)}: {v:.6g}" for k, v in self.as_dict().items())
        return f"DiscreteBBA({{{body}}})"


class DiscreteProbability:
    """Probability vector over the atoms of a finite frame."""

    __slots__ = ("frame", "probs")

    def __init__(self, frame: FiniteFrame, probs, *, tol: float = MASS_TOL) -> None:
        vec = np.asarray(probs, dtype=float)
        if vec.shape != (frame.size,):
            raise ValueError(f"need {frame.size} atom probabilities, got shape {vec.shape}")
        if not np.all(np.isfinite(vec)) or np.any(vec < 0):
            raise ValueError("probabilities must be finite and >= 0")
        if abs(vec.sum() - 1.0) > tol:
            raise ValueError(f"probabilities sum to {vec.sum()!r}, expected 1")
        self.frame = frame
        self.probs = vec

    def prob(self, label: str) -> float:
        return float(self.probs[self.frame.elements.index(label)])

    def as_singleton_bba(self, **kwargs) -> DiscreteBBA:
        """The same distribution viewed as a bba with singleton focal elements."""
        return DiscreteBBA(
            self.frame, {1 << i: p for i, p in enumerate(self.probs)}, **kwargs
        )

    def __repr__(self) -> str:
        body = ", ".join(f"{e}: {p:.6g}" for e, p in zip(self.frame.elements, self.probs))
        return f"DiscreteProbability({{{body}}})"


def _require_same_frame(a, b) -> None:
    if a.frame != b.frame:
        raise FrameMismatchError(f"frames differ: {a.frame.elements} vs {b.frame.elements}")


def conjunctive_combine(m1: DiscreteBBA, m2: DiscreteBBA) -> tuple[DiscreteBBA, float]:
    """Conjunctive consensus of two assignments.

    Returns the (generally sub-unit) combined assignment over non-empty
    intersections together with the total mass that fell on the empty set.
    """
    _require_same_frame(m1, m2)
    combined: dict[int, float] = {}
    conflict = 0.0
    for a, ma in m1.masses.items():
        for b, mb in m2.masses.items():
            inter = a & b
            if inter:
                combined[inter] = combined.get(inter, 0.0) + ma * mb
            else:
                conflict += ma * mb
    out = DiscreteBBA(m1.frame, combined, expected_total=1.0 - conflict, tol=1e-9)
    return out, conflict


def discrete_pcr5(m1: DiscreteBBA, m2: DiscreteBBA) -> DiscreteBBA:
    """PCR5 combination of two assignments.

    Starting from the conjunctive consensus, the product mass of every
    conflicting focal pair (X, Y), X ∩ Y = ∅, is split back onto X and Y
    in proportion to their own masses:

        X gains m1(X)^2 m2(Y) / (m1(X) + m2(Y)),
        Y gains m2(Y)^2 m1(X) / (m2(Y) + m1(X)),

    accumulated over both source orderings.  Fractions with a zero
    denominator are discarded (they carry zero conflict anyway).
    """
    _require_same_frame(m1, m2)
    combined, _conflict = conjunctive_combine(m1, m2)
    out = dict(combined.masses)
    for a, ma in m1.masses.items():
        for b, mb in m2.masses.items():
            if a & b:
                continue
            den = ma + mb
            if den <= 0.0:
                continue
            out[a] = out.get(a, 0.0) + ma * ma * mb / den
            out[b] = out.get(b, 0.0) + mb * mb * ma / den
    return DiscreteBBA(m1.frame, out, tol=1e-9)


def discrete_p_pcr5(p1: DiscreteProbability, p2: DiscreteProbability) -> DiscreteProbability:
    """PCR5 restricted to probability vectors over the frame's atoms.

    For every atom X (the sum over Y runs over all atoms, Y = X included,
    which contributes exactly the conjunctive product P1(X) P2(X)):

        P(X) = P1(X) * sum_Y P1(X) P2(Y) / (P1(X) + P2(Y))
             + P2(X) * sum_Y P2(X) P1(Y) / (P2(X) + P1(Y))
    """
    _require_same_frame(p1, p2)
    a = p1.probs[:, None]  # P1(X)
    b = p2.probs[None, :]  # P2(Y)
    with np.errstate(divide="ignore", invalid="ignore"):
        t1 = np.where(a + b > 0.0, a * b / (a + b), 0.0)
    # transposing swaps the roles of the two sources: t1.T[X, Y] = P2(X)P1(Y)/(P2(X)+P1(Y))
    fused = p1.probs * t1.sum(axis=1) + p2.probs * t1.T.sum(axis=1)
    return DiscreteProbability(p1.frame, fused, tol=1e-9)
