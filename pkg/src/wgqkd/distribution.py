"""Truncated photon-number distributions with explicit tail mass."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

NORM_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class PhotonNumberDistribution:
    """Probabilities p_0..p_N plus the mass assigned to n > N.

    Instances are immutable; ``probs`` is stored as a read-only float array.
    """

    probs: np.ndarray
    tail_mass: float = 0.0
    label: str = ""

    def __post_init__(self):
        p = np.array(self.probs, dtype=float).ravel()
        if p.size == 0:
            raise ValueError("distribution needs at least p_0")
        if np.any(p < 0) or self.tail_mass < 0:
            raise ValueError("probabilities must be nonnegative")
        total = p.sum() + self.tail_mass
        if abs(total - 1.0) > NORM_TOL:
            raise ValueError(f"probabilities sum to {total!r}, not 1")
        p.setflags(write=False)
        object.__setattr__(self, "probs", p)
        object.__setattr__(self, "tail_mass", float(self.tail_mass))

    @classmethod
    def from_raw(cls, probs, label="", floor=-1e-12):
        """Build from numerically computed probabilities.

        Values in ``[floor, 0)`` are rounding noise and are zeroed; the tail is
        whatever mass is left over.
        """
        p = np.asarray(probs, dtype=float).copy()
        if np.any(p < floor):
            raise ValueError(f"probability {p.min()!r} is negative beyond rounding")
        p[p < 0] = 0.0
        tail = 1.0 - p.sum()
        if tail < 0:
            if tail < -NORM_TOL:
                raise ValueError(f"probabilities sum to {1 - tail!r} > 1")
            p /= p.sum()
            tail = 0.0
        return cls(p, tail, label)

    @classmethod
    def point_mass(cls, n=0, label=""):
        p = np.zeros(n + 1)
        p[n] = 1.0
        return cls(p, 0.0, label)

    @property
    def n_cut(self) -> int:
        return len(self.probs) - 1

    def __len__(self):
        return len(self.probs)

    def __getitem__(self, n):
        return float(self.probs[n]) if n < len(self.probs) else 0.0

    def __eq__(self, other):
        if not isinstance(other, PhotonNumberDistribution):
            return NotImplemented
        return (np.array_equal(self.probs, other.probs)
                and self.tail_mass == other.tail_mass)

    def __hash__(self):
        return hash((self.probs.tobytes(), self.tail_mass))

    def truncated(self, n_cut: int) -> "PhotonNumberDistribution":
        """Re-truncate at ``n_cut``, moving dropped entries into the tail (or
        zero-padding when ``n_cut`` exceeds the current support)."""
        if n_cut < 0:
            raise ValueError("n_cut must be >= 0")
        if n_cut + 1 >= len(self.probs):
            p = np.zeros(n_cut + 1)
            p[: len(self.probs)] = self.probs
            return PhotonNumberDistribution(p, self.tail_mass, self.label)
        p = self.probs[: n_cut + 1].copy()
        tail = self.tail_mass + float(self.probs[n_cut + 1:].sum())
        return PhotonNumberDistribution(p, tail, self.label)

    def mean(self) -> float:
        """Mean of the truncated vector (tail excluded)."""
        return float(np.arange(len(self.probs)) @ self.probs)

    def multiphoton_mass(self) -> float:
        return float(self.probs[2:].sum())

    def relabel(self, label: str) -> "PhotonNumberDistribution":
        return PhotonNumberDistribution(self.probs, self.tail_mass, label)


def mixture(weight: float, d1: PhotonNumberDistribution,
            d2: PhotonNumberDistribution) -> PhotonNumberDistribution:
    """Convex combination ``weight*d1 + (1-weight)*d2``."""
    if not 0.0 <= weight <= 1.0:
        raise ValueError("mixture weight must lie in [0, 1]")
    n = max(len(d1), len(d2))
    p = weight * d1.truncated(n - 1).probs + (1 - weight) * d2.truncated(n - 1).probs
    tail = weight * d1.tail_mass + (1 - weight) * d2.tail_mass
    return PhotonNumberDistribution(p, tail, f"mix({d1.label},{d2.label})")
