"""Photon-number statistics of the three source families.

* ``wcs``: phase-randomized weak coherent states (Poisson).
* ``hsps-table``: tabulated statistics, e.g. of a heralded single-photon source.
* ``tlss``: light reflected off a two-level emitter in a waveguide.

Tabular source files are plain text with one ``n probability`` pair per line.
Blank lines and anything after ``#`` are ignored.  Indices must be distinct
nonnegative integers; missing indices below the largest one are zero.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import NamedTuple

import numpy as np
from scipy import stats

from .distribution import PhotonNumberDistribution, mixture  # noqa: F401  (re-export)
from .errors import DuplicateIndex, NegativeProbability, NotNormalized, TailTooHeavy
from .scattering import EmitterSpec, PulseSpec, count_channel_distributions

PKGDATA = Path(__file__).resolve().parent / "data"

DEFAULT_N_CUT = 10
TABLE_NORM_TOL = 1e-6
STATS_TAIL_TOL = 1e-4

ROLES = ("signal", "weak-decoy", "vacuum-decoy")
KINDS = ("wcs", "hsps-table", "tlss", "vacuum")


def poisson_distribution(mu: float, n_cut: int = DEFAULT_N_CUT) -> PhotonNumberDistribution:
    if mu < 0:
        raise ValueError("mu must be nonnegative")
    if n_cut < 1:
        raise ValueError("n_cut must be >= 1")
    if mu == 0:
        return PhotonNumberDistribution.point_mass(0, "wcs(mu=0)").truncated(n_cut)
    p = stats.poisson.pmf(np.arange(n_cut + 1), mu)
    tail = float(stats.poisson.sf(n_cut, mu))
    # sf and pmf are computed independently; reconcile rounding into the tail
    tail = max(tail, 0.0) if abs(p.sum() + tail - 1) < 1e-12 else max(1 - p.sum(), 0.0)
    return PhotonNumberDistribution(p, tail, f"wcs(mu={mu:g})")


@lru_cache(maxsize=256)
def _counting(emitter: EmitterSpec, pulse: PulseSpec):
    return count_channel_distributions(emitter, pulse)


def tlss_distribution(emitter: EmitterSpec, pulse: PulseSpec,
                      n_cut: int = DEFAULT_N_CUT) -> PhotonNumberDistribution:
    """Reflected-field statistics, re-truncated at ``n_cut``.  Cached per (emitter, pulse)."""
    return _counting(emitter, pulse).reflected.truncated(n_cut)


def tabular_distribution(rows, label: str = "table") -> PhotonNumberDistribution:
    """Build a distribution from ``(n, p_n)`` pairs or a ``{n: p_n}`` mapping.

    Tables are rejected, never renormalized, when they miss unit sum by more
    than 1e-6; within that slack the deficit becomes the tail mass.
    """
    items = list(rows.items()) if isinstance(rows, dict) else list(rows)
    seen = {}
    for n, p in items:
        n = int(n)
        if n < 0:
            raise ValueError(f"photon number {n} is negative")
        if n in seen:
            raise DuplicateIndex(f"photon number {n} listed twice")
        if p < 0:
            raise NegativeProbability(f"p_{n} = {p} is negative")
        seen[n] = float(p)
    if not seen:
        raise NotNormalized("empty table")
    total = math.fsum(seen.values())
    if abs(total - 1.0) > TABLE_NORM_TOL:
        raise NotNormalized(f"table sums to {total!r}")
    probs = np.zeros(max(seen) + 1)
    for n, p in seen.items():
        probs[n] = p
    if total > 1.0:
        probs /= total
    return PhotonNumberDistribution(probs, max(0.0, 1.0 - probs.sum()), label)


def table_path(value) -> Path:
    """``pkgdata:<name>`` names a table shipped in ``wgqkd/data``."""
    value = str(value)
    if value.startswith("pkgdata:"):
        return PKGDATA / value[len("pkgdata:"):]
    return Path(value)


def read_table(path) -> PhotonNumberDistribution:
    """Parse a tabular source file (see module docstring for the grammar)."""
    path = table_path(path)
    rows = []
    for lineno, raw in enumerate(path.read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2:
            raise ValueError(f"{path}:{lineno}: expected 'n probability', got {raw!r}")
        try:
            rows.append((int(parts[0]), float(parts[1])))
        except ValueError as exc:
            raise ValueError(f"{path}:{lineno}: {exc}") from None
    return tabular_distribution(rows, label=path.name)


class DistStats(NamedTuple):
    mean: float
    variance: float
    mandel_q: float
    multiphoton_mass: float


def distribution_stats(d: PhotonNumberDistribution) -> DistStats:
    """Moments of the truncated vector.  Refuses when the tail exceeds 1e-4."""
    if d.tail_mass >= STATS_TAIL_TOL:
        raise TailTooHeavy(f"tail mass {d.tail_mass:.3g} too large for moments")
    n = np.arange(len(d.probs))
    w = d.probs / d.probs.sum()
    mean = float(n @ w)
    var = float(((n - mean) ** 2) @ w)
    q = var / mean - 1 if mean > 0 else math.nan
    return DistStats(mean, var, q, d.multiphoton_mass())


def matched_poisson(d: PhotonNumberDistribution, n_cut: int | None = None) -> PhotonNumberDistribution:
    """Poisson distribution with the same mean as ``d``."""
    n_cut = d.n_cut if n_cut is None else n_cut
    return poisson_distribution(d.mean(), max(n_cut, 1))


@dataclass(frozen=True)
class SourceStateSpec:
    """One transmitted state: its role in the protocol and how to build it.

    ``params`` by kind: wcs -> {"mu"}; hsps-table -> {"path"};
    tlss -> {"nbar", "sigma", "purcell"} (Γ = 1); vacuum -> {}.
    """

    role: str
    kind: str
    params: dict = field(default_factory=dict, hash=False)
    label: str = ""

    def __post_init__(self):
        if self.role not in ROLES:
            raise ValueError(f"unknown role {self.role!r}")
        if self.kind not in KINDS:
            raise ValueError(f"unknown kind {self.kind!r}")
        if self.role == "vacuum-decoy" and self.kind != "vacuum":
            raise ValueError("vacuum-decoy must be of kind 'vacuum'")
        if not self.label:
            object.__setattr__(self, "label", self.role)

    def resolve(self, n_cut: int = DEFAULT_N_CUT) -> PhotonNumberDistribution:
        if self.kind == "vacuum":
            return PhotonNumberDistribution.point_mass(0, self.label).truncated(n_cut)
        if self.kind == "wcs":
            return poisson_distribution(float(self.params["mu"]), n_cut).relabel(self.label)
        if self.kind == "hsps-table":
            return read_table(self.params["path"]).truncated(n_cut).relabel(self.label)
        emitter = EmitterSpec.from_purcell(float(self.params.get("purcell", math.inf)))
        pulse = PulseSpec(float(self.params["nbar"]), float(self.params["sigma"]))
        return tlss_distribution(emitter, pulse, n_cut).relabel(self.label)


def tlss_states(sigma: float = 0.5, purcell: float = 20.0, nbar_signal: float = 1.0,
                nbar_decoy: float = 0.02) -> list[SourceStateSpec]:
    """Signal, weak decoy and vacuum for the two-level-emitter source."""
    return [
        SourceStateSpec("signal", "tlss", {"nbar": nbar_signal, "sigma": sigma, "purcell": purcell}),
        SourceStateSpec("weak-decoy", "tlss", {"nbar": nbar_decoy, "sigma": sigma, "purcell": purcell}),
        SourceStateSpec("vacuum-decoy", "vacuum"),
    ]


def wcs_states(mu: float, nu: float) -> list[SourceStateSpec]:
    return [
        SourceStateSpec("signal", "wcs", {"mu": mu}),
        SourceStateSpec("weak-decoy", "wcs", {"mu": nu}),
        SourceStateSpec("vacuum-decoy", "vacuum"),
    ]
