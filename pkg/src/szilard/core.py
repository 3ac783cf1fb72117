"""Shared types, units and random-stream plumbing.

All energies are in units of ``thermal_energy`` (k_BT, default 1.0). The box has
unit cross-section, so pressure and force share units.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np
from scipy import stats

PROB_TOL = 1e-12

_MASK64 = (1 << 64) - 1
_GOLDEN = np.uint64(0x9E3779B97F4A7C15)


class StatisticsError(RuntimeError):
    """A stochastic estimate did not gather enough events to be trusted."""


class Model(str, enum.Enum):
    A = "A"
    B = "B"

    @classmethod
    def parse(cls, tag) -> "Model":
        if isinstance(tag, Model):
            return tag
        try:
            return cls(str(tag).upper())
        except ValueError:
            raise ValueError(f"unsupported model tag {tag!r}; expected 'A' or 'B'") from None


@dataclass(frozen=True)
class EngineConfig:
    n_molecules: int
    box_length: float = 1.0
    thermal_energy: float = 1.0

    def __post_init__(self):
        if int(self.n_molecules) != self.n_molecules or self.n_molecules < 1:
            raise ValueError(f"n_molecules must be a positive integer, got {self.n_molecules}")
        if not self.box_length > 0:
            raise ValueError(f"box_length must be positive, got {self.box_length}")
        if not self.thermal_energy > 0:
            raise ValueError(f"thermal_energy must be positive, got {self.thermal_energy}")
        object.__setattr__(self, "n_molecules", int(self.n_molecules))

    @property
    def pressure(self) -> float:
        """Ideal-gas pressure p0 = N k_BT / L."""
        return self.n_molecules * self.thermal_energy / self.box_length

    def outcome(self, n_right: int) -> "PartitionOutcome":
        """Partition outcome with ``n_right`` molecules right of the midpoint."""
        if not 0 <= n_right <= self.n_molecules:
            raise ValueError(f"n_right={n_right} outside [0, {self.n_molecules}]")
        return PartitionOutcome(int(n_right), self.n_molecules - int(n_right))


@dataclass(frozen=True)
class PartitionOutcome:
    n_right: int
    n_left: int

    def __post_init__(self):
        if self.n_right < 0 or self.n_left < 0:
            raise ValueError("molecule counts must be non-negative")
        if self.n_right + self.n_left == 0:
            raise ValueError("outcome must contain at least one molecule")

    @property
    def n_total(self) -> int:
        return self.n_right + self.n_left

    @property
    def frac_right(self) -> float:
        return self.n_right / self.n_total

    @property
    def frac_left(self) -> float:
        return self.n_left / self.n_total

    @property
    def imbalance(self) -> float:
        """Signed imbalance d = n_R - n_L, computed from exact integer counts."""
        return (self.n_right - self.n_left) / self.n_total

    @property
    def majority(self) -> str:
        if self.n_right > self.n_left:
            return "right"
        if self.n_left > self.n_right:
            return "left"
        return "tie"

    def check(self, config: EngineConfig) -> None:
        if self.n_total != config.n_molecules:
            raise ValueError(
                f"outcome has {self.n_total} molecules, config has {config.n_molecules}"
            )


@dataclass(frozen=True)
class CycleReport:
    """Itemized energy ledger of one engine cycle (works in k_BT, extracted > 0)."""

    model: Model
    outcome: PartitionOutcome
    step_works: tuple[tuple[str, float], ...]
    net_work: float
    measurement: str | None = None

    @classmethod
    def from_steps(cls, model, outcome, steps, measurement=None) -> "CycleReport":
        steps = tuple((str(label), float(w)) for label, w in steps)
        return cls(Model.parse(model), outcome, steps, math.fsum(w for _, w in steps), measurement)

    def as_dict(self) -> dict:
        return {
            "model": self.model.value,
            "n_right": self.outcome.n_right,
            "n_left": self.outcome.n_left,
            "measurement": self.measurement,
            "steps": [{"label": lbl, "work": w} for lbl, w in self.step_works],
            "net_work": self.net_work,
        }


def shannon_entropy(p: Sequence[float]) -> float:
    """Shannon entropy -sum p ln p in nats, with 0 ln 0 = 0."""
    p = np.asarray(p, dtype=float)
    if p.ndim != 1 or p.size == 0:
        raise ValueError("probability vector must be one-dimensional and non-empty")
    if np.any(p < 0) or np.any(p > 1) or not np.all(np.isfinite(p)):
        raise ValueError("probabilities must lie in [0, 1]")
    if abs(math.fsum(p) - 1.0) > PROB_TOL:
        raise ValueError(f"probabilities sum to {math.fsum(p)!r}, not 1")
    nz = p[p > 0]
    h = -math.fsum(nz * np.log(nz))
    # clamp roundoff outside the mathematically admissible range
    return min(max(h, 0.0), math.log(p.size))


# -- counter-based random streams -------------------------------------------


def _splitmix64(z: np.ndarray) -> np.ndarray:
    z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return z ^ (z >> np.uint64(31))


def counter_uniforms(seed: int, trials, lane: int = 0) -> np.ndarray:
    """Uniform doubles in [0, 1) that depend only on (seed, lane, trial index).

    Trial ``t`` gets the ``t``-th output of a splitmix64 sequence keyed by
    ``(seed, lane)``, so any subset of trials can be drawn in any order or on
    any worker with bitwise identical results.
    """
    t = np.atleast_1d(np.asarray(trials, dtype=np.uint64))
    with np.errstate(over="ignore"):
        key = _splitmix64(np.array([seed & _MASK64], dtype=np.uint64))
        key = _splitmix64(key ^ np.uint64(lane & _MASK64))
        z = key + (t + np.uint64(1)) * _GOLDEN
        bits = _splitmix64(z)
    return (bits >> np.uint64(11)).astype(np.float64) * (1.0 / 9007199254740992.0)


@dataclass(frozen=True)
class TrialStream:
    """Random stream for one trial, derived from (master seed, trial index)."""

    seed: int
    trial: int = 0

    def uniform(self, lane: int = 0) -> float:
        return float(counter_uniforms(self.seed, [self.trial], lane)[0])

    def generator(self) -> np.random.Generator:
        """Independent numpy Generator for simulations needing many draws."""
        return trial_generator(self.seed, self.trial)


def trial_generator(seed: int, trial: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed & _MASK64, int(trial)]))


@lru_cache(maxsize=8)
def _binomial_half_cdf(n: int) -> np.ndarray:
    cdf = np.cumsum(stats.binom.pmf(np.arange(n + 1), n, 0.5))
    cdf[-1] = 1.0
    return cdf


def sample_right_counts(n: int, seed: int, trials) -> np.ndarray:
    """Vectorized N_R ~ Binomial(n, 1/2) by inversion of counter uniforms."""
    u = counter_uniforms(seed, trials)
    return np.searchsorted(_binomial_half_cdf(int(n)), u, side="right").astype(np.int64)


def sample_partition(config: EngineConfig, stream: TrialStream) -> PartitionOutcome:
    """Drop every molecule independently left or right of the midpoint."""
    n_right = int(sample_right_counts(config.n_molecules, stream.seed, [stream.trial])[0])
    return config.outcome(n_right)
