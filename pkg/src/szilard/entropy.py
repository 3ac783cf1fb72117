"""Entropy of a phase space split into ergodic components by physical barriers.

Only entropy *differences* are meaningful here: ``base_entropy`` is the
unpartitioned S = ln|X| up to an additive, unit-dependent constant.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import PROB_TOL, shannon_entropy


@dataclass(frozen=True)
class Decomposition:
    fractions: tuple[float, ...]
    base_entropy: float = 0.0

    def __post_init__(self):
        lam = np.asarray(self.fractions, dtype=float)
        if lam.ndim != 1 or lam.size == 0:
            raise ValueError("fractions must be a non-empty vector")
        if np.any(lam < 0) or not np.all(np.isfinite(lam)):
            raise ValueError("fractions must be non-negative")
        if abs(math.fsum(lam) - 1.0) > PROB_TOL:
            raise ValueError(f"fractions sum to {math.fsum(lam)!r}, not 1")
        object.__setattr__(self, "fractions", tuple(float(v) for v in lam))

    @classmethod
    def from_volumes(cls, volumes, base_entropy: float | None = None) -> "Decomposition":
        """Fractions |X_j| / |X| from component volumes; S defaults to ln sum |X_j|."""
        v = np.asarray(volumes, dtype=float)
        total = math.fsum(v)
        if base_entropy is None:
            base_entropy = math.log(total)
        return cls(tuple(v / total), base_entropy)

    @property
    def n_components(self) -> int:
        return len(self.fractions)

    @property
    def information(self) -> float:
        """I(lambda) in nats."""
        return shannon_entropy(self.fractions)

    @property
    def information_bits(self) -> float:
        return nats_to_bits(self.information)

    def component_entropies(self) -> np.ndarray:
        """S_j = S + ln lambda_j (-inf for empty components)."""
        with np.errstate(divide="ignore"):
            return self.base_entropy + np.log(np.asarray(self.fractions))

    def refine(self, index: int, share: float) -> "Decomposition":
        """Split component ``index`` into two parts in ratio share : (1 - share)."""
        if not 0.0 <= share <= 1.0:
            raise ValueError("share must lie in [0, 1]")
        lam = list(self.fractions)
        part = lam.pop(index)
        lam[index:index] = [part * share, part - part * share]
        return Decomposition(tuple(lam), self.base_entropy)


def nats_to_bits(x: float) -> float:
    return x / math.log(2)


def partitioned_entropy(d: Decomposition) -> float:
    """S' = sum lambda_j S_j = S - I(lambda), in units of k_B."""
    return d.base_entropy - d.information


def component_average_entropy(d: Decomposition) -> float:
    """S' evaluated literally as the lambda-weighted mean of component entropies."""
    lam = np.asarray(d.fractions)
    nz = lam > 0
    return math.fsum(lam[nz] * d.component_entropies()[nz])


def max_extractable_work(d: Decomposition, thermal_energy: float = 1.0) -> float:
    """Free-energy gain k_BT I(lambda) of the partitioned system."""
    return thermal_energy * d.information


def capacity_bits(n_components: int) -> float:
    """Information capacity log2 n of a carrier with n ergodic components."""
    if n_components < 1:
        raise ValueError("need at least one component")
    return math.log2(n_components)
