"""Observer-free engine: twin synchronized pistons on elastic rods.

Cycle: B1 insert the partition (rod deformation of order 1/K, taken as zero),
B2 push both pistons inward against gas and rods, B3 remove the partition and
let the whole gas expand back while the rods give their energy back.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import mpmath
import numpy as np

from .core import (
    CycleReport,
    EngineConfig,
    Model,
    PartitionOutcome,
    TrialStream,
    sample_partition,
    shannon_entropy,
)
from .engine_a import closed_form_counts

LEDGER_DPS = 40


class GeometryError(ValueError):
    """Compressed compartment does not fit in its half of the box."""


@dataclass(frozen=True)
class RodConfig:
    spring_constant: float

    def __post_init__(self):
        if not self.spring_constant > 0:
            raise ValueError(f"spring_constant must be positive, got {self.spring_constant}")

    def is_stiff(self, config: EngineConfig, factor: float = 100.0) -> bool:
        """True when K >> N k_BT / L^2, i.e. rod deformations are small against L."""
        scale = config.n_molecules * config.thermal_energy / config.box_length**2
        return self.spring_constant >= factor * scale


@dataclass(frozen=True)
class ModelBLedger:
    outcome: PartitionOutcome
    compression_lengths: tuple[float, float]
    work_compress_gas: tuple[float, float]
    work_compress_rods: tuple[float, float]
    work_expand_gas: float
    work_recovered_rods: float
    net_work: float

    def to_report(self) -> CycleReport:
        steps = [
            ("B1 insert partition (rod deformation, O(1/K))", 0.0),
            ("B2 compress gas right", -self.work_compress_gas[0]),
            ("B2 compress gas left", -self.work_compress_gas[1]),
            ("B2 load rod right", -self.work_compress_rods[0]),
            ("B2 load rod left", -self.work_compress_rods[1]),
            ("B3 remove partition (rod deformation, O(1/K))", 0.0),
            ("B3 expand gas", self.work_expand_gas),
            ("B3 unload rods", self.work_recovered_rods),
        ]
        return CycleReport.from_steps(Model.B, self.outcome, steps)

    def as_dict(self) -> dict:
        return {
            "model": "B",
            "n_right": self.outcome.n_right,
            "n_left": self.outcome.n_left,
            "ell_right": self.compression_lengths[0],
            "ell_left": self.compression_lengths[1],
            "work_compress_gas_right": self.work_compress_gas[0],
            "work_compress_gas_left": self.work_compress_gas[1],
            "work_compress_rod_right": self.work_compress_rods[0],
            "work_compress_rod_left": self.work_compress_rods[1],
            "work_expand_gas": self.work_expand_gas,
            "work_recovered_rods": self.work_recovered_rods,
            "net_work": self.net_work,
        }


def equilibrium_compression_lengths(
    config: EngineConfig, rods: RodConfig, outcome: PartitionOutcome
) -> tuple[float, float]:
    """Rod lengths where K l = N_side k_BT / l, i.e. l = sqrt(N_side k_BT / K)."""
    outcome.check(config)
    k = rods.spring_constant
    kt = config.thermal_energy
    return (math.sqrt(outcome.n_right * kt / k), math.sqrt(outcome.n_left * kt / k))


def run_cycle_b(config: EngineConfig, rods: RodConfig, outcome: PartitionOutcome) -> ModelBLedger:
    """Term-by-term B1-B3 energy ledger.

    Line items are large (order N ln(L/l)) and nearly cancel, so they are
    accumulated with ``LEDGER_DPS`` digits and only rounded at the end.
    """
    outcome.check(config)
    half = config.box_length / 2
    with mpmath.workdps(LEDGER_DPS):
        kt = mpmath.mpf(config.thermal_energy)
        big_l = mpmath.mpf(config.box_length)
        k = mpmath.mpf(rods.spring_constant)
        counts = (outcome.n_right, outcome.n_left)
        lengths = [mpmath.sqrt(n * kt / k) for n in counts]
        for ell in lengths:
            if ell >= half:
                raise GeometryError(
                    f"compression length {float(ell):.6g} >= L/2; spring constant too small"
                )
        gas = [n * kt * mpmath.log(big_l / (2 * ell)) if n else mpmath.mpf(0)
               for n, ell in zip(counts, lengths)]
        rod = [k * ell**2 / 2 for ell in lengths]
        ell_total = lengths[0] + lengths[1]
        expand = config.n_molecules * kt * mpmath.log(big_l / ell_total)
        recovered = rod[0] + rod[1]
        net = expand + recovered - gas[0] - gas[1] - rod[0] - rod[1]
        # anything below the working precision of the largest line item is rounding noise
        if abs(net) <= abs(expand) * mpmath.mpf(10) ** (5 - LEDGER_DPS):
            net = mpmath.mpf(0)
        return ModelBLedger(
            outcome=outcome,
            compression_lengths=(float(lengths[0]), float(lengths[1])),
            work_compress_gas=(float(gas[0]), float(gas[1])),
            work_compress_rods=(float(rod[0]), float(rod[1])),
            work_expand_gas=float(expand),
            work_recovered_rods=float(recovered),
            net_work=float(net),
        )


def closed_form_b_counts(n_right, n_left):
    """Vectorized model-B work in k_BT.

    N [ln 2 - ln(sqrt n_R + sqrt n_L) - I/2] rearranged as
    W_A/2 - (N/2) log1p(-d^2 / (2 (1 + sqrt(1 - d^2)))), d = n_R - n_L.
    """
    n_right = np.asarray(n_right, dtype=float)
    n_left = np.asarray(n_left, dtype=float)
    n = n_right + n_left
    d = (n_right - n_left) / n
    d2 = d * d
    w = 0.5 * closed_form_counts(n_right, n_left) - 0.5 * n * np.log1p(
        -d2 / (2.0 * (1.0 + np.sqrt(1.0 - d2)))
    )
    return np.maximum(w, 0.0)


def work_closed_form_b(config: EngineConfig, outcome: PartitionOutcome) -> float:
    outcome.check(config)
    return config.thermal_energy * float(closed_form_b_counts(outcome.n_right, outcome.n_left))


def work_closed_form_b_direct(config: EngineConfig, outcome: PartitionOutcome) -> float:
    """Textbook evaluation of the closed form, kept for cross-checks."""
    outcome.check(config)
    p, q = outcome.frac_right, outcome.frac_left
    bracket = math.log(2) - math.log(math.sqrt(p) + math.sqrt(q)) - 0.5 * shannon_entropy([p, q])
    return config.n_molecules * config.thermal_energy * bracket


def run_sampled_cycle_b(config: EngineConfig, rods: RodConfig, stream: TrialStream) -> ModelBLedger:
    return run_cycle_b(config, rods, sample_partition(config, stream))
