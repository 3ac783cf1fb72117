"""Feedback engine: measure the majority side, then let the partition slide.

The partition starts at the midpoint. ``x`` is its displacement toward the
minority side; it stops at ``max_shift`` where the two pressures balance.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate
from scipy.special import xlog1py

from .core import (
    CycleReport,
    EngineConfig,
    Model,
    PartitionOutcome,
    TrialStream,
    sample_partition,
    shannon_entropy,
)


class QuadratureError(RuntimeError):
    pass


@dataclass(frozen=True)
class ModelAResult:
    outcome: PartitionOutcome
    max_shift: float
    work_closed_form: float
    work_quadrature: float


def max_shift(config: EngineConfig, outcome: PartitionOutcome) -> float:
    """Stopping point L |n_R - n_L| / 2 where the net force vanishes."""
    return config.box_length * abs(outcome.imbalance) / 2


def net_force(config: EngineConfig, outcome: PartitionOutcome, x: float) -> float:
    """Net force on the partition, positive when pushing toward the minority side.

    Equal to N k_BT (n_maj / (L/2 + x) - n_min / (L/2 - x)), evaluated in the
    combined form N k_BT (ell - x) / (L^2/4 - x^2) so it is exactly zero at
    the stopping point ``ell``.
    """
    outcome.check(config)
    half = config.box_length / 2
    if not -half < x < half:
        raise ValueError(f"partition position x={x} must lie strictly inside (-L/2, L/2)")
    ell = max_shift(config, outcome)
    n_kt = config.n_molecules * config.thermal_energy
    return n_kt * (ell - x) / ((half - x) * (half + x))


def work_closed_form(config: EngineConfig, outcome: PartitionOutcome) -> float:
    """Extracted work N k_BT (ln 2 - I(n_R, n_L)).

    Computed as the relative entropy N_R ln(2 n_R) + N_L ln(2 n_L) with
    ``log1p`` of the exact integer imbalance, which avoids the cancellation
    between ln 2 and I near a balanced split.
    """
    outcome.check(config)
    return config.thermal_energy * float(closed_form_counts(outcome.n_right, outcome.n_left))


def closed_form_counts(n_right, n_left):
    """Vectorized model-A work in k_BT for arrays of counts."""
    n_right = np.asarray(n_right, dtype=float)
    n_left = np.asarray(n_left, dtype=float)
    d = (n_right - n_left) / (n_right + n_left)
    w = xlog1py(n_right, d) + xlog1py(n_left, -d)
    return np.maximum(w, 0.0)


def work_from_entropy(config: EngineConfig, outcome: PartitionOutcome) -> float:
    """Direct textbook evaluation N k_BT (ln 2 - I); loses digits near ties."""
    outcome.check(config)
    i = shannon_entropy([outcome.frac_right, outcome.frac_left])
    return config.n_molecules * config.thermal_energy * (math.log(2) - i)


def work_by_quadrature(config: EngineConfig, outcome: PartitionOutcome) -> float:
    """Integrate ``net_force`` from the midpoint to the stopping point."""
    outcome.check(config)
    ell = max_shift(config, outcome)
    if ell == 0.0:
        return 0.0
    tol = 1e-10 * config.n_molecules * config.thermal_energy
    res = integrate.quad(
        lambda x: net_force(config, outcome, x),
        0.0,
        ell,
        epsabs=tol,
        epsrel=1e-13,
        limit=200,
        full_output=True,
    )
    # a 4th element is quadpack's warning message
    if len(res) > 3 and res[1] > tol:
        raise QuadratureError(f"quadrature did not converge: {res[3]}")
    return res[0]


def evaluate(config: EngineConfig, outcome: PartitionOutcome) -> ModelAResult:
    return ModelAResult(
        outcome=outcome,
        max_shift=max_shift(config, outcome),
        work_closed_form=work_closed_form(config, outcome),
        work_quadrature=work_by_quadrature(config, outcome),
    )


def cycle_report(config: EngineConfig, outcome: PartitionOutcome) -> CycleReport:
    """Ledger for a given outcome; insertion and readout are idealized as free."""
    outcome.check(config)
    side = outcome.majority
    work = work_closed_form(config, outcome) if side != "tie" else 0.0
    steps = [
        ("A1 insert partition", 0.0),
        ("A2 measure majority side", 0.0),
        ("A3 isothermal expansion", work),
    ]
    return CycleReport.from_steps(Model.A, outcome, steps, measurement=side)


def run_cycle_a(config: EngineConfig, stream: TrialStream) -> CycleReport:
    return cycle_report(config, sample_partition(config, stream))
