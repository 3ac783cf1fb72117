"""Exact and Monte Carlo averages of extracted work over partition outcomes."""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from .core import EngineConfig, Model, sample_right_counts
from .engine_a import closed_form_counts
from .engine_b import closed_form_b_counts

# fixed so the chunking (and therefore every sum) never depends on worker count
CHUNK_TRIALS = 1 << 16
MAX_EXACT_N = 10**7


@dataclass(frozen=True)
class EnsembleSpec:
    config: EngineConfig
    model: Model
    trials: int
    master_seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "model", Model.parse(self.model))
        if int(self.trials) != self.trials or self.trials < 1:
            raise ValueError(f"trials must be a positive integer, got {self.trials}")


@dataclass(frozen=True)
class EnsembleSummary:
    mean_work: float
    std_error: float
    exact_mean: float | None
    n_molecules: int
    trials: int = 0

    @property
    def z_score(self) -> float | None:
        if self.exact_mean is None:
            return None
        if self.std_error == 0:
            return 0.0 if self.mean_work == self.exact_mean else math.inf
        return (self.mean_work - self.exact_mean) / self.std_error

    @property
    def consistent(self) -> bool | None:
        """Mean within 5 standard errors of the exact value (None if unknown)."""
        z = self.z_score
        return None if z is None else abs(z) <= 5.0


def work_for_counts(model, n_right, n_left):
    """Closed-form work in k_BT for arrays of counts."""
    model = Model.parse(model)
    if model is Model.A:
        return closed_form_counts(n_right, n_left)
    return closed_form_b_counts(n_right, n_left)


def binomial_half_weights(n: int) -> np.ndarray:
    """P(N_R = k) for k = 0..n under Binomial(n, 1/2), built in log space."""
    k = np.arange(n + 1)
    logw = gammaln(n + 1) - gammaln(k + 1) - gammaln(n - k + 1) - n * math.log(2)
    return np.exp(logw)


def _exact_expectation(n: int, values) -> float:
    w = binomial_half_weights(n)
    total = math.fsum(w * values)
    return total / math.fsum(w)


def exact_mean_work(config: EngineConfig, model) -> float:
    """Exact E[W] over N_R ~ Binomial(N, 1/2), in units of k_BT times thermal_energy."""
    model = Model.parse(model)
    n = config.n_molecules
    if n > MAX_EXACT_N:
        raise ValueError(f"N={n} too large for the exact sum (limit {MAX_EXACT_N})")
    k = np.arange(n + 1)
    return config.thermal_energy * _exact_expectation(n, work_for_counts(model, k, n - k))


def exact_mean_abs_imbalance(n: int) -> float:
    """E|n_R - n_L| for N_R ~ Binomial(n, 1/2)."""
    k = np.arange(n + 1)
    return _exact_expectation(n, np.abs(2 * k - n) / n)


def sampled_mean_abs_imbalance(n: int, trials: int, seed: int = 0) -> tuple[float, float]:
    """Monte Carlo E|n_R - n_L| with its standard error."""
    nr = sample_right_counts(n, seed, np.arange(trials, dtype=np.uint64))
    x = np.abs(2 * nr - n) / n
    return _mean_and_error(x)


def loglog_slope(xs, ys) -> float:
    slope, _ = np.polyfit(np.log(np.asarray(xs, float)), np.log(np.asarray(ys, float)), 1)
    return float(slope)


def _mean_and_error(x: np.ndarray) -> tuple[float, float]:
    # fsum is exactly rounded, so the result is independent of how x was assembled
    m = len(x)
    mean = math.fsum(x) / m
    if m < 2:
        return mean, 0.0
    var = math.fsum((x - mean) ** 2) / (m - 1)
    return mean, math.sqrt(var / m)


def trial_works(spec: EnsembleSpec, start: int, stop: int) -> np.ndarray:
    """Works (k_BT units) of trials ``start..stop-1``; a pure function of the spec."""
    n = spec.config.n_molecules
    nr = sample_right_counts(n, spec.master_seed, np.arange(start, stop, dtype=np.uint64))
    return spec.config.thermal_energy * work_for_counts(spec.model, nr, n - nr)


def run_ensemble(spec: EnsembleSpec, workers: int | None = None) -> EnsembleSummary:
    """Monte Carlo mean and standard error; bitwise identical for any ``workers``."""
    bounds = [(s, min(s + CHUNK_TRIALS, spec.trials)) for s in range(0, spec.trials, CHUNK_TRIALS)]
    workers = workers or os.cpu_count() or 1
    if workers == 1 or len(bounds) == 1:
        parts = [trial_works(spec, a, b) for a, b in bounds]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda ab: trial_works(spec, *ab), bounds))
    mean, err = _mean_and_error(np.concatenate(parts))
    try:
        exact = exact_mean_work(spec.config, spec.model)
    except ValueError:
        exact = None
    return EnsembleSummary(mean, err, exact, spec.config.n_molecules, spec.trials)


def sweep(model, ns, trials: int, seed: int = 0, box_length: float = 1.0,
          thermal_energy: float = 1.0, workers: int | None = None) -> list[EnsembleSummary]:
    out = []
    for n in ns:
        cfg = EngineConfig(int(n), box_length, thermal_energy)
        out.append(run_ensemble(EnsembleSpec(cfg, model, trials, seed), workers=workers))
    return out
