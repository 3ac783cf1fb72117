"""A bistable switch as the elementary information carrier.

Two views of the same device:

* ``TwoStateSwitch`` - the reduced description: bias between the wells sets the
  encoding error, the relaxation time without barriers sets the lifetime scale.
* ``DoubleWellSim`` - overdamped Langevin motion in the quartic potential
  V(x) = E_b ((x/a)^2 - 1)^2 on [-w, w] with reflecting ends, used to measure
  barrier-crossing times directly.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import NamedTuple

import numba
import numpy as np
from scipy import integrate
from scipy.special import expit

from .core import StatisticsError, trial_generator


@dataclass(frozen=True)
class TwoStateSwitch:
    energy_bias: float
    barrier_height: float
    base_relaxation_time: float = 1.0

    def __post_init__(self):
        if self.energy_bias < 0:
            raise ValueError("energy_bias is measured from the right (lower) well and must be >= 0")
        if not self.barrier_height > 0:
            raise ValueError("barrier_height must be positive")
        if not self.base_relaxation_time > 0:
            raise ValueError("base_relaxation_time must be positive")


def encoding_error(sw: TwoStateSwitch) -> float:
    """Equilibrium occupation of the wrong well, e^-dE / (1 + e^-dE)."""
    return float(expit(-sw.energy_bias))


def _check_epsilon(epsilon: float) -> None:
    if not 0.0 < epsilon <= 0.5:
        raise ValueError(f"epsilon must lie in (0, 1/2], got {epsilon}")


def min_switch_work(epsilon: float, thermal_energy: float = 1.0, exact: bool = False) -> float:
    """Minimal work to flip the switch at encoding error ``epsilon``.

    The default is the leading-order k_BT ln(1/eps), meant for eps << 1.
    ``exact=True`` gives the two-state value k_BT ln((1 - eps)/eps), which is
    the bias that produces ``epsilon`` in equilibrium.
    """
    _check_epsilon(epsilon)
    if exact:
        return thermal_energy * math.log((1.0 - epsilon) / epsilon)
    return -thermal_energy * math.log(epsilon)


def information_lifetime(sw: TwoStateSwitch, epsilon: float | None = None) -> float:
    """Lifetime tau0 / eps; eps defaults to the switch's own encoding error."""
    if epsilon is None:
        epsilon = encoding_error(sw)
    _check_epsilon(epsilon)
    return sw.base_relaxation_time / epsilon


# -- double-well Langevin oracle ---------------------------------------------


@dataclass(frozen=True)
class DoubleWellSim:
    half_separation: float = 1.0
    barrier: float = 4.0
    damping: float = 1.0
    timestep: float = 1e-3
    temperature: float = 1.0
    wall: float = 3.0  # reflecting ends at +-wall * half_separation

    def __post_init__(self):
        for name in ("half_separation", "damping", "timestep", "temperature"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.barrier < 0:
            raise ValueError("barrier must be non-negative")
        if not self.wall > 1:
            raise ValueError("wall must sit beyond the well bottoms (wall > 1)")

    @classmethod
    def fixed_curvature(cls, barrier: float, curvature: float = 8.0, **kw) -> "DoubleWellSim":
        """Well whose bottom curvature V''(+-a) = 8 E_b / a^2 is held at ``curvature``.

        Varying the barrier this way keeps the Kramers prefactor constant, so
        ln(MFPT) against E_b isolates the Arrhenius factor.
        """
        return cls(half_separation=math.sqrt(8.0 * barrier / curvature), barrier=barrier, **kw)

    @property
    def well_curvature(self) -> float:
        return 8.0 * self.barrier / self.half_separation**2

    @property
    def top_curvature(self) -> float:
        return 4.0 * self.barrier / self.half_separation**2

    def potential(self, x):
        return self.barrier * ((np.asarray(x) / self.half_separation) ** 2 - 1.0) ** 2

    def force(self, x):
        x = np.asarray(x)
        a2 = self.half_separation**2
        return -4.0 * self.barrier * x * (x * x / a2 - 1.0) / a2

    @property
    def bounds(self) -> tuple[float, float]:
        w = self.wall * self.half_separation
        return -w, w


class EscapeResult(NamedTuple):
    mean_first_passage: float
    std_error: float
    escaped_fraction: float


@numba.njit(nogil=True, cache=True)
def _first_passage(rng, x0, a, eb, gamma, kt, dt, lower, max_steps):
    # Euler-Maruyama until x >= 0; the Brownian-bridge test catches crossings
    # that happen between two sampled points on the negative side.
    a2 = a * a
    drift = dt / gamma
    sigma = math.sqrt(2.0 * kt * dt / gamma)
    bridge = gamma / (kt * dt)
    x = x0
    for i in range(max_steps):
        f = -4.0 * eb * x * (x * x / a2 - 1.0) / a2
        xn = x + f * drift + sigma * rng.standard_normal()
        if xn >= 0.0:
            return (i + 1) * dt
        if xn < lower:
            xn = 2.0 * lower - xn
        arg = x * xn * bridge
        if arg < 30.0 and rng.random() < math.exp(-arg):
            return (i + 1) * dt
        x = xn
    return -1.0


@numba.njit(nogil=True, cache=True)
def _evolve_free(rng, xs, a, eb, gamma, kt, dt, lower, upper, n_steps):
    a2 = a * a
    drift = dt / gamma
    sigma = math.sqrt(2.0 * kt * dt / gamma)
    for j in range(xs.shape[0]):
        x = xs[j]
        for _ in range(n_steps):
            f = -4.0 * eb * x * (x * x / a2 - 1.0) / a2
            x = x + f * drift + sigma * rng.standard_normal()
            if x < lower:
                x = 2.0 * lower - x
            elif x > upper:
                x = 2.0 * upper - x
        xs[j] = x


def exact_mfpt(sim: DoubleWellSim) -> float:
    """Mean time from the left well bottom to the barrier top, by quadrature.

    T = (gamma / kT) int_{-a}^{0} e^{V(y)/kT} int_{-w}^{y} e^{-V(z)/kT} dz dy
    for overdamped motion with a reflecting wall at -w.
    """
    kt = sim.temperature
    lower, _ = sim.bounds

    def inner(y):
        return integrate.quad(lambda z: math.exp(-sim.potential(z) / kt), lower, y, limit=200)[0]

    outer = integrate.quad(
        lambda y: math.exp(sim.potential(y) / kt) * inner(y), -sim.half_separation, 0.0, limit=200
    )[0]
    return sim.damping / kt * outer


def kramers_mfpt(sim: DoubleWellSim) -> float:
    """High-barrier estimate of the same passage time: half the Kramers escape time."""
    if sim.barrier == 0:
        raise ValueError("Kramers formula needs a barrier")
    omega = math.sqrt(sim.well_curvature * sim.top_curvature)
    return math.pi * sim.damping / omega * math.exp(sim.barrier / sim.temperature)


def simulate_escape_time(
    sim: DoubleWellSim,
    trials: int = 1000,
    seed: int = 0,
    max_time: float | None = None,
    workers: int | None = None,
) -> EscapeResult:
    """Mean first-passage time over the barrier top, started at the left well bottom.

    Trial ``t`` uses its own generator seeded from (seed, t), so the result
    does not depend on ``workers``. Raises ``StatisticsError`` if fewer than
    90% of trials cross before ``max_time`` (default: 25x the exact MFPT).
    """
    if trials < 100:
        raise ValueError("need at least 100 trials")
    if max_time is None:
        max_time = 25.0 * exact_mfpt(sim)
    max_steps = int(math.ceil(max_time / sim.timestep))
    lower, _ = sim.bounds
    args = (-sim.half_separation, sim.half_separation, sim.barrier, sim.damping,
            sim.temperature, sim.timestep, lower, max_steps)

    def one(t):
        return _first_passage(trial_generator(seed, t), *args)

    workers = workers or os.cpu_count() or 1
    if workers == 1:
        times = np.array([one(t) for t in range(trials)])
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            times = np.array(list(pool.map(one, range(trials))))
    done = times[times >= 0]
    frac = len(done) / trials
    if frac < 0.9:
        raise StatisticsError(f"only {frac:.1%} of trials escaped within t={max_time:g}")
    mean = math.fsum(done) / len(done)
    err = math.sqrt(math.fsum((done - mean) ** 2) / (len(done) - 1) / len(done))
    return EscapeResult(mean, err, frac)


def arrhenius_slope(barriers, times) -> float:
    """Slope of ln(time) against barrier height (in k_BT)."""
    slope, _ = np.polyfit(np.asarray(barriers, float), np.log(np.asarray(times, float)), 1)
    return float(slope)


def boltzmann_bin_probabilities(sim: DoubleWellSim, edges) -> np.ndarray:
    kt = sim.temperature
    lower, upper = sim.bounds
    w = lambda x: math.exp(-float(sim.potential(x)) / kt)
    z = integrate.quad(w, lower, upper, limit=400)[0]
    return np.array([integrate.quad(w, lo, hi)[0] for lo, hi in zip(edges[:-1], edges[1:])]) / z


def sample_boltzmann(sim: DoubleWellSim, size: int, rng: np.random.Generator) -> np.ndarray:
    """Exact-in-the-grid-limit draws from exp(-V/kT) on the reflecting domain."""
    lower, upper = sim.bounds
    grid = np.linspace(lower, upper, 20001)
    dens = np.exp(-sim.potential(grid) / sim.temperature)
    cdf = integrate.cumulative_trapezoid(dens, grid, initial=0.0)
    cdf /= cdf[-1]
    return np.interp(rng.random(size), cdf, grid)


def boltzmann_self_test(
    sim: DoubleWellSim,
    walkers: int = 20000,
    relax_time: float = 5.0,
    snapshots: int = 20,
    snapshot_time: float = 0.5,
    bins: int = 40,
    seed: int = 0,
) -> float:
    """Total-variation distance between the integrator's histogram and Boltzmann.

    Walkers start from the exact distribution, so any drift in the histogram
    is discretization error of the integrator at ``sim.timestep``.
    """
    rng = trial_generator(seed, 0)
    xs = sample_boltzmann(sim, walkers, rng)
    lower, upper = sim.bounds
    consts = (sim.half_separation, sim.barrier, sim.damping, sim.temperature, sim.timestep,
              lower, upper)
    _evolve_free(rng, xs, *consts, int(round(relax_time / sim.timestep)))
    edges = np.linspace(lower, upper, bins + 1)
    counts = np.zeros(bins)
    per_snap = int(round(snapshot_time / sim.timestep))
    for _ in range(snapshots):
        _evolve_free(rng, xs, *consts, per_snap)
        counts += np.histogram(xs, bins=edges)[0]
    empirical = counts / counts.sum()
    return 0.5 * float(np.abs(empirical - boltzmann_bin_probabilities(sim, edges)).sum())
