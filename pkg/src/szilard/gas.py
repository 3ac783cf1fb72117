"""Kinetic 1D ideal gas between two thermal walls, the right one a movable piston.

Molecules have unit mass and do not interact, so each one is advanced
independently from wall hit to wall hit. A thermal wall re-emits a molecule
with speed drawn from the flux-weighted (Rayleigh) distribution at k_BT,
which keeps the gas isothermal.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numba
import numpy as np

from .core import StatisticsError, trial_generator

MIN_COLLISIONS = 10_000


@numba.njit(nogil=True, cache=True)
def _rayleigh(rng, scale):
    u = 0.0
    while u == 0.0:
        u = 1.0 - rng.random()  # (0, 1]
        u = -2.0 * math.log(u)
    return scale * math.sqrt(u)


@numba.njit(nogil=True, cache=True)
def _advance(rng, pos, vel, length, kt, duration):
    scale = math.sqrt(kt)
    imp_l = 0.0
    imp_r = 0.0
    hits_l = 0
    hits_r = 0
    for i in range(pos.shape[0]):
        x = pos[i]
        v = vel[i]
        t = 0.0
        while True:
            if v > 0.0:
                th = (length - x) / v
            elif v < 0.0:
                th = -x / v
            else:
                th = math.inf
            if t + th >= duration:
                x += v * (duration - t)
                x = min(max(x, 0.0), length)
                break
            t += th
            out = _rayleigh(rng, scale)
            if v > 0.0:
                x = length
                imp_r += v + out
                hits_r += 1
                v = -out
            else:
                x = 0.0
                imp_l += out - v
                hits_l += 1
                v = out
        pos[i] = x
        vel[i] = v
    return imp_l, imp_r, hits_l, hits_r


@dataclass
class GasState:
    positions: np.ndarray
    velocities: np.ndarray
    current_length: float
    thermal_energy: float = 1.0
    time: float = 0.0
    impulse_left: float = 0.0
    impulse_right: float = 0.0
    collisions: int = 0
    window: float = field(default=0.0, repr=False)

    def __post_init__(self):
        self.positions = np.ascontiguousarray(self.positions, dtype=float)
        self.velocities = np.ascontiguousarray(self.velocities, dtype=float)
        if self.positions.shape != self.velocities.shape or self.positions.ndim != 1:
            raise ValueError("positions and velocities must be 1D arrays of equal length")
        if not self.current_length > 0:
            raise ValueError("current_length must be positive")
        if self.n and (self.positions.min() < 0 or self.positions.max() > self.current_length):
            raise ValueError("all positions must lie in [0, current_length]")

    @classmethod
    def equilibrium(cls, n: int, length: float, rng: np.random.Generator,
                    thermal_energy: float = 1.0) -> "GasState":
        """Uniform positions, Maxwell-Boltzmann velocities (m = 1)."""
        return cls(
            rng.uniform(0.0, length, n),
            rng.normal(0.0, math.sqrt(thermal_energy), n),
            length,
            thermal_energy,
        )

    @property
    def n(self) -> int:
        return self.positions.shape[0]

    @property
    def wall_impulse_accumulator(self) -> float:
        return self.impulse_left + self.impulse_right

    def reset_accumulators(self) -> None:
        self.impulse_left = self.impulse_right = 0.0
        self.collisions = 0
        self.window = 0.0

    def copy(self) -> "GasState":
        return GasState(self.positions.copy(), self.velocities.copy(), self.current_length,
                        self.thermal_energy, self.time, self.impulse_left, self.impulse_right,
                        self.collisions, self.window)

    def mirrored(self) -> "GasState":
        """Same gas seen from the other end (x -> L - x, v -> -v)."""
        return GasState(self.current_length - self.positions, -self.velocities,
                        self.current_length, self.thermal_energy, self.time)

    def set_length(self, new_length: float, rng: np.random.Generator) -> None:
        """Move the piston instantly. Molecules it sweeps over are left at the
        piston face and re-emitted inward thermally."""
        if not new_length > 0:
            raise ValueError("piston length must stay positive")
        swept = self.positions > new_length
        k = int(swept.sum())
        if k:
            self.positions[swept] = new_length
            self.velocities[swept] = -rng.rayleigh(math.sqrt(self.thermal_energy), k)
        self.current_length = float(new_length)


def evolve(state: GasState, duration: float, rng: np.random.Generator) -> GasState:
    """Advance the gas in place by ``duration``, accumulating wall impulses."""
    if not duration > 0:
        raise ValueError("duration must be positive")
    if state.n:
        il, ir, hl, hr = _advance(rng, state.positions, state.velocities, state.current_length,
                                  state.thermal_energy, duration)
        state.impulse_left += il
        state.impulse_right += ir
        state.collisions += hl + hr
    state.time += duration
    state.window += duration
    return state


def collision_rate(n: int, length: float, thermal_energy: float = 1.0) -> float:
    """Expected wall hits per unit time, both walls: 2 (N/L) sqrt(k_BT / 2 pi)."""
    return 2.0 * n / length * math.sqrt(thermal_energy / (2.0 * math.pi))


def window_for(state: GasState, collisions: int) -> float:
    """Averaging window expected to yield ``collisions`` wall hits."""
    return collisions / collision_rate(state.n, state.current_length, state.thermal_energy)


def measure_pressure(state: GasState, window: float | None, rng: np.random.Generator,
                     min_collisions: int = MIN_COLLISIONS) -> float:
    """Mean wall impulse per unit time over a fresh window (unit cross-section).

    Both walls are averaged; in equilibrium they carry the same pressure.
    ``window=None`` picks one expected to give 1.5x ``min_collisions`` hits.
    """
    if state.n == 0:
        return 0.0
    if window is None:
        window = window_for(state, int(1.5 * min_collisions))
    state.reset_accumulators()
    evolve(state, window, rng)
    if state.collisions < min_collisions:
        raise StatisticsError(
            f"{state.collisions} wall collisions in window {window:g}; need {min_collisions}"
        )
    return state.wall_impulse_accumulator / (2.0 * window)


def quasistatic_piston_work(state: GasState, final_length: float, steps: int,
                            rng: np.random.Generator, window: float | None = None,
                            min_collisions: int = MIN_COLLISIONS) -> float:
    """Work done on the gas while the piston moves to ``final_length``.

    The move is split into ``steps`` equal increments; pressure is measured
    at the midpoint of each increment and the work is -sum p dL, so
    compression is positive and expansion negative (work extracted).
    """
    if not final_length > 0:
        raise ValueError("final_length must be positive")
    if steps < 1:
        raise ValueError("steps must be positive")
    start = state.current_length
    if final_length == start or state.n == 0:
        state.set_length(final_length, rng)
        return 0.0
    dl = (final_length - start) / steps
    pressures = np.empty(steps)
    for i in range(steps):
        state.set_length(start + (i + 0.5) * dl, rng)
        pressures[i] = measure_pressure(state, window, rng, min_collisions)
    state.set_length(final_length, rng)
    return -math.fsum(pressures * dl)


def insert_partition(state: GasState, position: float) -> tuple[GasState, GasState]:
    """Split the gas at ``position`` into two independent gases.

    The left gas keeps its coordinates on [0, position]; the right gas uses
    its own frame on [0, L - position] with the partition at its x = 0 end.
    """
    if not 0.0 < position < state.current_length:
        raise ValueError("partition must be strictly inside the box")
    left = state.positions < position
    right = ~left
    return (
        GasState(state.positions[left], state.velocities[left], position,
                 state.thermal_energy, state.time),
        GasState(state.positions[right] - position, state.velocities[right],
                 state.current_length - position, state.thermal_energy, state.time),
    )


def isothermal_work(n: int, initial_length: float, final_length: float,
                    thermal_energy: float = 1.0) -> float:
    """Reference value N k_BT ln(L_i / L_f) for the work done on the gas."""
    return n * thermal_energy * math.log(initial_length / final_length)


def split_counts(n: int, length: float, samples: int, rng: np.random.Generator,
                 spacing: float | None = None, thermal_energy: float = 1.0,
                 position: float | None = None) -> np.ndarray:
    """Right-side counts from repeated partition insertions into one running gas.

    Between insertions the gas evolves for ``spacing`` (default ten crossing
    times), long enough for the snapshots to be effectively independent.
    """
    if position is None:
        position = length / 2
    if spacing is None:
        spacing = 10.0 * length / math.sqrt(thermal_energy)
    state = GasState.equilibrium(n, length, rng, thermal_energy)
    out = np.empty(samples, dtype=np.int64)
    for i in range(samples):
        evolve(state, spacing, rng)
        out[i] = insert_partition(state, position)[1].n
    return out


def kinetic_work_a(left: GasState, right: GasState, steps: int, rng: np.random.Generator,
                   **kw) -> float:
    """Extracted work when a midpoint partition slides to its balance point.

    ``left`` and ``right`` are the two halves returned by ``insert_partition``.
    Each half sees the partition as a piston, so the extracted work is minus
    the sum of the quasistatic works done on the two halves.
    """
    n = left.n + right.n
    half = left.current_length
    if left.n == right.n:
        return 0.0
    shift = half * abs(left.n - right.n) / n
    # put the partition at the piston end of both gases
    gases = (left.copy(), right.mirrored())
    major, minor = gases if left.n > right.n else gases[::-1]
    w = quasistatic_piston_work(major, half + shift, steps, rng, **kw)
    w += quasistatic_piston_work(minor, half - shift, steps, rng, **kw)
    return -w


@dataclass(frozen=True)
class KineticEstimate:
    mean_work: float
    std_error: float
    samples: int
    distinct_splits: int


def kinetic_mean_work_a(n: int, samples: int, seed: int = 0, length: float = 1.0,
                        steps: int = 1000, workers: int | None = None,
                        min_collisions: int = MIN_COLLISIONS) -> KineticEstimate:
    """Mean feedback-engine work estimated entirely from the kinetic gas.

    Partition outcomes come from ``insert_partition`` on a running equilibrated
    gas. The protocol is deterministic given the split, so the quasistatic
    work is computed once per distinct split (from the first snapshot that
    produced it) and reused for later snapshots with the same counts.
    """
    rng = trial_generator(seed, 0)
    state = GasState.equilibrium(n, length, rng)
    spacing = 10.0 * length
    counts = np.empty(samples, dtype=np.int64)
    first: dict[int, tuple[GasState, GasState]] = {}
    for i in range(samples):
        evolve(state, spacing, rng)
        left, right = insert_partition(state, length / 2)
        counts[i] = right.n
        first.setdefault(right.n, (left, right))

    keys = sorted(first)

    def work(k):
        return kinetic_work_a(*first[k], steps, trial_generator(seed, 1 + k),
                              min_collisions=min_collisions)

    workers = workers or os.cpu_count() or 1
    if workers == 1:
        works = [work(k) for k in keys]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            works = list(pool.map(work, keys))
    table = dict(zip(keys, works))
    x = np.array([table[k] for k in counts])
    mean = math.fsum(x) / samples
    err = math.sqrt(math.fsum((x - mean) ** 2) / (samples - 1) / samples) if samples > 1 else 0.0
    return KineticEstimate(mean, err, samples, len(keys))
