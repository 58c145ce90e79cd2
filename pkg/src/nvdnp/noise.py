"""Ornstein-Uhlenbeck dephasing field sampled on a fixed time grid.

Each component is started from its stationary distribution and advanced with the
exact one-step update

    b[k+1] = mu * b[k] + sigma * sqrt(1 - mu**2) * g[k],   mu = exp(-dt / tau_c),

so the grid samples carry no discretization bias. Between grid points the field
is held constant.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.signal import lfilter

from nvdnp.units import TWO_PI

_GRID_EPS = 1e-9


@dataclass(frozen=True)
class NoiseComponentSpec:
    """One OU component: correlation time ``tau_c`` (us), stationary std ``delta_noise`` (rad/us)."""

    tau_c: float
    delta_noise: float

    def __post_init__(self):
        if not self.tau_c > 0:
            raise ValueError(f"tau_c must be > 0, got {self.tau_c}")
        if not (self.delta_noise >= 0 and math.isfinite(self.delta_noise)):
            raise ValueError(f"delta_noise must be finite and >= 0, got {self.delta_noise}")

    @classmethod
    def from_mhz(cls, tau_c_us: float, delta_noise_mhz: float) -> "NoiseComponentSpec":
        return cls(tau_c=tau_c_us, delta_noise=TWO_PI * delta_noise_mhz)


@dataclass(frozen=True, eq=False)
class NoiseTrajectory:
    dt: float
    duration: float
    values: np.ndarray
    component_specs: tuple[NoiseComponentSpec, ...]
    seed: int

    def __len__(self):
        return len(self.values)


def n_grid_cells(duration: float, dt: float) -> int:
    """Number of grid cells needed to cover ``duration`` (at least one)."""
    return max(1, math.ceil(duration / dt - _GRID_EPS))


def _component_path(spec: NoiseComponentSpec, dt: float, n: int, rng: np.random.Generator) -> np.ndarray:
    b0 = spec.delta_noise * rng.standard_normal()
    g = rng.standard_normal(n - 1)
    mu = math.exp(-dt / spec.tau_c)
    kick = spec.delta_noise * math.sqrt(-math.expm1(-2.0 * dt / spec.tau_c))
    drive = np.empty(n)
    drive[0] = b0
    drive[1:] = kick * g
    # y[k] = drive[k] + mu * y[k-1]
    return lfilter([1.0], [1.0, -mu], drive)


def sample_trajectory(specs, dt: float, duration: float, seed: int) -> NoiseTrajectory:
    """Sample the summed OU field on a grid of spacing ``dt`` covering ``duration``.

    The result is a deterministic function of ``(specs, dt, duration, seed)``.
    Each component draws from its own child stream, so a longer duration
    extends a shorter one without changing its prefix.
    """
    if not dt > 0:
        raise ValueError(f"dt must be > 0, got {dt}")
    if duration < 0:
        raise ValueError(f"duration must be >= 0, got {duration}")
    specs = tuple(specs)
    n = n_grid_cells(duration, dt)
    values = np.zeros(n)
    children = np.random.SeedSequence(int(seed)).spawn(len(specs))
    for spec, child in zip(specs, children):
        values += _component_path(spec, dt, n, np.random.Generator(np.random.PCG64(child)))
    return NoiseTrajectory(dt=dt, duration=duration, values=values, component_specs=specs, seed=int(seed))


def cell_index(t: float, dt: float) -> int:
    """Grid cell containing ``t``; times within rounding of a boundary snap onto it."""
    x = t / dt
    r = round(x)
    if abs(x - r) < _GRID_EPS:
        return int(r)
    return math.floor(x)


def value_at(traj: NoiseTrajectory, t: float) -> float:
    """Zero-order-hold value of the field at time ``t``."""
    if t < 0 or t >= traj.duration:
        raise ValueError(f"t={t} outside [0, {traj.duration})")
    k = min(cell_index(t, traj.dt), len(traj.values) - 1)
    return float(traj.values[k])
