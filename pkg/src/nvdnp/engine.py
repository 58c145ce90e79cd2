"""Density-matrix propagation through pulse sequences, Monte Carlo averaging and sweeps.

Between pulses and noise updates the Hamiltonian is constant, so every interval
is advanced with its exact propagator. Realizations are propagated together as
a stack of density matrices.

Seeding: the noise of realization ``r`` at a parameter point is drawn from
``SeedSequence([master_seed, bits(tau), bits(omega_sl), r])``. The key holds
parameter values, not grid positions, and deliberately leaves out ``n_pulses``,
``n_cycles`` and the sequence variant. Runs that differ only in those therefore
see the same noise, and a shorter run is an exact prefix of a longer one. Sweeps
along N use this to read every N off a single propagation.
"""

from __future__ import annotations

import math
import struct
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from nvdnp import quantum as q
from nvdnp.noise import NoiseComponentSpec, cell_index, n_grid_cells, sample_trajectory
from nvdnp.sequence import (
    READOUT,
    Delay,
    InstantRotation,
    LaserReset,
    PulseSequence,
    SLPulse,
    rebuild,
)

RECORD_MODES = ("final_only", "per_pulse_unit", "time_series")
SWEEP_AXES = ("omega_sl", "omega_f", "tau", "n_pulses", "n_cycles")
_AXIS_ALIASES = {"N": "n_pulses", "n": "n_cycles"}

# Realizations are propagated in fixed-size stacks; the split never depends on
# the thread count.
REALIZATION_CHUNK = 50

_TIME_EPS = 1e-9


class NumericalError(RuntimeError):
    """Propagation produced non-finite values."""


@dataclass(frozen=True)
class RunConfig:
    params: q.SpinSystemParams
    sequence: PulseSequence
    noise_specs: tuple[NoiseComponentSpec, ...] = ()
    noise_dt: float = 0.1
    n_realizations: int | None = None
    master_seed: int = 0
    record_mode: str = "final_only"

    def __post_init__(self):
        object.__setattr__(self, "noise_specs", tuple(self.noise_specs))
        if not self.noise_dt > 0:
            raise ValueError(f"noise_dt must be > 0, got {self.noise_dt}")
        if self.n_realizations is not None and self.n_realizations < 1:
            raise ValueError(f"n_realizations must be >= 1, got {self.n_realizations}")
        if self.record_mode not in RECORD_MODES:
            raise ValueError(f"record_mode must be one of {RECORD_MODES}, got {self.record_mode!r}")
        if self.master_seed < 0:
            raise ValueError("master_seed must be non-negative")

    @property
    def noisy(self) -> bool:
        return any(s.delta_noise > 0 for s in self.noise_specs)

    @property
    def realizations(self) -> int:
        if self.n_realizations is not None:
            return self.n_realizations
        return 100 if self.noisy else 1


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Observables per realization (rows) and record time (columns)."""

    times: np.ndarray
    sz: np.ndarray
    iz: np.ndarray

    @property
    def n_realizations(self) -> int:
        return self.sz.shape[0]

    @property
    def sz_mean(self) -> np.ndarray:
        return self.sz.mean(axis=0)

    @property
    def iz_mean(self) -> np.ndarray:
        return self.iz.mean(axis=0)

    @property
    def sz_sem(self) -> np.ndarray:
        return _sem(self.sz)

    @property
    def iz_sem(self) -> np.ndarray:
        return _sem(self.iz)

    def select(self, columns) -> "Trajectory":
        columns = np.asarray(columns, dtype=int)
        return Trajectory(self.times[columns], self.sz[:, columns], self.iz[:, columns])


def _sem(x: np.ndarray) -> np.ndarray:
    n = x.shape[0]
    if n < 2:
        return np.zeros(x.shape[1])
    return x.std(axis=0, ddof=1) / math.sqrt(n)


@dataclass(frozen=True)
class AxisSpec:
    name: str
    values: tuple

    def __post_init__(self):
        name = _AXIS_ALIASES.get(self.name, self.name)
        if name not in SWEEP_AXES:
            raise ValueError(f"unknown sweep axis {self.name!r}; expected one of {SWEEP_AXES}")
        object.__setattr__(self, "name", name)
        vals = tuple(int(v) for v in self.values) if name in ("n_pulses", "n_cycles") else tuple(
            float(v) for v in self.values
        )
        object.__setattr__(self, "values", vals)


@dataclass(frozen=True, eq=False)
class SweepResult:
    axis1: AxisSpec
    axis2: AxisSpec
    sz_mean: np.ndarray
    iz_mean: np.ndarray
    sz_sem: np.ndarray
    iz_sem: np.ndarray
    config: RunConfig

    def transpose(self) -> "SweepResult":
        return SweepResult(
            self.axis2, self.axis1, self.sz_mean.T, self.iz_mean.T, self.sz_sem.T, self.iz_sem.T, self.config
        )


# -- seeding ------------------------------------------------------------------


def _float_bits(x: float) -> int:
    return struct.unpack("<Q", struct.pack("<d", float(x)))[0]


def point_key(sequence: PulseSequence) -> tuple[int, ...]:
    """Parameter-value key identifying the noise of a sweep point."""
    if sequence.info is None:
        return ()
    return (_float_bits(sequence.info.tau), _float_bits(sequence.info.omega_sl))


def realization_seed(master_seed: int, key: tuple[int, ...], index: int) -> int:
    """64-bit seed for one realization, independent of evaluation order."""
    ss = np.random.SeedSequence([int(master_seed), *key, int(index)])
    lo, hi = ss.generate_state(2, np.uint32)
    return int(lo) | (int(hi) << 32)


# -- propagation --------------------------------------------------------------


def _expm_hermitian(h: np.ndarray, dt) -> np.ndarray:
    w, v = np.linalg.eigh(h)
    phases = np.exp(-1j * w * np.asarray(dt)[..., None])
    return (v * phases[..., None, :]) @ np.conj(np.swapaxes(v, -1, -2))


def _cells(t0: float, t1: float, dt: float) -> tuple[np.ndarray, np.ndarray]:
    """Noise-grid cells overlapping ``[t0, t1)`` and the time spent in each."""
    a, b = t0 / dt, t1 / dt
    k0 = cell_index(t0, dt)
    rb = round(b)
    k1 = int(rb) if abs(b - rb) < _TIME_EPS else math.ceil(b)
    ks = np.arange(k0, max(k1, k0 + 1))
    lo = np.maximum(ks, a)
    hi = np.minimum(ks + 1, b)
    # Snap boundaries that coincide with grid points to the grid.
    lo = np.where(np.abs(lo - np.round(lo)) < _TIME_EPS, np.round(lo), lo)
    hi = np.where(np.abs(hi - np.round(hi)) < _TIME_EPS, np.round(hi), hi)
    return ks, (hi - lo) * dt


class _Walker:
    """Walks one sequence for a stack of realizations and collects records."""

    def __init__(self, config: RunConfig, seeds):
        self.config = config
        self.seq = config.sequence
        self.h_static = q.static_hamiltonian(config.params)
        n = len(seeds)
        self.rho = np.broadcast_to(q.initial_state(), (n, 4, 4)).copy()
        self.noise = None
        if config.noisy:
            wall = self.seq.wall_time
            self.noise = np.stack(
                [sample_trajectory(config.noise_specs, config.noise_dt, wall, s).values for s in seeds]
            )
        info = self.seq.info
        self.readout = None if info is None else q.instant_rotation(math.pi / 2, info.detect_phase)
        self.unit = None if info is None else info.tau
        self.mode = config.record_mode
        self.times: list[float] = []
        self.sz: list[np.ndarray] = []
        self.iz: list[np.ndarray] = []
        self._cache: dict = {}
        self._last_unit = 0
        self._final = None

    def _record(self, t: float, rho: np.ndarray, rotate: bool = True):
        if rotate and self.readout is not None:
            rho = q.apply_unitary(rho, self.readout)
        self.times.append(t)
        self.sz.append(q.expect_sz(rho))
        self.iz.append(q.expect_iz(rho))

    def _drive(self, amplitude: float, phase: float) -> np.ndarray:
        return self.h_static + amplitude * q.drive_operator(phase)

    def _advance(self, t0: float, duration: float, amplitude: float, phase: float):
        if duration <= 0:
            return
        h = self._drive(amplitude, phase)
        if self.noise is None:
            key = (amplitude, phase, duration)
            u = self._cache.get(key)
            if u is None:
                u = self._cache[key] = _expm_hermitian(h, duration)
            self.rho = q.apply_unitary(self.rho, u)
            if self.mode == "time_series":
                self._record(t0 + duration, self.rho)
            return
        dt = self.config.noise_dt
        ks, subdts = _cells(t0, t0 + duration, dt)
        ks = np.minimum(ks, self.noise.shape[1] - 1)
        hs = h + self.noise[:, ks, None, None] * q.SZ
        us = _expm_hermitian(hs, subdts)
        if self.mode == "time_series":
            t = t0
            for j in range(len(ks)):
                self.rho = q.apply_unitary(self.rho, us[:, j])
                t += subdts[j]
                self._record(t, self.rho)
            return
        total = us[:, 0]
        for j in range(1, len(ks)):
            total = us[:, j] @ total
        self.rho = q.apply_unitary(self.rho, total)

    def _unit_boundary(self, t: float):
        if self.mode != "per_pulse_unit" or self.unit is None:
            return
        x = t / self.unit
        m = round(x)
        if abs(x - m) < _TIME_EPS and m > self._last_unit:
            self._last_unit = m
            self._record(m * self.unit, self.rho)

    def run(self):
        t = 0.0
        started = False
        for seg in self.seq.segments:
            if isinstance(seg, (SLPulse, Delay)):
                if self.mode == "time_series" and not started:
                    self._record(t, self.rho)
                started = True
                amp = seg.amplitude if isinstance(seg, SLPulse) else 0.0
                phase = seg.phase if isinstance(seg, SLPulse) else 0.0
                self._advance(t, seg.duration, amp, phase)
                t += seg.duration
                self._unit_boundary(t)
            elif isinstance(seg, InstantRotation):
                self.rho = q.apply_unitary(self.rho, q.instant_rotation(seg.angle, seg.phase))
                if seg.role == READOUT:
                    self._final = (t, self.rho)
            elif isinstance(seg, LaserReset):
                self.rho = q.laser_reset(self.rho)
            else:
                raise TypeError(f"unknown segment {seg!r}")
        if not np.all(np.isfinite(self.rho)):
            raise NumericalError("non-finite density matrix after propagation")
        if self.mode == "final_only" or not self.times:
            if self._final is not None:
                self._record(self._final[0], self._final[1], rotate=False)
            else:
                self._record(t, self.rho, rotate=False)
        sz = np.stack(self.sz, axis=1)
        iz = np.stack(self.iz, axis=1)
        if not (np.all(np.isfinite(sz)) and np.all(np.isfinite(iz))):
            raise NumericalError("non-finite observables")
        return np.asarray(self.times), sz, iz


def _propagate(config: RunConfig, indices, key=None) -> Trajectory:
    if key is None:
        key = point_key(config.sequence)
    seeds = [realization_seed(config.master_seed, key, i) for i in indices]
    times, sz, iz = _Walker(config, seeds).run()
    return Trajectory(times, sz, iz)


def final_states(config: RunConfig, indices=(0,)) -> np.ndarray:
    """Density matrices at the end of the sequence, one per realization index."""
    key = point_key(config.sequence)
    seeds = [realization_seed(config.master_seed, key, i) for i in indices]
    w = _Walker(config, seeds)
    w.run()
    return w.rho


def run_once(config: RunConfig, realization_index: int = 0) -> Trajectory:
    """Propagate a single noise realization."""
    return _propagate(config, [realization_index])


def _concat(parts) -> Trajectory:
    return Trajectory(parts[0].times, np.concatenate([p.sz for p in parts]), np.concatenate([p.iz for p in parts]))


def run_monte_carlo(config: RunConfig, threads: int = 1) -> Trajectory:
    """Propagate ``config.realizations`` realizations; means and SEMs are on the result.

    Without noise all realizations coincide, so one is propagated and replicated.
    """
    n = config.realizations
    if not config.noisy:
        one = run_once(config)
        return Trajectory(one.times, np.repeat(one.sz, n, axis=0), np.repeat(one.iz, n, axis=0))
    chunks = [range(i, min(i + REALIZATION_CHUNK, n)) for i in range(0, n, REALIZATION_CHUNK)]
    parts = _map(lambda c: _propagate(config, c), chunks, threads)
    return _concat(parts)


def _map(fn, items, threads: int):
    items = list(items)
    if threads <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


# -- sweeps -------------------------------------------------------------------


def _apply_axis(seq: PulseSequence, name: str, value) -> dict:
    if name == "omega_sl":
        return {"omega_sl": float(value)}
    if name == "omega_f":
        return {"tau": math.pi / float(value)}
    if name == "tau":
        return {"tau": float(value)}
    if name == "n_pulses":
        return {"n_pulses": int(value)}
    if name == "n_cycles":
        if seq.info.n_cycles is None and int(value) == 1:
            return {"n_cycles": None}
        return {"n_cycles": int(value)}
    raise ValueError(name)


def config_at(base: RunConfig, **axis_values) -> RunConfig:
    """``base`` with the named sweep parameters replaced."""
    changes: dict = {}
    for name, value in axis_values.items():
        name = _AXIS_ALIASES.get(name, name)
        if name not in SWEEP_AXES:
            raise ValueError(f"unknown sweep axis {name!r}")
        changes.update(_apply_axis(base.sequence, name, value))
    return replace(base, sequence=rebuild(base.sequence, **changes))


def _point_stats(traj: Trajectory, column: int = -1):
    return (
        float(traj.sz_mean[column]),
        float(traj.iz_mean[column]),
        float(traj.sz_sem[column]),
        float(traj.iz_sem[column]),
    )


def _evaluate_point(config: RunConfig) -> tuple[float, float, float, float]:
    return _point_stats(run_monte_carlo(replace(config, record_mode="final_only")))


def _evaluate_line(config: RunConfig, name: str, values) -> list[tuple[float, float, float, float]]:
    """Evaluate all ``values`` of a length-like axis from one long propagation."""
    info = config.sequence.info
    out = {}
    positive = sorted({v for v in values if v > 0})
    if positive:
        vmax = positive[-1]
        long_cfg = replace(config_at(config, **{name: vmax}), record_mode="per_pulse_unit")
        traj = run_monte_carlo(long_cfg)
        per = 1 if name == "n_pulses" else info.n_pulses
        for v in positive:
            out[v] = _point_stats(traj, v * per - 1)
    for v in values:
        if v not in out:
            out[v] = _evaluate_point(config_at(config, **{name: v}))
    return [out[v] for v in values]


def _line_capable(base: RunConfig, name: str) -> bool:
    info = base.sequence.info
    if info is None:
        return False
    if name == "n_pulses":
        return info.n_cycles is None
    if name == "n_cycles":
        return info.n_pulses >= 1
    return False


def sweep_2d(base: RunConfig, axis1: AxisSpec, axis2: AxisSpec, threads: int = 1) -> SweepResult:
    """Evaluate the Monte Carlo average at every grid point of ``axis1 x axis2``.

    Grid points are independent work units keyed by their parameter values, so
    the result does not depend on ``threads`` or on the axis order beyond a
    transpose.
    """
    if base.sequence.info is None:
        raise ValueError("sweeps need a sequence built by build_rnovel/build_novel")
    if axis1.name == axis2.name:
        raise ValueError("sweep axes must differ")
    shape = (len(axis1.values), len(axis2.values))
    grids = [np.zeros(shape) for _ in range(4)]

    line_axis = None
    for ax, other in ((axis2, axis1), (axis1, axis2)):
        if ax.name in ("n_pulses", "n_cycles") and _line_capable(base, ax.name) and other.name not in (
            "n_pulses",
            "n_cycles",
        ):
            line_axis = ax
            break

    if line_axis is None:
        points = [(i, j) for i in range(shape[0]) for j in range(shape[1])]

        def work(ij):
            i, j = ij
            return _evaluate_point(config_at(base, **{axis1.name: axis1.values[i], axis2.name: axis2.values[j]}))

        for (i, j), stats in zip(points, _map(work, points, threads)):
            for g, s in zip(grids, stats):
                g[i, j] = s
    else:
        outer = axis1 if line_axis is axis2 else axis2

        def work_line(k):
            cfg = config_at(base, **{outer.name: outer.values[k]})
            return _evaluate_line(cfg, line_axis.name, line_axis.values)

        lines = _map(work_line, range(len(outer.values)), threads)
        for k, line in enumerate(lines):
            for m, stats in enumerate(line):
                i, j = (k, m) if outer is axis1 else (m, k)
                for g, s in zip(grids, stats):
                    g[i, j] = s

    return SweepResult(axis1, axis2, *grids, config=base)


def buildup_curve(base: RunConfig, n_max: int) -> Trajectory:
    """Observables after each of ``n_max`` repeated cycles, versus total irradiation time ``n N tau``."""
    info = base.sequence.info
    if info is None or info.n_pulses < 1:
        raise ValueError("buildup_curve needs a builder sequence with n_pulses >= 1")
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    cfg = replace(config_at(base, n_cycles=n_max), record_mode="per_pulse_unit")
    if cfg.sequence.info.n_cycles is None:
        cfg = replace(cfg, sequence=rebuild(cfg.sequence, n_cycles=1))
    traj = run_monte_carlo(cfg)
    cols = np.arange(1, n_max + 1) * info.n_pulses - 1
    return traj.select(cols)
