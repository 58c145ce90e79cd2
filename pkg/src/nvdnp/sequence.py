"""Pulse sequences for NOVEL and refocused NOVEL (rNOVEL).

A sequence is a flat tuple of segments walked in order by the engine. Spin-lock
pulses and delays take wall time; ideal rotations and laser resets are
instantaneous.

rNOVEL body: ``N x [SL(tau/2), pi, SL(tau/2)]`` with the pi pulse in the spin-lock
phase. NOVEL is the same with the pi pulses removed. Default phases put the NV
along +x after preparation (rotation about +y), lock it along x, and undo the
preparation for readout, so an empty body reads back ``<S_z> = 1``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

PREP = "prep"
REFOCUS = "refocus"
READOUT = "readout"

VARIANTS = ("rnovel", "novel")


@dataclass(frozen=True)
class SLPulse:
    duration: float
    amplitude: float
    phase: float = 0.0


@dataclass(frozen=True)
class InstantRotation:
    angle: float
    phase: float = 0.0
    role: str = ""


@dataclass(frozen=True)
class Delay:
    duration: float


@dataclass(frozen=True)
class LaserReset:
    pass


@dataclass(frozen=True)
class SequenceInfo:
    """Builder inputs, kept so a sequence can be rebuilt with one parameter changed."""

    variant: str
    tau: float
    n_pulses: int
    omega_sl: float
    sl_phase: float = 0.0
    prep_phase: float = math.pi / 2
    detect_phase: float = -math.pi / 2
    pi_angle: float = math.pi
    n_cycles: int | None = None

    @property
    def omega_f(self) -> float:
        return math.pi / self.tau


@dataclass(frozen=True)
class PulseSequence:
    segments: tuple
    info: SequenceInfo | None = None

    @property
    def wall_time(self) -> float:
        return sum(getattr(s, "duration", 0.0) for s in self.segments)

    @property
    def tau(self) -> float | None:
        return None if self.info is None else self.info.tau

    @property
    def omega_f(self) -> float | None:
        return None if self.info is None else self.info.omega_f

    @property
    def n_cycles(self) -> int:
        if self.info is None or self.info.n_cycles is None:
            return 1
        return self.info.n_cycles

    @property
    def experiment_time(self) -> float:
        """Total irradiation time ``n N tau`` (resets and pi/2 pulses excluded)."""
        if self.info is None:
            return self.wall_time
        return self.n_cycles * self.info.n_pulses * self.info.tau


def _check(tau, n_pulses, omega_sl):
    if not (tau > 0 and math.isfinite(tau)):
        raise ValueError(f"tau must be > 0, got {tau}")
    if int(n_pulses) != n_pulses or n_pulses < 0:
        raise ValueError(f"n_pulses must be a non-negative integer, got {n_pulses}")
    if not (omega_sl >= 0 and math.isfinite(omega_sl)):
        raise ValueError(f"omega_sl must be finite and >= 0, got {omega_sl}")


def _body(info: SequenceInfo) -> list:
    half = SLPulse(info.tau / 2, info.omega_sl, info.sl_phase)
    if info.variant == "rnovel":
        unit = [half, InstantRotation(info.pi_angle, info.sl_phase, REFOCUS), half]
    elif info.variant == "novel":
        unit = [half, half]
    else:
        raise ValueError(f"unknown variant {info.variant!r}")
    return unit * int(info.n_pulses)


def build_from_info(info: SequenceInfo) -> PulseSequence:
    _check(info.tau, info.n_pulses, info.omega_sl)
    prep = InstantRotation(math.pi / 2, info.prep_phase, PREP)
    detect = InstantRotation(math.pi / 2, info.detect_phase, READOUT)
    if info.n_cycles is None:
        return PulseSequence(tuple([prep] + _body(info) + [detect]), info)
    if int(info.n_cycles) != info.n_cycles or info.n_cycles < 1:
        raise ValueError(f"n_cycles must be a positive integer, got {info.n_cycles}")
    cycle = [prep] + _body(info) + [detect, LaserReset()]
    return PulseSequence(tuple(cycle * int(info.n_cycles)), info)


def build_rnovel(
    tau: float,
    n_pulses: int,
    omega_sl: float,
    sl_phase: float = 0.0,
    prep_phase: float = math.pi / 2,
    detect_phase: float = -math.pi / 2,
    pi_angle: float = math.pi,
) -> PulseSequence:
    """Refocused NOVEL: ``pi/2 - N x [SL(tau/2) - pi - SL(tau/2)] - pi/2``.

    ``pi_angle`` exists to test the NOVEL limit; leave it at pi otherwise.
    """
    return build_from_info(
        SequenceInfo("rnovel", tau, int(n_pulses), omega_sl, sl_phase, prep_phase, detect_phase, pi_angle)
    )


def build_novel(
    tau: float,
    n_pulses: int,
    omega_sl: float,
    sl_phase: float = 0.0,
    prep_phase: float = math.pi / 2,
    detect_phase: float = -math.pi / 2,
) -> PulseSequence:
    """Plain NOVEL with the same timing as :func:`build_rnovel` but no pi pulses."""
    return build_from_info(
        SequenceInfo("novel", tau, int(n_pulses), omega_sl, sl_phase, prep_phase, detect_phase)
    )


def build_repeated(inner: PulseSequence, n_cycles: int) -> PulseSequence:
    """Repeat ``inner`` ``n_cycles`` times, each cycle closed by readout and a laser reset.

    One cycle is ``[prep, body, detect, reset]``; the reset re-polarizes the NV
    and leaves the nucleus alone, so the nuclear polarization accumulates.
    """
    if inner.info is None:
        raise ValueError("build_repeated needs a sequence produced by build_rnovel/build_novel")
    return build_from_info(replace(inner.info, n_cycles=int(n_cycles)))


def rebuild(seq: PulseSequence, **changes) -> PulseSequence:
    """Rebuild ``seq`` from its builder inputs with some of them replaced."""
    if seq.info is None:
        raise ValueError("sequence has no builder info and cannot be rebuilt")
    return build_from_info(replace(seq.info, **changes))


def invert_phases(seq: PulseSequence, target: str) -> PulseSequence:
    """Add pi to the readout phase (``"detect"``) or to every spin-lock and refocusing phase (``"sl_block"``).

    Applying the same inversion twice restores the original phases up to 2 pi.
    """
    if target not in ("detect", "sl_block"):
        raise ValueError(f"target must be 'detect' or 'sl_block', got {target!r}")

    def shift(phase):
        return math.remainder(phase + math.pi, 2 * math.pi)

    segs = []
    for s in seq.segments:
        if target == "detect" and isinstance(s, InstantRotation) and s.role == READOUT:
            s = replace(s, phase=shift(s.phase))
        elif target == "sl_block" and isinstance(s, SLPulse):
            s = replace(s, phase=shift(s.phase))
        elif target == "sl_block" and isinstance(s, InstantRotation) and s.role == REFOCUS:
            s = replace(s, phase=shift(s.phase))
        segs.append(s)
    info = seq.info
    if info is not None:
        if target == "detect":
            info = replace(info, detect_phase=shift(info.detect_phase))
        else:
            info = replace(info, sl_phase=shift(info.sl_phase))
    return PulseSequence(tuple(segs), info)
