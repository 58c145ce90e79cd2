"""Simulation of NV-center driven nuclear polarization with NOVEL and refocused NOVEL."""

from nvdnp.quantum import SpinSystemParams, initial_state, expect_iz, expect_sz
from nvdnp.noise import NoiseComponentSpec, NoiseTrajectory, sample_trajectory
from nvdnp.sequence import PulseSequence, build_novel, build_repeated, build_rnovel
from nvdnp.engine import RunConfig, Trajectory, SweepResult, run_once, run_monte_carlo, sweep_2d

__version__ = "0.1.0"

__all__ = [
    "SpinSystemParams",
    "initial_state",
    "expect_sz",
    "expect_iz",
    "NoiseComponentSpec",
    "NoiseTrajectory",
    "sample_trajectory",
    "PulseSequence",
    "build_rnovel",
    "build_novel",
    "build_repeated",
    "RunConfig",
    "Trajectory",
    "SweepResult",
    "run_once",
    "run_monte_carlo",
    "sweep_2d",
]
