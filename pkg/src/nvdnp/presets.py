"""Built-in sweep and buildup configurations (``nvdnp reproduce``).

Noise presets use two OU components (11 and 150 us) with a stationary standard
deviation of 1.0 rad/us each for ``b``. This is a calibration choice: a strength
of 2*pi*0.5 rad/us per component washes the transfer out almost completely
(max |<I_z>| near 0.05 for both sequences). The README has the numbers.
"""

from __future__ import annotations

import copy
import math

from nvdnp.config import AxisSection, Config, NoiseComponent, NoiseSection, SequenceSection, SweepSection

FIGURES = ("fig2", "fig3", "fig4", "fig5")
SCALES = ("full", "desk")

#: Grid coarsening per axis and Monte Carlo realizations at desk scale.
DESK_COARSEN = 4
DESK_REALIZATIONS = 30

NOISE_TAU_C_US = (11.0, 150.0)
NOISE_STD_RAD_PER_US = 1.0
NOISE_DT_US = 0.1
FULL_REALIZATIONS = 100

FIG5_N_PULSES = (4, 8, 16, 32, 64)
FIG5_OMEGA_SL_MHZ = {"rnovel": 1.348, "novel": 0.126}
FIG5_TOTAL_TIME_US = 5000.0


def _grid(start, stop, step):
    n = int(round((stop - start) / step)) + 1
    return [round(start + i * step, 10) for i in range(n)]


def _coarsen(values):
    out = list(values[::DESK_COARSEN])
    if out[-1] != values[-1]:
        out.append(values[-1])
    return out


def standard_noise(realizations: int = FULL_REALIZATIONS) -> NoiseSection:
    return NoiseSection(
        dt_us=NOISE_DT_US,
        realizations=realizations,
        components=[NoiseComponent(tc, NOISE_STD_RAD_PER_US) for tc in NOISE_TAU_C_US],
    )


def _sweep_config(variant, axis1, axis2, noisy, scale, n_pulses=60):
    if scale == "desk":
        axis1 = AxisSection(axis1.name, _coarsen(axis1.values))
        axis2 = AxisSection(axis2.name, _coarsen(axis2.values))
    cfg = Config(sequence=SequenceSection(variant=variant, tau_us=2.0, n_pulses=n_pulses))
    cfg.sweep = SweepSection(axis1, axis2)
    cfg.output.record_mode = "final_only"
    if noisy:
        cfg.noise = standard_noise(DESK_REALIZATIONS if scale == "desk" else FULL_REALIZATIONS)
    return cfg


def sweep_presets(figure: str, scale: str = "full") -> dict[str, Config]:
    """Named sweep configurations for fig2, fig3 and fig4."""
    if scale not in SCALES:
        raise ValueError(f"scale must be one of {SCALES}")
    omega_sl = AxisSection("omega_sl_mhz", _grid(0.0, 1.5, 0.01))
    n_axis = AxisSection("n_pulses", list(range(1, 61)))
    if figure == "fig2":
        omega_f = AxisSection("omega_f_mhz", _grid(0.05, 1.0, 0.01))
        return {"fig2": _sweep_config("rnovel", omega_f, omega_sl, False, scale)}
    if figure in ("fig3", "fig4"):
        noisy = figure == "fig4"
        return {
            f"{figure}_{v}": _sweep_config(v, copy.deepcopy(omega_sl), copy.deepcopy(n_axis), noisy, scale)
            for v in ("rnovel", "novel")
        }
    raise ValueError(f"unknown sweep figure {figure!r}")


def buildup_presets(scale: str = "full") -> dict[str, Config]:
    """Repeated-cycle configurations for fig5, one per (variant, N)."""
    if scale not in SCALES:
        raise ValueError(f"scale must be one of {SCALES}")
    out = {}
    for variant, w in FIG5_OMEGA_SL_MHZ.items():
        for n in FIG5_N_PULSES:
            cfg = Config(
                sequence=SequenceSection(
                    variant=variant,
                    tau_us=2.0,
                    n_pulses=n,
                    omega_sl_mhz=w,
                    n_cycles=max(1, math.ceil(FIG5_TOTAL_TIME_US / (2.0 * n))),
                )
            )
            cfg.noise = standard_noise(DESK_REALIZATIONS if scale == "desk" else FULL_REALIZATIONS)
            out[f"fig5_{variant}_N{n}"] = cfg
    return out
