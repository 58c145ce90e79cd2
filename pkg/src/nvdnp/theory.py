"""Average-Hamiltonian picture of refocused NOVEL.

In the toggling frame of the ideal pi pulses the traceless part of the NV
``S_z`` is multiplied by a square wave ``s(t)`` of period ``2 tau``. Keeping one
Fourier component ``k`` of ``s(t)`` in a frame rotating at ``k omega_f`` about the
drive axis gives a static effective Hamiltonian whose drive is reduced to
``Omega_k = Omega_SL - k omega_f`` and whose NV couplings are scaled by ``s_k``.
Polarization transfer needs ``Omega_k = +-omega_n``, i.e.
``Omega_SL = k omega_f +- omega_n``.

Only the traceless part ``S_z + 1/2`` is modulated. The constant ``-1/2`` part of
``S_z = diag(0, -1)`` is untouched by pi pulses; it is what shifts the nuclear
frequency to ``omega_n0 + A_par/2`` and adds a static transverse nuclear field
``-(A_perp I+ + h.c.)/4``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from nvdnp import quantum as q

KINDS = ("nv_inversion", "transfer_plus", "transfer_minus")

# Traceless NV z operator, diag(1/2, -1/2) on {|0>, |-1>}.
_TZ = q.SZ + 0.5 * np.eye(4)


def square_wave(t, tau: float):
    """Toggling-frame sign: +1 on [0, tau/2), -1 on [tau/2, 3tau/2), +1 on [3tau/2, 2tau), period 2 tau."""
    if not tau > 0:
        raise ValueError("tau must be > 0")
    x = np.mod(np.asarray(t, dtype=float), 2.0 * tau)
    s = np.where((x >= 0.5 * tau) & (x < 1.5 * tau), -1.0, 1.0)
    return s if s.ndim else float(s)


def fourier_coeff(k: int) -> float:
    """``s_k = 2 (-1)^((k-1)/2) / (pi k)`` for odd ``k``."""
    if int(k) != k or k % 2 == 0:
        raise ValueError(f"k must be an odd integer, got {k}")
    k = int(k)
    sign = -1.0 if ((k - 1) // 2) % 2 else 1.0
    return 2.0 * sign / (math.pi * k)


def nuclear_freq(params: q.SpinSystemParams) -> float:
    """First-order hyperfine-shifted nuclear frequency."""
    return params.omega_n0 + 0.5 * params.a_par


@dataclass(frozen=True)
class Resonance:
    k: int
    kind: str
    omega_sl: float


def predict_resonances(omega_f: float, params: q.SpinSystemParams, k_max: int) -> list[Resonance]:
    """Drive amplitudes where rNOVEL inverts the NV (``k omega_f``) or transfers polarization (``k omega_f +- omega_n``).

    Entries are ordered by ``k`` then kind; negative amplitudes are dropped.
    ``k_max < 1`` gives an empty table.
    """
    wn = nuclear_freq(params)
    table = []
    for k in range(1, int(k_max) + 1, 2):
        for kind, w in (
            ("nv_inversion", k * omega_f),
            ("transfer_minus", k * omega_f - wn),
            ("transfer_plus", k * omega_f + wn),
        ):
            if w >= 0:
                table.append(Resonance(k, kind, w))
    return table


def effective_hamiltonian(
    params: q.SpinSystemParams,
    k: int,
    omega_sl: float,
    omega_f: float,
    b_value: float = 0.0,
    iz_sign: float | None = None,
) -> np.ndarray:
    """Static Hamiltonian of the ``k``-th rNOVEL condition, 4x4 in the quantum-core basis.

    ``iz_sign`` (+1/2 or -1/2) replaces the operator ``A_par I_z`` inside the
    effective detuning by the scalar ``A_par * iz_sign``; ``None`` keeps the
    operator. Stroboscopically (at multiples of ``2 tau``) the frame coincides
    with the lab frame.
    """
    sk = fourier_coeff(k)
    omega_k = omega_sl - k * omega_f
    a = params.a_perp
    transverse = a * q.IP + np.conj(a) * q.IM
    if iz_sign is None:
        detuning = (params.delta_e + b_value) * np.eye(4) + params.a_par * q.IZ
    else:
        if abs(abs(iz_sign) - 0.5) > 1e-12:
            raise ValueError("iz_sign must be +1/2 or -1/2")
        detuning = (params.delta_e + b_value + params.a_par * iz_sign) * np.eye(4)
    return (
        sk * (detuning @ _TZ + 0.5 * transverse @ _TZ)
        - nuclear_freq(params) * q.IZ
        - 0.25 * transverse
        + omega_k * q.drive_operator(0.0)
    )


def decoupling_margin(
    params: q.SpinSystemParams, k: int, omega_sl: float, omega_f: float, delta_noise: float = 0.0
) -> float:
    """``|s_k| (|Delta_e| + |A_par|/2 + delta_noise) / |Omega_k|``; small means well decoupled.

    ``delta_noise`` stands in for ``|b(t)|``. Returns ``inf`` on the inversion line.
    """
    omega_k = omega_sl - k * omega_f
    num = abs(fourier_coeff(k)) * (abs(params.delta_e) + 0.5 * abs(params.a_par) + delta_noise)
    if omega_k == 0:
        return 0.0 if num == 0 else math.inf
    return num / abs(omega_k)


def effective_iz(params: q.SpinSystemParams, k: int, omega_sl: float, omega_f: float, times) -> np.ndarray:
    """Nuclear polarization under the effective Hamiltonian, starting from the prepared state."""
    h = effective_hamiltonian(params, k, omega_sl, omega_f)
    prep = q.instant_rotation(math.pi / 2, math.pi / 2)
    rho0 = q.apply_unitary(q.initial_state(), prep)
    us = q.propagator(np.broadcast_to(h, (len(times), 4, 4)), np.asarray(times, dtype=float))
    return q.expect_iz(q.apply_unitary(rho0, us))
