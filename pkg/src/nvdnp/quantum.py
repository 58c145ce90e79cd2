"""Operators, states and exact propagation for an NV two-level subspace coupled to a spin-1/2 nucleus.

Basis ordering (fixed, everything depends on it)::

    index 0: |0, up>    index 1: |0, down>
    index 2: |-1, up>   index 3: |-1, down>

The NV operators are the spin-1 operators projected onto {|0>, |-1>}, so
``S_z = diag(0, -1)`` and ``<0|S_x|-1> = 1/sqrt(2)``. With the drive written as
``Omega/sqrt(2) * S_x`` the two-level Rabi frequency equals ``Omega``.

All functions accept stacked arrays (leading batch axes) where it makes sense,
so that many noise realizations can be propagated at once.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from nvdnp.units import GAMMA_C13_MHZ_PER_GAUSS, TWO_PI

SQRT2 = math.sqrt(2.0)

_SZ2 = np.diag([0.0, -1.0]).astype(complex)
_SX2 = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex) / SQRT2
_SY2 = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex) / SQRT2
_IZ2 = np.diag([0.5, -0.5]).astype(complex)
_IP2 = np.array([[0.0, 1.0], [0.0, 0.0]], dtype=complex)
_IM2 = _IP2.T.copy()
_ID2 = np.eye(2, dtype=complex)

SZ = np.kron(_SZ2, _ID2)
SX = np.kron(_SX2, _ID2)
SY = np.kron(_SY2, _ID2)
IZ = np.kron(_ID2, _IZ2)
IP = np.kron(_ID2, _IP2)
IM = np.kron(_ID2, _IM2)

# Projectors onto the NV |0> and |-1> sublevels.
P0 = np.kron(np.diag([1.0, 0.0]), _ID2).astype(complex)
PM1 = np.kron(np.diag([0.0, 1.0]), _ID2).astype(complex)

for _op in (SZ, SX, SY, IZ, IP, IM, P0, PM1):
    _op.setflags(write=False)

HERMITIAN_RTOL = 1e-12


@dataclass(frozen=True)
class SpinSystemParams:
    """Physical constants of the NV-nucleus pair, angular frequencies in rad/us.

    Attributes
    ----------
    delta_e : float
        Microwave detuning of the NV transition.
    omega_n0 : float
        Bare nuclear Larmor frequency (non-negative).
    a_par : float
        Secular hyperfine coupling.
    a_perp : complex
        Pseudo-secular hyperfine coupling.
    """

    delta_e: float
    omega_n0: float
    a_par: float
    a_perp: complex = field(default=0.0)

    def __post_init__(self):
        object.__setattr__(self, "a_perp", complex(self.a_perp))
        values = (self.delta_e, self.omega_n0, self.a_par, self.a_perp.real, self.a_perp.imag)
        if not all(math.isfinite(v) for v in values):
            raise ValueError(f"spin system parameters must be finite, got {self}")
        if self.omega_n0 < 0:
            raise ValueError(f"omega_n0 must be >= 0, got {self.omega_n0}")

    @property
    def omega_n(self) -> float:
        """Hyperfine-shifted nuclear frequency ``omega_n0 + a_par / 2``."""
        return self.omega_n0 + 0.5 * self.a_par

    @classmethod
    def from_mhz(
        cls,
        delta_e_mhz: float,
        a_par_mhz: float,
        a_perp_mhz: float,
        *,
        a_perp_phase_rad: float = 0.0,
        omega_n0_mhz: float | None = None,
        b_field_gauss: float | None = None,
        gamma_n_mhz_per_gauss: float = GAMMA_C13_MHZ_PER_GAUSS,
    ) -> "SpinSystemParams":
        """Build from ordinary frequencies in MHz.

        Exactly one of ``omega_n0_mhz`` and ``b_field_gauss`` must be given.
        """
        if (omega_n0_mhz is None) == (b_field_gauss is None):
            raise ValueError("give exactly one of omega_n0_mhz and b_field_gauss")
        if omega_n0_mhz is None:
            omega_n0_mhz = b_field_gauss * gamma_n_mhz_per_gauss
        a_perp = TWO_PI * a_perp_mhz * complex(math.cos(a_perp_phase_rad), math.sin(a_perp_phase_rad))
        return cls(
            delta_e=TWO_PI * delta_e_mhz,
            omega_n0=TWO_PI * omega_n0_mhz,
            a_par=TWO_PI * a_par_mhz,
            a_perp=a_perp,
        )

    @classmethod
    def nv13c_defaults(cls) -> "SpinSystemParams":
        """NV-13C pair used throughout: A_par = 30 kHz, A_perp = Delta_e = 40 kHz, 80 G."""
        return cls.from_mhz(0.04, 0.03, 0.04, b_field_gauss=80.0)


def _embed(op2: np.ndarray, which: str, dim: int) -> np.ndarray:
    if dim == 2:
        return op2.copy()
    if dim == 4:
        return np.kron(op2, _ID2) if which == "nv" else np.kron(_ID2, op2)
    raise ValueError(f"dim must be 2 or 4, got {dim}")


def nv_operators(dim: int = 2) -> tuple[np.ndarray, np.ndarray]:
    """Return the projected spin-1 operators ``(S_z, S_x)``.

    ``dim=4`` gives them tensored with the nuclear identity.
    """
    return _embed(_SZ2, "nv", dim), _embed(_SX2, "nv", dim)


def nv_sy(dim: int = 2) -> np.ndarray:
    return _embed(_SY2, "nv", dim)


def nuclear_operators(dim: int = 2) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Return ``(I_z, I_plus, I_minus)`` for the spin-1/2 nucleus."""
    return _embed(_IZ2, "nuc", dim), _embed(_IP2, "nuc", dim), _embed(_IM2, "nuc", dim)


def static_hamiltonian(params: SpinSystemParams) -> np.ndarray:
    """The drive- and noise-free part of the Hamiltonian."""
    a = params.a_perp
    return (
        params.delta_e * SZ
        - params.omega_n0 * IZ
        + params.a_par * (SZ @ IZ)
        + 0.5 * (SZ @ (a * IP + np.conj(a) * IM))
    )


def drive_operator(mw_phase: float) -> np.ndarray:
    """``(S_x cos(phase) + S_y sin(phase)) / sqrt(2)``; multiply by Omega_SL."""
    return (math.cos(mw_phase) * SX + math.sin(mw_phase) * SY) / SQRT2


def assemble_hamiltonian(
    params: SpinSystemParams,
    omega_sl: float = 0.0,
    mw_phase: float = 0.0,
    b_value=0.0,
) -> np.ndarray:
    """Rotating-frame Hamiltonian of the NV-nucleus pair under a spin-lock drive.

    ``H = Delta_e S_z - omega_n0 I_z + A_par S_z I_z + S_z (A_perp I+ + A_perp* I-)/2
    + b S_z + Omega_SL/sqrt(2) (S_x cos phi + S_y sin phi)``.

    Ideal pulses are not part of H; they are applied as instantaneous rotations.
    ``b_value`` may be an array, in which case a stack of Hamiltonians with shape
    ``b_value.shape + (4, 4)`` is returned.
    """
    b = np.asarray(b_value, dtype=float)
    if not (math.isfinite(omega_sl) and math.isfinite(mw_phase)) or not np.all(np.isfinite(b)):
        raise ValueError("Hamiltonian inputs must be finite")
    if omega_sl < 0:
        raise ValueError(f"omega_sl must be >= 0, got {omega_sl}")
    h = static_hamiltonian(params) + omega_sl * drive_operator(mw_phase)
    if b.ndim == 0:
        return h + float(b) * SZ
    return h + b[..., None, None] * SZ


def _dagger(a: np.ndarray) -> np.ndarray:
    return np.conj(np.swapaxes(a, -1, -2))


def is_hermitian(h: np.ndarray, rtol: float = HERMITIAN_RTOL) -> bool:
    scale = max(float(np.max(np.abs(h))), 1.0)
    return bool(np.max(np.abs(h - _dagger(h))) <= rtol * scale)


def propagator(h: np.ndarray, dt) -> np.ndarray:
    """Exact ``exp(-i H dt)`` of a Hermitian H (or a stack of them) by eigendecomposition.

    ``dt`` is a scalar or an array broadcastable against the batch shape of ``h``.
    """
    h = np.asarray(h)
    if not is_hermitian(h):
        raise ValueError("propagator requires a Hermitian matrix")
    dt = np.asarray(dt, dtype=float)
    if np.any(dt < 0):
        raise ValueError("dt must be >= 0")
    w, v = np.linalg.eigh(h)
    phases = np.exp(-1j * w * dt[..., None])
    return (v * phases[..., None, :]) @ _dagger(v)


def apply_unitary(rho: np.ndarray, u: np.ndarray) -> np.ndarray:
    """``U rho U^dagger``."""
    return u @ rho @ _dagger(u)


def instant_rotation(angle: float, phase: float) -> np.ndarray:
    """Ideal NV rotation by ``angle`` about ``(cos phase, sin phase, 0)``.

    An angle of pi swaps the |0> and |-1> populations. The nucleus is untouched.
    """
    c, s = math.cos(angle / 2.0), math.sin(angle / 2.0)
    e = complex(math.cos(phase), math.sin(phase))
    r2 = np.array([[c, -1j * s * np.conj(e)], [-1j * s * e, c]], dtype=complex)
    return np.kron(r2, _ID2)


def initial_state() -> np.ndarray:
    """NV in |0>, nucleus fully mixed."""
    return np.kron(np.diag([1.0, 0.0]), _ID2 / 2.0).astype(complex)


def nuclear_reduced_state(rho: np.ndarray) -> np.ndarray:
    """Partial trace over the NV, returns the 2x2 (or stacked) nuclear state."""
    rho = np.asarray(rho)
    r = rho.reshape(rho.shape[:-2] + (2, 2, 2, 2))
    return r[..., 0, :, 0, :] + r[..., 1, :, 1, :]


def laser_reset(rho: np.ndarray) -> np.ndarray:
    """Re-polarize the NV into |0> and keep the nuclear reduced state."""
    rho = np.asarray(rho)
    out = np.zeros(rho.shape, dtype=complex)
    out[..., :2, :2] = nuclear_reduced_state(rho)
    return out


def expect_sz(rho: np.ndarray):
    """NV population difference ``p_0 - p_-1``."""
    d = np.real(np.diagonal(rho, axis1=-2, axis2=-1))
    return d[..., 0] + d[..., 1] - d[..., 2] - d[..., 3]


def expect_iz(rho: np.ndarray):
    """Nuclear polarization ``2 Tr(I_z rho)``."""
    d = np.real(np.diagonal(rho, axis1=-2, axis2=-1))
    return d[..., 0] - d[..., 1] + d[..., 2] - d[..., 3]


def density_matrix_violation(rho: np.ndarray) -> float:
    """Largest deviation from a valid density matrix over a stack.

    Returns the max of |tr - 1|, the Hermiticity defect, and the most negative
    eigenvalue (clipped at zero).
    """
    rho = np.asarray(rho)
    tr = np.abs(np.trace(rho, axis1=-2, axis2=-1) - 1.0)
    herm = np.max(np.abs(rho - _dagger(rho)), axis=(-2, -1))
    neg = np.clip(-np.linalg.eigvalsh(0.5 * (rho + _dagger(rho)))[..., 0], 0.0, None)
    return float(np.max(np.maximum(np.maximum(tr, herm), neg)))
