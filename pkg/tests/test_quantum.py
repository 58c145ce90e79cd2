import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nvdnp import quantum as q
from nvdnp.units import TWO_PI

from .conftest import random_density_matrix, random_hermitian
from .oracles import expm_taylor, partial_trace_nv_loops

finite = st.floats(min_value=-5.0, max_value=5.0, allow_nan=False)
nonneg = st.floats(min_value=0.0, max_value=5.0, allow_nan=False)


def test_nv_operators_matrix_elements():
    sz, sx = q.nv_operators()
    ket0, ketm1 = np.array([1, 0]), np.array([0, 1])
    assert np.allclose(sz @ ket0, 0)
    assert np.allclose(sz @ ketm1, -ketm1)
    assert sx[0, 1] == pytest.approx(1 / math.sqrt(2))
    assert np.allclose(np.diag(sx), 0)
    sz4, sx4 = q.nv_operators(dim=4)
    assert np.array_equal(sz4, q.SZ) and np.array_equal(sx4, q.SX)


def test_sx_generates_population_swap():
    # S_x = sigma_x / sqrt(2), so exp(-i pi/sqrt(2) S_x) is a pi rotation
    _, sx = q.nv_operators()
    u = expm_taylor(-1j * (math.pi / math.sqrt(2)) * sx)
    swapped = u @ np.diag([1.0, 0.0]) @ u.conj().T
    assert np.allclose(np.diag(swapped).real, [0.0, 1.0], atol=1e-12)


def test_nuclear_operators():
    iz, ip, im = q.nuclear_operators()
    up, down = np.array([1, 0]), np.array([0, 1])
    assert np.allclose(iz @ up, 0.5 * up)
    assert np.allclose(ip @ down, up)
    assert np.allclose(ip @ up, 0)
    assert np.allclose(im, ip.T)
    assert np.allclose(iz @ ip - ip @ iz, ip)


def test_zero_hamiltonian():
    p = q.SpinSystemParams(0.0, 0.0, 0.0, 0.0)
    assert np.array_equal(q.assemble_hamiltonian(p, 0.0, 0.0, 0.0), np.zeros((4, 4)))


def test_hamiltonian_diagonal_element():
    p = q.SpinSystemParams(delta_e=0.3, omega_n0=0.5, a_par=0.2, a_perp=0.1)
    b = 0.7
    h = q.assemble_hamiltonian(p, 0.0, 0.0, b)
    # |-1, up> is index 2
    assert h[2, 2].real == pytest.approx(-p.delta_e - p.omega_n0 / 2 - p.a_par / 2 - b, abs=1e-15)


def test_hamiltonian_eigenvalues_match_bruteforce(nv_params):
    h = q.assemble_hamiltonian(nv_params, TWO_PI * 0.35, 0.3, 0.0)
    ours = np.linalg.eigvalsh(h)
    # brute force: build H element by element from the defining formula
    p = nv_params
    ref = np.zeros((4, 4), dtype=complex)
    for i, (m, s) in enumerate([(0, 0.5), (0, -0.5), (-1, 0.5), (-1, -0.5)]):
        ref[i, i] = p.delta_e * m - p.omega_n0 * s + p.a_par * m * s
    # pseudo-secular only acts within m = -1
    ref[2, 3] += 0.5 * (-1) * p.a_perp
    ref[3, 2] += 0.5 * (-1) * np.conj(p.a_perp)
    w, phi = TWO_PI * 0.35, 0.3
    for nuc in range(2):
        ref[nuc, 2 + nuc] += w / 2 * np.exp(-1j * phi)
        ref[2 + nuc, nuc] += w / 2 * np.exp(1j * phi)
    ref_eigs = np.sort(np.roots(np.poly(ref)).real)
    assert np.allclose(ours, ref_eigs, rtol=1e-10, atol=1e-12)


def test_hamiltonian_rejects_non_finite(nv_params):
    with pytest.raises(ValueError):
        q.assemble_hamiltonian(nv_params, float("nan"))
    with pytest.raises(ValueError):
        q.assemble_hamiltonian(nv_params, 1.0, 0.0, float("inf"))
    with pytest.raises(ValueError):
        q.assemble_hamiltonian(nv_params, -1.0)


def test_params_validation_and_omega_n():
    with pytest.raises(ValueError):
        q.SpinSystemParams(0.0, -1.0, 0.0)
    with pytest.raises(ValueError):
        q.SpinSystemParams(float("nan"), 1.0, 0.0)
    p = q.SpinSystemParams(0.1, 0.5, 0.2, 0.3)
    assert p.omega_n == 0.5 + 0.1
    assert isinstance(p.a_perp, complex)


def test_propagator_identity_and_diagonal():
    rng = np.random.default_rng(0)
    h = random_hermitian(rng)
    assert np.allclose(q.propagator(h, 0.0), np.eye(4), atol=1e-14)
    eps = np.array([0.3, -1.2, 2.5, 0.0])
    u = q.propagator(np.diag(eps).astype(complex), 0.7)
    assert np.allclose(u, np.diag(np.exp(-1j * eps * 0.7)), atol=1e-14)


def test_propagator_matches_series_oracle():
    rng = np.random.default_rng(1)
    for _ in range(10):
        h = random_hermitian(rng, scale=3.0)
        dt = rng.uniform(0.1, 2.0)
        assert np.max(np.abs(q.propagator(h, dt) - expm_taylor(-1j * h * dt))) < 1e-10


def test_propagator_rejects_non_hermitian():
    with pytest.raises(ValueError):
        q.propagator(np.array([[0, 1], [0, 0]], dtype=complex), 1.0)
    with pytest.raises(ValueError):
        q.propagator(np.eye(2), -1.0)


def test_apply_unitary_basics():
    rng = np.random.default_rng(2)
    rho = random_density_matrix(rng)
    assert np.array_equal(q.apply_unitary(rho, np.eye(4)), rho)
    swap = np.eye(4)[[2, 3, 0, 1]]
    diag = np.diag([0.1, 0.2, 0.3, 0.4]).astype(complex)
    assert np.allclose(np.diag(q.apply_unitary(diag, swap)).real, [0.3, 0.4, 0.1, 0.2])
    u = q.propagator(random_hermitian(rng), 0.9)
    assert abs(np.trace(q.apply_unitary(rho, u)) - np.trace(rho)) < 1e-12


def test_instant_rotation():
    assert np.allclose(q.instant_rotation(0.0, 1.3), np.eye(4))
    flipped = q.apply_unitary(q.initial_state(), q.instant_rotation(math.pi, 0.0))
    expected = np.kron(np.diag([0.0, 1.0]), np.eye(2) / 2)
    assert np.allclose(flipped, expected, atol=1e-15)
    half = q.instant_rotation(math.pi / 2, 0.4)
    assert np.allclose(half @ half, q.instant_rotation(math.pi, 0.4), atol=1e-15)


def test_rotation_generated_by_drive_operator():
    # the drive with amplitude Omega for time t is a rotation by Omega t
    phase, angle = 0.7, 1.1
    u = q.propagator(q.drive_operator(phase), angle)
    assert np.allclose(u, q.instant_rotation(angle, phase), atol=1e-13)


def test_initial_state():
    rho = q.initial_state()
    assert q.expect_sz(rho) == 1.0
    assert q.expect_iz(rho) == 0.0
    assert np.trace(rho).real == pytest.approx(1.0)
    assert np.trace(rho @ rho).real == pytest.approx(0.5)


def test_laser_reset():
    rho0 = q.initial_state()
    assert np.allclose(q.laser_reset(rho0), rho0)
    rng = np.random.default_rng(3)
    rho = random_density_matrix(rng)
    reset = q.laser_reset(rho)
    assert q.expect_iz(reset) == pytest.approx(q.expect_iz(rho), abs=1e-14)
    assert q.expect_sz(reset) == pytest.approx(1.0)
    assert np.allclose(q.nuclear_reduced_state(rho), partial_trace_nv_loops(rho))


def test_laser_reset_of_entangled_state():
    # (|0,up> + |-1,down>)/sqrt(2)
    psi = np.zeros(4, dtype=complex)
    psi[0] = psi[3] = 1 / math.sqrt(2)
    rho = np.outer(psi, psi.conj())
    nuc = partial_trace_nv_loops(rho)
    assert np.allclose(nuc, np.eye(2) / 2)
    expected = np.kron(np.diag([1.0, 0.0]), nuc)
    assert np.allclose(q.laser_reset(rho), expected)


def test_expectations():
    r = np.kron(np.diag([0.0, 1.0]), np.diag([1.0, 0.0])).astype(complex)
    assert q.expect_sz(r) == -1.0
    assert q.expect_iz(r) == 1.0
    mixed = np.eye(4) / 4
    assert q.expect_sz(mixed) == 0.0 and q.expect_iz(mixed) == 0.0


@settings(max_examples=60, deadline=None)
@given(finite, nonneg, finite, finite, finite, nonneg, finite, finite)
def test_hamiltonian_hermitian_property(de, wn0, apar, aperp_re, aperp_im, w, phi, b):
    p = q.SpinSystemParams(de, wn0, apar, complex(aperp_re, aperp_im))
    h = q.assemble_hamiltonian(p, w, phi, b)
    assert np.max(np.abs(h - h.conj().T)) <= 1e-12 * max(np.abs(h).max(), 1.0)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(0.0, 10.0), st.floats(0.0, 10.0))
def test_propagator_unitary_and_semigroup(seed, dt1, dt2):
    h = random_hermitian(np.random.default_rng(seed), scale=2.0)
    u1, u2, u12 = q.propagator(h, dt1), q.propagator(h, dt2), q.propagator(h, dt1 + dt2)
    assert np.max(np.abs(u1.conj().T @ u1 - np.eye(4))) < 1e-10
    assert np.max(np.abs(u1 @ u2 - u12)) < 1e-10


@settings(max_examples=40, deadline=None)
@given(finite, nonneg, finite, nonneg, finite, finite, st.floats(0.0, 5.0))
def test_iz_conserved_without_pseudo_secular(de, wn0, apar, w, phi, b, t):
    p = q.SpinSystemParams(de, wn0, apar, 0.0)
    h = q.assemble_hamiltonian(p, w, phi, b)
    assert np.max(np.abs(h @ q.IZ - q.IZ @ h)) < 1e-12 * max(np.abs(h).max(), 1.0)
    rho = q.apply_unitary(q.initial_state(), q.instant_rotation(math.pi / 2, phi))
    rho = q.apply_unitary(rho, q.propagator(h, t))
    assert abs(q.expect_iz(rho)) < 1e-12


@settings(max_examples=40, deadline=None)
@given(finite, nonneg, finite, finite, st.floats(0.0, 5.0))
def test_nv_populations_static_without_drive(de, wn0, apar, aperp, t):
    p = q.SpinSystemParams(de, wn0, apar, aperp)
    rng = np.random.default_rng(0)
    rho = random_density_matrix(rng)
    out = q.apply_unitary(rho, q.propagator(q.assemble_hamiltonian(p), t))
    assert abs(q.expect_sz(out) - q.expect_sz(rho)) < 1e-10


def test_density_matrix_violation():
    assert q.density_matrix_violation(q.initial_state()) < 1e-15
    bad = np.diag([1.5, -0.5, 0, 0]).astype(complex)
    assert q.density_matrix_violation(bad) == pytest.approx(0.5)
