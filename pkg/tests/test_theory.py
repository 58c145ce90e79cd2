import math

import numpy as np
import pytest
from scipy.integrate import quad

from nvdnp import quantum as q
from nvdnp import theory
from nvdnp.engine import RunConfig, run_once
from nvdnp.sequence import build_rnovel
from nvdnp.units import TWO_PI


def test_fourier_coefficients_closed_form():
    assert theory.fourier_coeff(1) == pytest.approx(2 / math.pi)
    assert theory.fourier_coeff(3) == pytest.approx(-2 / (3 * math.pi))
    assert theory.fourier_coeff(5) == pytest.approx(2 / (5 * math.pi))
    with pytest.raises(ValueError):
        theory.fourier_coeff(2)


@pytest.mark.parametrize("k", [1, 3, 5, 7, 9])
def test_fourier_coefficients_by_quadrature(k):
    tau = 2.0
    w = math.pi / tau
    # s(t) = sum_k s_k (e^{ikwt} + e^{-ikwt}) -> s_k = (1/2tau) int s(t) cos(kwt) dt
    pts = [0.5 * tau, 1.5 * tau]
    val, _ = quad(lambda t: theory.square_wave(t, tau) * math.cos(k * w * t), 0, 2 * tau, points=pts)
    assert val / (2 * tau) == pytest.approx(theory.fourier_coeff(k), abs=1e-8)


def test_parseval():
    # mean of s(t)^2 is 1 = sum over +-k of s_k^2
    total = sum(2 * theory.fourier_coeff(k) ** 2 for k in range(1, 200_001, 2))
    assert total == pytest.approx(1.0, abs=1e-5)


def test_square_wave_shape():
    tau = 2.0
    assert theory.square_wave(0.0, tau) == 1.0
    assert theory.square_wave(0.99, tau) == 1.0
    assert theory.square_wave(1.0, tau) == -1.0
    assert theory.square_wave(2.9, tau) == -1.0
    assert theory.square_wave(3.0, tau) == 1.0
    assert theory.square_wave(4.5, tau) == theory.square_wave(0.5, tau)


def test_resonance_table(nv_params):
    wf = TWO_PI * 0.25
    wn = theory.nuclear_freq(nv_params)
    table = theory.predict_resonances(wf, nv_params, 5)
    assert [r.k for r in table] == [1, 1, 1, 3, 3, 3, 5, 5, 5]
    by = {(r.k, r.kind): r.omega_sl for r in table}
    assert by[(1, "nv_inversion")] == pytest.approx(wf)
    assert by[(3, "transfer_minus")] == pytest.approx(3 * wf - wn)
    assert by[(5, "transfer_plus")] == pytest.approx(5 * wf + wn)
    assert by[(1, "transfer_minus")] / TWO_PI == pytest.approx(0.1494, abs=1e-4)
    assert theory.predict_resonances(wf, nv_params, 0) == []


def test_resonance_table_drops_negative_amplitudes(nv_params):
    wn = theory.nuclear_freq(nv_params)
    table = theory.predict_resonances(0.5 * wn, nv_params, 1)
    assert {r.kind for r in table} == {"nv_inversion", "transfer_plus"}


def test_effective_hamiltonian_is_hermitian(nv_params):
    h = theory.effective_hamiltonian(nv_params, 3, 2.0, 0.8, b_value=0.3)
    assert q.is_hermitian(h)


def test_effective_hamiltonian_without_couplings():
    p = q.SpinSystemParams(0.0, 0.4, 0.0, 0.0)
    wf, w = 0.9, 1.7
    h = theory.effective_hamiltonian(p, 1, w, wf)
    expected = -0.4 * q.IZ + (w - wf) * q.drive_operator(0.0)
    assert np.allclose(h, expected)


def test_iz_sign_substitution(nv_params):
    full = theory.effective_hamiltonian(nv_params, 1, 1.0, 1.5)
    up = theory.effective_hamiltonian(nv_params, 1, 1.0, 1.5, iz_sign=0.5)
    # the two agree on the nuclear spin-up block
    up_idx = [0, 2]
    full_diag = full[np.ix_(up_idx, up_idx)]
    up_diag = up[np.ix_(up_idx, up_idx)]
    assert np.allclose(full_diag, up_diag)
    with pytest.raises(ValueError):
        theory.effective_hamiltonian(nv_params, 1, 1.0, 1.5, iz_sign=1.0)


def test_decoupling_margin(nv_params):
    wf = TWO_PI * 0.25
    wn = theory.nuclear_freq(nv_params)
    m1 = theory.decoupling_margin(nv_params, 1, wf + wn, wf)
    m5 = theory.decoupling_margin(nv_params, 5, 5 * wf + wn, wf)
    # same |Omega_k| = omega_n, so the ratio is |s_1 / s_5| = 5
    assert m1 / m5 == pytest.approx(5.0)
    assert theory.decoupling_margin(nv_params, 1, wf, wf) == math.inf
    zero = q.SpinSystemParams(0.0, 0.5, 0.0, 0.1)
    assert theory.decoupling_margin(zero, 1, wf, wf) == 0.0
    noisy = theory.decoupling_margin(nv_params, 1, wf + wn, wf, delta_noise=1.0)
    assert noisy > m1


@pytest.mark.parametrize("sign", [-1, 1])
def test_effective_model_tracks_full_model(nv_params, sign):
    tau = 2.0
    wf = math.pi / tau
    w = wf + sign * theory.nuclear_freq(nv_params)
    n = 40
    full = run_once(RunConfig(nv_params, build_rnovel(tau, n, w), record_mode="per_pulse_unit"))
    # stroboscopic times: even multiples of tau
    idx = np.arange(1, n, 2)
    eff = theory.effective_iz(nv_params, 1, w, wf, full.times[idx])
    assert np.max(np.abs(full.iz_mean[idx] - eff)) < 0.08
    assert np.max(np.abs(eff)) > 0.2
