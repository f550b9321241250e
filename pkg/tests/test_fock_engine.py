import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.stats import poisson

from leakycav.bs_network import coefficients, reflecting_scheme
from leakycav.errors import TruncationTooSmall
from leakycav.fock_engine import (DensityMatrix, coherent_ket, coherent_state, displace,
                                  exact_phase_space, loss_channel, odd_cat_state,
                                  output_count_distribution, quadrature_distribution)
from leakycav.temporal_modes import mode_budget

# photocount probabilities of the delta = 0.7 odd cat after overall efficiency 0.5085 * 0.95,
# from an mpmath binomial-thinning sum over the analytic populations
CAT_COUNTS = [0.502133859773923412, 0.479245121215979085, 0.0140673015466748602,
              0.00447535751917708698, 0.0000656826756960042507]
# Husimi Q of the same cat at alpha = 0.45 + 0.3i, from the analytic overlap
CAT_Q = 0.0680380684256835803

XS = np.linspace(-12, 12, 24001)
VA_BUDGET = mode_budget(coefficients(reflecting_scheme(0.5085)))


def random_state(seed, dim=24, occupied=8):
    rng = np.random.default_rng(seed)
    g = rng.normal(size=(occupied, occupied)) + 1j * rng.normal(size=(occupied, occupied))
    rho = g @ g.conj().T
    out = np.zeros((dim, dim), dtype=complex)
    out[:occupied, :occupied] = rho / np.trace(rho).real
    return DensityMatrix(out)


def test_vacuum_coherent_state():
    assert coherent_state(0).populations[0] == 1.0


def test_coherent_populations_are_poissonian():
    np.testing.assert_allclose(coherent_state(1.0).populations, poisson.pmf(np.arange(33), 1.0),
                               atol=1e-10)


def test_coherent_mean_photon_number():
    assert coherent_state(0.7).mean_photon_number() == pytest.approx(0.49, abs=1e-12)


def test_coherent_amplitude_limit():
    with pytest.raises(TruncationTooSmall):
        coherent_state(3.0, dim=33)


def test_small_cat_approaches_single_photon():
    assert odd_cat_state(1e-3).fidelity_pure(np.eye(33)[1]) > 1 - 1e-5


def test_cat_normalization():
    d = 0.7
    n2 = 1 / (2 * (1 - math.exp(-2 * d * d)))
    raw = coherent_ket(d, 60) - coherent_ket(-d, 60)
    assert 1 / np.vdot(raw, raw).real == pytest.approx(n2, rel=1e-12)
    assert odd_cat_state(d).trace == pytest.approx(1.0, abs=1e-12)


@given(st.complex_numbers(min_magnitude=0.05, max_magnitude=1.5))
def test_cat_has_odd_parity(delta):
    pops = odd_cat_state(delta).populations
    assert np.all(pops[::2] == 0.0)


def test_loss_extremes():
    rho = random_state(1)
    np.testing.assert_array_equal(loss_channel(rho, 1.0).elems, rho.elems)
    vac = loss_channel(rho, 0.0)
    assert vac.populations[0] == pytest.approx(1.0)
    assert vac.mean_photon_number() == 0.0


def test_loss_maps_coherent_to_coherent():
    a, eta = 0.8 + 0.3j, 0.6
    np.testing.assert_allclose(loss_channel(coherent_state(a), eta).elems,
                               coherent_state(math.sqrt(eta) * a).elems, atol=1e-10)


@settings(max_examples=30)
@given(st.integers(0, 10 ** 6), st.floats(0.0, 1.0))
def test_loss_is_trace_and_positivity_preserving(seed, eta):
    rho = random_state(seed)
    out = loss_channel(rho, eta)
    assert out.trace == pytest.approx(rho.trace, abs=1e-12)
    assert out.mean_photon_number() == pytest.approx(eta * rho.mean_photon_number(), abs=1e-10)
    out.validate()


def test_displaced_vacuum_is_coherent():
    a = 1.2 - 0.5j
    psi = coherent_ket(a, 33)
    assert displace(DensityMatrix.vacuum(), a).fidelity_pure(psi) > 1 - 1e-10


@settings(max_examples=30)
@given(st.integers(0, 10 ** 6), st.complex_numbers(max_magnitude=1.2))
def test_displacement_inverse_and_photon_number(seed, a):
    rho = random_state(seed, dim=40)
    moved = displace(rho, a)
    np.testing.assert_allclose(displace(moved, -a).elems, rho.elems, atol=1e-8)
    expected = rho.mean_photon_number() + abs(a) ** 2 + 2 * (a.conjugate() * rho.expect_a()).real
    assert moved.mean_photon_number() == pytest.approx(expected, abs=1e-9)
    moved.validate()


def test_displacement_leak_detected():
    with pytest.raises(TruncationTooSmall):
        displace(odd_cat_state(0.7, dim=12, tail_tol=1e-6), 2.0)


def test_vacuum_no_light_gives_no_counts():
    assert output_count_distribution(VA_BUDGET, DensityMatrix.vacuum(), 0, 0.95).probs[0] == 1.0


def test_vacuum_with_oscillator_is_poissonian():
    beta, eta_c = 0.9 - 0.4j, 0.95
    p = output_count_distribution(VA_BUDGET, DensityMatrix.vacuum(), beta, eta_c).probs
    mean = eta_c * (VA_BUDGET.eta_ref_under + VA_BUDGET.eta_ref_over) * abs(beta) ** 2
    np.testing.assert_allclose(p, poisson.pmf(np.arange(p.size), mean), atol=1e-12)


def test_cat_counts_match_thinning_oracle():
    p = output_count_distribution(VA_BUDGET, odd_cat_state(0.7), 0, 0.95).probs
    np.testing.assert_allclose(p[:5], CAT_COUNTS, atol=1e-8)


def _within_4_sigma(samples, exact, bins=20):
    freq = np.bincount(samples, minlength=bins)[:bins] / samples.size
    exact = np.pad(exact, (0, max(0, bins - exact.size)))[:bins]
    sigma = np.sqrt(exact * (1 - exact) / samples.size)
    return np.all(np.abs(freq - exact) <= 4 * sigma + 1e-12)


def test_cat_counts_match_single_shot_monte_carlo():
    # per shot: draw the cavity photon number, keep each photon with the overall efficiency
    rng = np.random.default_rng(12)
    cat, eta_c = odd_cat_state(0.7), 0.95
    n_cav = rng.choice(cat.dim, size=10 ** 6, p=cat.populations / cat.populations.sum())
    kept = rng.binomial(n_cav, VA_BUDGET.eta_ext * eta_c)
    assert _within_4_sigma(kept, output_count_distribution(VA_BUDGET, cat, 0, eta_c).probs)


def test_oscillator_counts_match_single_shot_monte_carlo():
    # per shot: independent Poissonian counts from the CAOM and the AOM parts of the MIM
    rng = np.random.default_rng(13)
    beta, eta_c, shots = 1.1, 0.95, 10 ** 6
    n = (rng.poisson(eta_c * VA_BUDGET.eta_ref_under * beta ** 2, size=shots)
         + rng.poisson(eta_c * VA_BUDGET.eta_ref_over * beta ** 2, size=shots))
    dist = output_count_distribution(VA_BUDGET, DensityMatrix.vacuum(), beta, eta_c)
    assert _within_4_sigma(n, dist.probs)


def test_phase_space_vacuum_origin():
    assert exact_phase_space(DensityMatrix.vacuum(), 0, -1) == pytest.approx(1 / math.pi, abs=1e-15)


def test_phase_space_cat_origin_vanishes():
    assert abs(exact_phase_space(odd_cat_state(0.7), 0, -1)) < 1e-15


@given(st.complex_numbers(max_magnitude=2.5))
def test_phase_space_single_photon_q(a):
    q = exact_phase_space(DensityMatrix.fock(1), a, -1)
    assert q == pytest.approx(abs(a) ** 2 * math.exp(-abs(a) ** 2) / math.pi, abs=1e-12)


def test_phase_space_cat_value():
    assert exact_phase_space(odd_cat_state(0.7), 0.45 + 0.3j, -1) == pytest.approx(CAT_Q, abs=1e-12)


def test_cat_wigner_origin_is_negative_parity():
    assert exact_phase_space(odd_cat_state(0.7), 0, 0.0) == pytest.approx(-2 / math.pi, abs=1e-12)


@settings(max_examples=30)
@given(st.integers(0, 10 ** 6), st.complex_numbers(max_magnitude=1.5))
def test_husimi_is_nonnegative(seed, a):
    assert exact_phase_space(random_state(seed, dim=40), a, -1) >= -1e-14


def test_phase_space_rejects_s_at_least_one():
    with pytest.raises(ValueError):
        exact_phase_space(DensityMatrix.vacuum(), 0, 1.0)


def test_vacuum_quadrature_variance():
    p = quadrature_distribution(DensityMatrix.vacuum(), 0.3).pdf(XS)
    np.testing.assert_allclose(p, np.exp(-XS ** 2) / math.sqrt(math.pi), atol=1e-14)
    assert np.trapezoid(XS ** 2 * p, XS) == pytest.approx(0.5, abs=1e-10)


def test_coherent_quadrature_mean():
    a = 0.7 + 0.2j
    p = quadrature_distribution(coherent_state(a), 0.0).pdf(XS)
    assert np.trapezoid(XS * p, XS) == pytest.approx(math.sqrt(2) * a.real, abs=1e-10)
    p = quadrature_distribution(coherent_state(a), math.pi / 2).pdf(XS)
    assert np.trapezoid(XS * p, XS) == pytest.approx(math.sqrt(2) * a.imag, abs=1e-10)


def test_phase_averaged_single_photon():
    p = quadrature_distribution(DensityMatrix.fock(1)).pdf(XS)
    np.testing.assert_allclose(p, 2 * XS ** 2 * np.exp(-XS ** 2) / math.sqrt(math.pi), atol=1e-14)


@settings(max_examples=20)
@given(st.integers(0, 10 ** 6), st.one_of(st.none(), st.floats(0, 6.3)))
def test_quadrature_density_is_a_density(seed, phase):
    rho = random_state(seed)
    p = quadrature_distribution(rho, phase).pdf(XS)
    assert p.min() >= -1e-10
    assert np.trapezoid(p, XS) == pytest.approx(rho.trace, abs=1e-9)


def test_quadrature_sampling_matches_density():
    rho = odd_cat_state(0.7)
    dist = quadrature_distribution(rho, 0.4)
    x = dist.sample(200_000, np.random.default_rng(8))
    expected = np.trapezoid(XS ** 2 * dist.pdf(XS), XS)
    assert abs(np.mean(x ** 2) - expected) < 4 * np.std(x ** 2) / math.sqrt(x.size)
