"""Closed-form cat-qubit physics: rates, populations, readout, conversions.

Reference values are frozen from independent high-precision evaluations
of the closed forms (mpmath at 50 digits, rounded to double precision);
they pin the implementation to the formulas rather than to itself.
"""

import math

import pytest
from hypothesis import given, strategies as st

from catrep import catq

# Independently evaluated closed-form anchors.
TANH_1 = 0.7615941559557649
COTH_1 = 1.3130352854993313
PLUS_POP_1 = 0.6329011144170398          # (1+e⁻²)²/(2(1+e⁻⁴))
INTRINSIC_ERR_1 = 0.004600070369588713   # ½(1−√(1−e⁻⁴))

positive_alpha_sq = st.floats(min_value=1e-3, max_value=30.0,
                              allow_nan=False, allow_infinity=False)


def make_params(alpha_sq, kappa1_eff=1.0):
    return catq.CatParams(alpha_sq=alpha_sq, kappa1_eff=kappa1_eff, t_cycle=1e-6)


# ── Phase-flip rates ─────────────────────────────────────────────────


def test_rates_at_unit_photon_number_match_tanh_coth():
    r = catq.phase_flip_rates(make_params(1.0))
    assert r.gamma_plus_to_minus == pytest.approx(TANH_1, rel=1e-12)
    assert r.gamma_minus_to_plus == pytest.approx(COTH_1, rel=1e-12)


def test_rates_converge_to_kappa1_alpha_sq_for_large_cats():
    r = catq.phase_flip_rates(make_params(20.0))
    assert r.gamma_plus_to_minus == pytest.approx(20.0, rel=1e-15)
    assert r.gamma_minus_to_plus == pytest.approx(20.0, rel=1e-15)


@given(alpha_sq=positive_alpha_sq)
def test_rate_ratio_is_tanh_squared(alpha_sq):
    r = catq.phase_flip_rates(make_params(alpha_sq))
    ratio = r.gamma_plus_to_minus / r.gamma_minus_to_plus
    assert ratio == pytest.approx(math.tanh(alpha_sq) ** 2, rel=1e-12)


@given(alpha_sq=positive_alpha_sq, kappa1=st.floats(min_value=1e-3, max_value=1e6))
def test_rates_ordered_and_scale_linearly_with_loss(alpha_sq, kappa1):
    r = catq.phase_flip_rates(make_params(alpha_sq, kappa1))
    assert 0 <= r.gamma_plus_to_minus <= r.gamma_minus_to_plus
    base = catq.phase_flip_rates(make_params(alpha_sq, 1.0))
    assert r.gamma_plus_to_minus == pytest.approx(kappa1 * base.gamma_plus_to_minus, rel=1e-12)


def test_both_rates_increase_with_photon_number():
    grid = [0.25, 0.5, 1.0, 2.0, 4.0, 8.0]
    rates = [catq.phase_flip_rates(make_params(a)) for a in grid]
    for lo, hi in zip(rates, rates[1:]):
        assert lo.gamma_plus_to_minus < hi.gamma_plus_to_minus
        assert lo.gamma_minus_to_plus < hi.gamma_minus_to_plus


def test_fock_qubit_limit_is_a_hard_error():
    with pytest.raises(ValueError):
        catq.CatParams(alpha_sq=0.0, kappa1_eff=1.0, t_cycle=1e-6)


def test_total_is_parity_relaxation_rate():
    r = catq.phase_flip_rates(make_params(2.0))
    assert r.total == r.gamma_plus_to_minus + r.gamma_minus_to_plus


# ── Steady-state parity populations ──────────────────────────────────


def test_plus_population_limits():
    assert catq.steady_state_plus_population(0.0) == 1.0
    assert catq.steady_state_plus_population(50.0) == pytest.approx(0.5, abs=1e-15)


def test_plus_population_at_unit_photon_number():
    assert catq.steady_state_plus_population(1.0) == pytest.approx(PLUS_POP_1, rel=1e-12)


@given(alpha_sq=positive_alpha_sq)
def test_plus_population_is_detailed_balance_of_rates(alpha_sq):
    r = catq.phase_flip_rates(make_params(alpha_sq))
    assert catq.steady_state_plus_population(alpha_sq) == pytest.approx(
        r.gamma_minus_to_plus / r.total, rel=1e-12)


def test_plus_population_decreases_towards_half():
    grid = [0.0, 0.3, 0.7, 1.5, 3.0, 6.0]
    pops = [catq.steady_state_plus_population(a) for a in grid]
    for lo, hi in zip(pops, pops[1:]):
        assert hi < lo
    assert all(p >= 0.5 for p in pops)


def test_plus_population_rejects_negative_input():
    with pytest.raises(ValueError):
        catq.steady_state_plus_population(-0.1)


# ── Z-basis readout POVM ─────────────────────────────────────────────


def test_povm_ideal_projector_limit():
    povm = catq.z_readout_povm(60.0)
    assert povm.f0_diag[0] == pytest.approx(1.0, abs=1e-15)
    assert povm.f0_diag[1] == pytest.approx(0.0, abs=1e-15)


def test_povm_zero_contrast_at_zero_photons():
    for pge, peg in ((0.0, 0.0), (0.3, 0.1), (1.0, 1.0)):
        povm = catq.z_readout_povm(0.0, pge, peg)
        assert povm.f0_diag == (0.5, 0.5)
        assert povm.f1_diag == (0.5, 0.5)


def test_povm_intrinsic_error_at_unit_photon_number():
    povm = catq.z_readout_povm(1.0)
    assert povm.assignment_error == pytest.approx(INTRINSIC_ERR_1, rel=1e-12)
    assert catq.intrinsic_readout_error(1.0) == pytest.approx(INTRINSIC_ERR_1, rel=1e-12)


@given(alpha_sq=st.floats(min_value=0.0, max_value=20.0),
       p_ge=st.floats(min_value=0.0, max_value=1.0),
       p_eg=st.floats(min_value=0.0, max_value=1.0))
def test_povm_completeness(alpha_sq, p_ge, p_eg):
    povm = catq.z_readout_povm(alpha_sq, p_ge, p_eg)
    for f0, f1 in zip(povm.f0_diag, povm.f1_diag):
        assert f0 + f1 == pytest.approx(1.0, abs=1e-12)
        assert -1e-12 <= f0 <= 1 + 1e-12


@given(alpha_sq=st.floats(min_value=0.0, max_value=20.0))
def test_povm_assignment_error_equals_intrinsic_without_confusion(alpha_sq):
    povm = catq.z_readout_povm(alpha_sq)
    assert povm.assignment_error == pytest.approx(
        catq.intrinsic_readout_error(alpha_sq), abs=1e-15)


def test_povm_total_confusion_erases_all_contrast():
    povm = catq.z_readout_povm(5.0, p_ge=1.0, p_eg=1.0)
    assert povm.f0_diag == (0.5, 0.5)


# ── Error-per-cycle conversions ──────────────────────────────────────


def test_error_per_cycle_arithmetic():
    assert catq.error_per_cycle(140e-6, 2.8e-6) == pytest.approx(0.01, rel=1e-15)
    assert catq.error_per_cycle(1e12, 2.8e-6) == pytest.approx(0.0, abs=1e-15)


def test_error_per_cycle_inverse_recovers_measured_lifetime():
    # ε = 1.65% per 2.8 µs cycle corresponds to T ≈ 84.85 µs.
    assert catq.decay_time_from_error(0.0165, 2.8e-6) == pytest.approx(84.85e-6, rel=1e-4)


@given(eps=st.floats(min_value=1e-8, max_value=0.5),
       t_cycle=st.floats(min_value=1e-9, max_value=1e-3))
def test_error_per_cycle_round_trip(eps, t_cycle):
    assert catq.error_per_cycle(
        catq.decay_time_from_error(eps, t_cycle), t_cycle) == pytest.approx(eps, rel=1e-12)


def test_conversions_reject_nonpositive_input():
    with pytest.raises(ValueError):
        catq.error_per_cycle(0.0, 2.8e-6)
    with pytest.raises(ValueError):
        catq.decay_time_from_error(0.0, 2.8e-6)
