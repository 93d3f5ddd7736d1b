import math

import numpy as np
import pytest
from jsonmodels.errors import ValidationError

from spike_slab_eb import sparsity_conditions
from spike_slab_eb.models.results import EbConstants, SignalSpec
from spike_slab_eb.score_thresholds import t_of
from spike_slab_eb.sparsity_conditions import (
    check_eb, check_testing_condition, dyadic_levels, ell_floor, generate_signal, in_dyadic_testing_class,
    random_testing_member,
)
from spike_slab_eb.utils import ConfigurationError, InvalidInputError

N = 2000
S = 121  # ceil((log2 2000)^2)


def flat(amplitude, n=N, s=S, seed=0):
    return generate_signal({"kind": "flat", "amplitude": amplitude}, n, s, np.random.default_rng(seed))


def test_ell_floor_rules():
    assert ell_floor(N, "log2") == S
    assert ell_floor(N, "natural") == 58
    assert ell_floor(N, "one") == 1
    with pytest.raises(ConfigurationError):
        ell_floor(N, "log10")


def test_flat_signal_satisfies_eb():
    A = 1.5
    report = check_eb(flat(2 * A), S, EbConstants(A=A, C_q=1.0, D_q=1.0, q=2.0))
    assert report.satisfied
    assert report.smallest_ell == S
    assert report.effective_sparsity == S
    assert report.small_signal_energy_at_ell == 0.0
    assert report.ell_floor == S


def test_zero_signal_fails_eb():
    report = check_eb(np.zeros(N), S, {"A": 1.5, "C_q": 1.0, "D_q": 1.0, "q": 2.0})
    assert not report.satisfied
    assert report.smallest_ell is None
    assert report.effective_sparsity is None


def test_floor_above_s_is_never_satisfied():
    report = check_eb(flat(3.0, s=50), 50, EbConstants(A=1.5, C_q=1.0, D_q=1.0, q=2.0))
    assert not report.satisfied
    assert report.ell_floor == S


def test_eb_input_checks():
    constants = EbConstants(A=1.5, C_q=1.0, D_q=1.0, q=2.0)
    with pytest.raises(InvalidInputError):
        check_eb(flat(3.0), S - 1, constants)
    with pytest.raises(ConfigurationError):
        check_eb(flat(3.0), N + 1, constants)
    with pytest.raises(ValidationError):
        check_eb(flat(3.0), S, EbConstants(A=1.0, C_q=1.0, D_q=1.0, q=2.0))
    with pytest.raises(ValidationError):
        check_eb(flat(3.0), S, EbConstants(A=1.5, C_q=1.0, D_q=1.0, q=2.5))


def test_ties_at_the_detection_level_count_as_large():
    n = 1000
    level = 1.5 * np.sqrt(2.0 * np.log(n / np.arange(1, 2)))[0]
    theta0 = np.zeros(n)
    theta0[0] = level
    report = check_eb(theta0, 1, EbConstants(A=1.5, C_q=1.0, D_q=1e-9, q=2.0), ell_floor_rule="one")
    assert report.satisfied
    assert report.large_signal_count_at_ell == 1


def test_eb_is_invariant_to_order_and_sign():
    theta0 = generate_signal({"kind": "eb_tail", "amplitude": 1.5, "D_q": 1.0, "q": 2.0}, N, S, np.random.default_rng(1))
    constants = EbConstants(A=1.5, C_q=2.0, D_q=1.0, q=2.0)
    report = check_eb(theta0, S, constants)
    shuffled = -np.random.default_rng(2).permutation(theta0)
    assert check_eb(shuffled, S, constants).to_struct() == report.to_struct()


def test_eb_tail_fixture_uses_the_small_signal_budget():
    theta0 = generate_signal({"kind": "eb_tail", "amplitude": 1.5, "D_q": 1.0, "q": 2.0}, N, S, np.random.default_rng(1))
    report = check_eb(theta0, S, EbConstants(A=1.5, C_q=2.0, D_q=1.0, q=2.0))
    assert report.satisfied
    assert report.small_signal_energy_at_ell > 0
    assert report.effective_sparsity == math.ceil(S / 2)


def test_eb_is_monotone_in_the_constants():
    theta0 = generate_signal({"kind": "eb_tail", "amplitude": 1.5, "D_q": 1.0, "q": 1.0}, N, S, np.random.default_rng(3))
    base = check_eb(theta0, S, EbConstants(A=1.5, C_q=2.0, D_q=1.0, q=1.0))
    assert base.satisfied
    for C, D in [(2.0, 3.0), (5.0, 1.0), (10.0, 10.0)]:
        assert check_eb(theta0, S, EbConstants(A=1.5, C_q=C, D_q=D, q=1.0)).satisfied


def test_eb_q_membership_implies_eb_two():
    rng = np.random.default_rng(4)
    for _ in range(20):
        q = float(rng.uniform(0.3, 1.9))
        A = float(rng.uniform(1.1, 2.0))
        theta0 = generate_signal({"kind": "eb_tail", "amplitude": A, "D_q": 1.0, "q": q}, N, S, rng)
        report = check_eb(theta0, S, EbConstants(A=A, C_q=2.0, D_q=1.0, q=q))
        assert report.satisfied
        D2 = 1.0 * (math.sqrt(2) * A) ** (2 - q)
        assert check_eb(theta0, S, EbConstants(A=A, C_q=2.0, D_q=D2, q=2.0)).satisfied


def test_effective_sparsity_sandwich():
    rng = np.random.default_rng(5)
    for _ in range(10):
        q = float(rng.uniform(0.5, 2.0))
        theta0 = generate_signal({"kind": "eb_tail", "amplitude": 1.5, "D_q": 1.0, "q": q}, N, S, rng)
        s_tilde_2 = check_eb(theta0, S, EbConstants(A=1.5, C_q=2.0, D_q=1.0, q=2.0)).effective_sparsity
        s_tilde_q = check_eb(theta0, S, EbConstants(A=1.5, C_q=2.0, D_q=1.0, q=q)).effective_sparsity
        assert s_tilde_2 <= s_tilde_q <= 10 * s_tilde_2


def test_dyadic_levels():
    assert dyadic_levels(16) == [1, 2, 3]
    assert dyadic_levels(18) == [1, 2, 3]
    assert dyadic_levels(3) == []


def test_testing_condition_on_zero_signal():
    assert not check_testing_condition(np.zeros(100), 2, 4, 0.1)


def test_testing_condition_ordering():
    with pytest.raises(InvalidInputError):
        check_testing_condition(np.ones(10), 5, 4, 1.0)
    with pytest.raises(InvalidInputError):
        check_testing_condition(np.ones(10), 2, 11, 1.0)


def test_testing_condition_distance():
    theta0 = np.zeros(100)
    theta0[:4] = [10.0, 3.0, 2.0, 1.0]
    # dropping the two largest leaves 2^2 + 1^2 = 5
    assert check_testing_condition(theta0, 2, 4, 5.0 / min(10.0, 4 * math.log(100)))
    assert not check_testing_condition(theta0, 2, 4, 5.01 / min(10.0, 4 * math.log(100)))
    assert not check_testing_condition(theta0, 2, 3, 0.001)


TESTING_CLASS_N = 10 ** 6
TESTING_CLASS_C = 4.0
TESTING_CLASS_S = 16


def dyadic_class_constants():
    return EbConstants(A=math.sqrt(TESTING_CLASS_C / 2), C_q=1.0, D_q=TESTING_CLASS_C, q=2.0)


def test_testing_class_members_satisfy_eb():
    assert TESTING_CLASS_S <= math.sqrt(TESTING_CLASS_N) / (TESTING_CLASS_C * math.log(TESTING_CLASS_N))
    rng = np.random.default_rng(6)
    for _ in range(50):
        theta0 = random_testing_member(TESTING_CLASS_N, TESTING_CLASS_S, TESTING_CLASS_C, rng)
        assert in_dyadic_testing_class(theta0, TESTING_CLASS_S, TESTING_CLASS_C)
        assert check_eb(theta0, TESTING_CLASS_S, dyadic_class_constants(), ell_floor_rule="one").satisfied


def test_counterexample_satisfies_eb_but_not_the_testing_condition():
    theta0 = sparsity_conditions.testing_counterexample(TESTING_CLASS_N, 3)
    assert np.count_nonzero(theta0) == TESTING_CLASS_S
    assert not in_dyadic_testing_class(theta0, TESTING_CLASS_S, TESTING_CLASS_C)
    assert check_eb(theta0, TESTING_CLASS_S, dyadic_class_constants(), ell_floor_rule="one").satisfied


def test_counterexample_needs_room():
    with pytest.raises(ConfigurationError):
        sparsity_conditions.testing_counterexample(10, 3)


def test_random_member_needs_a_dyadic_level(rng):
    with pytest.raises(ConfigurationError):
        random_testing_member(1000, 3, 1.0, rng)


def test_zero_signal():
    theta0 = generate_signal({"kind": "zero"}, 50, 10, np.random.default_rng(0))
    assert np.array_equal(theta0, np.zeros(50))


def test_flat_signal_has_exact_sparsity_and_level():
    theta0 = flat(2.0)
    assert np.count_nonzero(theta0) == S
    assert np.allclose(np.abs(theta0[:S]), 2.0 * math.sqrt(2 * math.log(N / S)))
    assert set(np.sign(theta0[:S])) <= {-1.0, 1.0}


def test_signals_are_reproducible():
    assert np.array_equal(flat(2.0, seed=9), flat(2.0, seed=9))
    assert not np.array_equal(flat(2.0, seed=9), flat(2.0, seed=10))


def test_adversarial_signal(g_half):
    alpha = 0.01
    theta0 = generate_signal({"kind": "adversarial", "alpha": alpha}, 500, 30, np.random.default_rng(0), g=g_half)
    t = t_of(g_half, alpha)
    magnitudes = np.abs(theta0[theta0 != 0])
    assert magnitudes.size == 30
    assert np.all((magnitudes >= t / 8) & (magnitudes <= t / 4))


def test_adversarial_signal_needs_the_density():
    with pytest.raises(ConfigurationError):
        generate_signal({"kind": "adversarial", "alpha": 0.01}, 500, 30, np.random.default_rng(0))


def test_b0_construction():
    A, c, s1 = 1.5, 0.5, 10
    theta0 = generate_signal({"kind": "b0_construction", "amplitude": A, "s1": s1, "c": c}, N, 40, np.random.default_rng(0))
    magnitudes = np.abs(theta0)
    assert np.allclose(magnitudes[:s1], A * math.sqrt(2 * math.log(N / s1)))
    assert np.allclose(magnitudes[s1:40], c * math.sqrt(2 * math.log(N / 40)))
    assert np.count_nonzero(theta0) == 40


@pytest.mark.parametrize("variant", [1, 2, 3])
def test_weaker_condition_fixtures_have_exact_sparsity(variant):
    spec = {"kind": "eb_weaker", "variant": variant, "m_n": 0.2, "amplitude": 1.5}
    theta0 = generate_signal(spec, N, S, np.random.default_rng(0))
    assert np.count_nonzero(theta0) == S


def test_weaker_condition_variant_three_level():
    theta0 = generate_signal({"kind": "eb_weaker", "variant": 3, "m_n": 0.2}, N, S, np.random.default_rng(0))
    assert np.allclose(np.abs(theta0[:S]), 0.4 * math.sqrt(2 * math.log(N / S)))


def test_signal_parameter_checks():
    rng = np.random.default_rng(0)
    with pytest.raises(ConfigurationError):
        generate_signal({"kind": "flat"}, N, S, rng)
    with pytest.raises(ConfigurationError):
        generate_signal({"kind": "flat", "amplitude": 1.0}, 10, 11, rng)
    with pytest.raises(ConfigurationError):
        generate_signal({"kind": "eb_weaker", "variant": 1, "m_n": 1.5}, N, S, rng)
    with pytest.raises(ValidationError):
        generate_signal({"kind": "eb_weaker", "variant": 4, "m_n": 0.5}, N, S, rng)
    with pytest.raises(ValidationError):
        generate_signal({"kind": "sawtooth"}, N, S, rng)


@pytest.mark.parametrize("spec", [
    {"kind": "zero"},
    {"kind": "flat", "amplitude": 2.0},
    {"kind": "b0_construction", "amplitude": 1.5, "s1": 10, "c": 0.5},
])
def test_signal_specs_leave_unused_fields_empty(spec):
    SignalSpec(**spec).validate()
    assert "variant" not in SignalSpec(**spec).to_struct()
