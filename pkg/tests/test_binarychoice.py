"""Kernels, tandems, preference relations, and value representations."""

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nma import (
    BinaryChoiceKernel,
    DdmParams,
    Tandem,
    build_tandem_representation,
    build_value_representation,
    classify_kernel,
    complementary_log_odds,
    ddm_tandem,
    dirac_kernel,
    error_rates,
    induced_relations,
    is_chronometric,
    is_psychometric,
    is_transitive,
    log_odds,
    logit_kernel,
    reconstruct_kernel,
)
from nma.errors import (
    InvalidSError,
    KernelAxiomViolation,
    NotChronometricError,
    NotTransitiveError,
    TandemAxiomViolation,
)
from nma.kernels import ValueRepresentation

from conftest import MENU, TAU_LN2, TAU_LN4, random_transitive_kernel


class TestKernelAxioms:
    def test_diagonal_is_epsilon(self, u421_kernel):
        assert u421_kernel.rho[0, 0] == 0.5
        k2 = u421_kernel.with_epsilon(0.9)
        assert np.all(np.diag(k2.rho) == 0.9)
        # off-diagonal untouched
        assert np.allclose(k2.rho[~np.eye(3, dtype=bool)],
                           u421_kernel.rho[~np.eye(3, dtype=bool)])

    def test_epsilon_range(self):
        with pytest.raises(KernelAxiomViolation):
            BinaryChoiceKernel(("a", "b"), [[0.5, 0.5], [0.5, 0.5]], epsilon=1.0)

    def test_sure_acceptance_needs_sure_rejection(self):
        # rho(a|b) = 1 while rho(b|a) = 0.3 contradicts itself
        with pytest.raises(KernelAxiomViolation):
            BinaryChoiceKernel(("a", "b"), [[0.5, 1.0], [0.3, 0.5]])

    def test_lenient_mode_collects_warnings(self):
        k = BinaryChoiceKernel(("a", "b"), [[0.5, 1.0], [0.3, 0.5]], validate=False)
        assert len(k.axiom_warnings) == 1

    def test_shape_and_range_checks(self):
        with pytest.raises(KernelAxiomViolation):
            BinaryChoiceKernel(("a", "b"), [[0.5, 0.6, 0.1], [0.4, 0.5, 0.2]])
        with pytest.raises(KernelAxiomViolation):
            BinaryChoiceKernel(("a", "b"), [[0.5, 1.2], [0.4, 0.5]])

    def test_menu_checks(self):
        with pytest.raises(KernelAxiomViolation):
            BinaryChoiceKernel(("a",), [[0.5]])
        with pytest.raises(KernelAxiomViolation):
            BinaryChoiceKernel(("a", "a"), [[0.5, 0.5], [0.5, 0.5]])

    def test_prob_accessor(self, u421_kernel):
        assert u421_kernel.prob("a", "b") == pytest.approx(2 / 3)
        assert u421_kernel.prob("b", "a") == pytest.approx(1 / 3)
        assert u421_kernel.prob("a", "c") == pytest.approx(4 / 5)

    def test_immutable(self, u421_kernel):
        with pytest.raises(AttributeError):
            u421_kernel.epsilon = 0.2
        with pytest.raises((ValueError, AttributeError)):
            u421_kernel.rho[0, 1] = 0.0


class TestTandemAxioms:
    def test_deterministic_pairs_must_be_instant(self):
        k = dirac_kernel(("a", "b"))
        with pytest.raises(TandemAxiomViolation):
            Tandem(k, [[0.0, 0.3], [0.3, 0.0]])
        Tandem(k, np.zeros((2, 2)))  # instantaneous is fine

    def test_stochastic_pairs_need_positive_time(self, u421_kernel):
        tau = np.full((3, 3), 0.4)
        np.fill_diagonal(tau, 0.0)
        Tandem(u421_kernel, tau)
        tau[0, 1] = 0.0
        with pytest.raises(TandemAxiomViolation):
            Tandem(u421_kernel, tau)

    def test_symmetric_times_force_unbiased(self):
        k = BinaryChoiceKernel(("a", "b"), [[0.5, 0.7], [0.2, 0.5]])  # biased pair
        with pytest.raises(TandemAxiomViolation):
            Tandem(k, [[0.0, 1.0], [1.0, 0.0]])
        # asymmetric times carry no such constraint
        Tandem(k, [[0.0, 1.0], [2.0, 0.0]])

    def test_negative_times_rejected(self, u421_kernel):
        with pytest.raises(TandemAxiomViolation):
            Tandem(u421_kernel, np.full((3, 3), -1.0))

    def test_time_accessor(self, sym_ddm_tandem):
        assert sym_ddm_tandem.time("a", "b") == pytest.approx(TAU_LN2, abs=1e-12)
        assert sym_ddm_tandem.time("a", "c") == pytest.approx(TAU_LN4, abs=1e-12)


class TestClassifyKernel:
    def test_u421_flags(self, u421_kernel):
        flags = classify_kernel(u421_kernel)
        assert flags.unbiased and flags.positive and not flags.dirac

    def test_dirac_flags(self):
        flags = classify_kernel(dirac_kernel(("a", "b", "c")))
        assert flags.dirac and flags.unbiased and not flags.positive

    def test_biased_kernel(self):
        k = BinaryChoiceKernel(("a", "b"), [[0.5, 0.7], [0.2, 0.5]])
        flags = classify_kernel(k)
        assert not flags.unbiased and flags.positive and not flags.dirac


class TestTransitivity:
    def test_u421_triple_products(self, u421_kernel):
        r = u421_kernel.rho
        forward = r[1, 0] * r[2, 1] * r[0, 2]
        backward = r[2, 0] * r[1, 2] * r[0, 1]
        assert forward == pytest.approx(4 / 45)
        assert backward == pytest.approx(4 / 45)
        assert is_transitive(u421_kernel).holds

    def test_two_level_transitive(self, two_level_kernel):
        assert is_transitive(two_level_kernel).holds

    def test_cycle_detected(self, cyclic_kernel):
        report = is_transitive(cyclic_kernel)
        assert not report.holds
        assert not bool(report)
        assert report.worst_triple == ("a", "b", "c")
        assert report.max_violation > 0.5

    def test_two_alternatives_vacuous(self):
        k = BinaryChoiceKernel(("a", "b"), [[0.5, 0.9], [0.2, 0.5]])
        assert is_transitive(k).holds


class TestInducedRelations:
    def test_two_level_relations(self):
        rho = [[0.5, 0.6, 1.0], [0.4, 0.5, 1.0], [0.0, 0.0, 0.5]]
        k = BinaryChoiceKernel(MENU, rho)
        rel = induced_relations(k)
        assert rel.strict == frozenset({("a", "c"), ("b", "c")})
        assert ("a", "b") in rel.weak and ("b", "a") not in rel.weak
        assert rel.incomparable_classes == (("a", "b"), ("c",))
        assert ("a", "b") in rel.stochastic_weak
        assert ("a", "c") not in rel.stochastic_weak  # deterministic pair
        assert ("c", "c") in rel.stochastic_weak

    def test_unbiased_pair_weak_both_ways(self):
        k = BinaryChoiceKernel(("a", "b"), [[0.5, 0.5], [0.5, 0.5]])
        rel = induced_relations(k)
        assert ("a", "b") in rel.weak and ("b", "a") in rel.weak
        assert rel.strict == frozenset()


class TestValueRepresentation:
    def test_u421_single_level(self, u421_kernel):
        rep = build_value_representation(u421_kernel)
        assert rep.level_sets() == (MENU,)
        assert rep.w == {"a": 1, "b": 1, "c": 1}
        # v is unique up to an additive constant within the level
        assert rep.v["a"] - rep.v["b"] == pytest.approx(math.log(2), abs=1e-12)
        assert rep.v["b"] - rep.v["c"] == pytest.approx(math.log(2), abs=1e-12)
        assert np.allclose(rep.s, 1.0)

    def test_two_level_structure(self, two_level_kernel):
        rep = build_value_representation(two_level_kernel)
        assert rep.level_sets() == (("c",), ("a", "b"))
        assert rep.w == {"a": 2, "b": 2, "c": 1}
        assert rep.v["a"] - rep.v["b"] == pytest.approx(math.log(2), abs=1e-12)

    def test_round_trip(self, two_level_kernel):
        rep = build_value_representation(two_level_kernel)
        rebuilt = reconstruct_kernel(rep, two_level_kernel.epsilon)
        assert np.max(np.abs(rebuilt.rho - two_level_kernel.rho)) <= 1e-9

    def test_rejects_intransitive(self, cyclic_kernel):
        with pytest.raises(NotTransitiveError) as err:
            build_value_representation(cyclic_kernel)
        assert err.value.worst_triple == ("a", "b", "c")

    def test_levels_order_deterministically(self):
        # deterministic ranking a > b > c collapses to singleton levels
        rep = build_value_representation(dirac_kernel(("a", "b", "c")))
        assert rep.level_sets() == (("c",), ("b",), ("a",))
        assert rep.w == {"a": 3, "b": 2, "c": 1}

    def test_reconstruct_ranks_by_w_alone(self):
        # across levels the larger w wins no matter how v compares
        rep = build_value_representation(dirac_kernel(("a", "b")))
        k = reconstruct_kernel(rep)
        assert k.prob("a", "b") == 1.0
        assert k.prob("b", "a") == 0.0

    def test_s_out_of_range_rejected(self):
        k = logit_kernel({"a": 0.0, "b": 0.0})
        rep = build_value_representation(k)
        bad = np.full((2, 2), 3.0)
        broken = ValueRepresentation(
            menu=rep.menu, w=rep.w, v=rep.v, s=bad, _levels=rep.level_sets()
        )
        with pytest.raises(InvalidSError):
            reconstruct_kernel(broken)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 10_000), n=st.integers(3, 6))
def test_random_round_trip(seed, n):
    rng = np.random.default_rng(seed)
    k = random_transitive_kernel(rng, n)
    rep = build_value_representation(k)
    rebuilt = reconstruct_kernel(rep, k.epsilon)
    assert np.max(np.abs(rebuilt.rho - k.rho)) <= 1e-9
    # levels are ordered: strictly higher w surely wins
    for a in k.menu:
        for b in k.menu:
            if rep.w[a] > rep.w[b]:
                assert k.prob(a, b) == 1.0


class TestLogOdds:
    def test_values_and_nan_pattern(self, two_level_kernel):
        ell = log_odds(two_level_kernel)
        assert ell[0, 1] == pytest.approx(math.log(2))
        assert ell[1, 0] == pytest.approx(-math.log(2))
        assert math.isnan(ell[0, 2])  # deterministic pair
        assert math.isnan(ell[0, 0])

    def test_complementary_form(self, u421_kernel):
        # for unbiased kernels both log-odds coincide
        ell = log_odds(u421_kernel)
        ellbar = complementary_log_odds(u421_kernel)
        off = ~np.eye(3, dtype=bool)
        assert np.allclose(ell[off], ellbar[off], atol=1e-12)

    def test_antisymmetry(self, u421_kernel):
        ell = log_odds(u421_kernel)
        off = ~np.eye(3, dtype=bool)
        assert np.allclose(ell[off], -ell.T[off], atol=1e-12)


class TestErrorRates:
    def test_unbiased_pair(self):
        k = BinaryChoiceKernel(("a", "b"), [[0.5, 2 / 3], [1 / 3, 0.5]])
        er1, er2 = error_rates(k)
        assert er1[0, 1] == pytest.approx(1 / 3)
        assert er2[0, 1] == pytest.approx(1 / 3)
        assert er1[0, 1] == er1[1, 0]  # symmetric by construction

    def test_biased_pair_distinct_rates(self):
        k = BinaryChoiceKernel(("a", "b"), [[0.5, 0.7], [0.2, 0.5]])
        er1, er2 = error_rates(k)
        assert er1[0, 1] == pytest.approx(0.3)
        assert er2[0, 1] == pytest.approx(0.2)

    def test_diagonal_zero(self, u421_kernel):
        er1, er2 = error_rates(u421_kernel)
        assert np.all(np.diag(er1) == 0.0)
        assert np.all(np.diag(er2) == 0.0)


class TestChronometric:
    def test_symmetric_ddm_holds_with_central_threshold(self, sym_ddm_tandem):
        report = is_chronometric(sym_ddm_tandem)
        assert report.holds
        assert report.threshold_l == pytest.approx(0.0, abs=1e-12)

    def test_constant_times_not_chronometric(self, u421_kernel):
        # distinct log-odds with equal times cannot be strictly single-peaked
        tau = np.full((3, 3), 1.0)
        np.fill_diagonal(tau, 0.0)
        t = Tandem(u421_kernel, tau)
        assert not is_chronometric(t).holds

    def test_all_instant_vacuously_holds(self):
        t = Tandem(dirac_kernel(("a", "b", "c")), np.zeros((3, 3)))
        report = is_chronometric(t)
        assert report.holds and report.threshold_l == 0.0

    def test_requires_transitive(self, cyclic_kernel):
        t = Tandem(cyclic_kernel, np.zeros((3, 3)))
        with pytest.raises(NotTransitiveError):
            is_chronometric(t)

    def test_monotone_profile_takes_boundary_threshold(self):
        # times increasing in the log-odds: threshold sits at the top value
        k = BinaryChoiceKernel(("a", "b"), [[0.5, 2 / 3], [1 / 3, 0.5]])
        t = Tandem(k, [[0.0, 2.0], [1.0, 0.0]])
        report = is_chronometric(t)
        assert report.holds
        assert report.threshold_l >= math.log(2) - 1e-9


class TestPsychometric:
    def test_symmetric_ddm_is_psychometric(self, sym_ddm_tandem):
        assert is_psychometric(sym_ddm_tandem)

    def test_asymmetric_ddm_is_not(self):
        t = ddm_tandem(DdmParams({"a": 1.0, "b": 0.4, "c": 0.0}, 1.2, 0.7))
        assert is_chronometric(t).holds
        assert not is_psychometric(t)


class TestTandemRepresentation:
    def test_symmetric_ddm_profile(self, sym_ddm_tandem):
        rep = build_tandem_representation(sym_ddm_tandem)
        assert rep.even_phi is True
        assert rep.threshold_l == pytest.approx(0.0, abs=1e-12)
        # observed log-odds: +-ln2 and +-ln4, with their exact times
        ln2, ln4 = math.log(2), math.log(4)
        assert sorted(rep.phi_samples) == pytest.approx([-ln4, -ln2, ln2, ln4])
        def phi_at(x):  # keys carry the kernel's rounding, so match by value
            return rep.phi_samples[min(rep.phi_samples, key=lambda k: abs(k - x))]

        assert phi_at(ln2) == pytest.approx(TAU_LN2, abs=1e-12)
        assert phi_at(ln4) == pytest.approx(TAU_LN4, abs=1e-12)
        assert phi_at(ln2) == pytest.approx(phi_at(-ln2), rel=1e-12)

    def test_instant_tandem_has_empty_profile(self):
        t = Tandem(dirac_kernel(("a", "b", "c")), np.zeros((3, 3)))
        rep = build_tandem_representation(t)
        assert rep.phi_samples == {}
        assert rep.w == {"a": 3, "b": 2, "c": 1}

    def test_raises_when_not_single_peaked(self, u421_kernel):
        tau = np.full((3, 3), 1.0)
        np.fill_diagonal(tau, 0.0)
        with pytest.raises(NotChronometricError):
            build_tandem_representation(Tandem(u421_kernel, tau))
