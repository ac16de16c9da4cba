import itertools
import math

import numpy as np
import pytest

from bellcert.bell import (
    BellExpression,
    build_bell_operator,
    check_sos_relations,
    classical_bound,
    extra_statistics_check,
    quantum_value,
    sos_residual,
    tilde_observables,
)
from bellcert.linalg import kron, max_abs
from bellcert.quantum import pure_state, random_projective_observable, white_noise_mix
from bellcert.reference import ghz_like_vector, target_observables
from bellcert.scenario import conditional_post_interaction_state, extra_branch_settings

from conftest import PHI_PLUS, X, Z, brute_force_classical_bound

SQRT2 = math.sqrt(2.0)


class TestTildeObservables:
    def test_reference_pair_rotates_to_paulis(self):
        a0, a1 = target_observables(2)[0]
        t0, t1 = tilde_observables(a0, a1)
        assert max_abs(t0 - Z) < 1e-12
        assert max_abs(t1 - X) < 1e-12

    def test_degenerate_settings(self):
        t0, t1 = tilde_observables(Z, Z)
        assert max_abs(t0) < 1e-15
        assert max_abs(t1 - SQRT2 * Z) < 1e-15

    def test_square_sum_identity(self):
        rng = np.random.default_rng(13)
        for _ in range(10):
            a0 = random_projective_observable(4, rng)
            a1 = random_projective_observable(4, rng)
            t0, t1 = tilde_observables(a0, a1)
            assert max_abs(t0 @ t0 + t1 @ t1 - (a0 @ a0 + a1 @ a1)) < 1e-9


class TestBellOperator:
    def test_reference_two_party_form(self):
        expr = BellExpression(2, (0, 0))
        op = build_bell_operator(expr, target_observables(2))
        assert max_abs(op - (kron(X, X) + kron(Z, Z))) < 1e-12

    def test_reference_value_two_parties(self):
        expr = BellExpression(2, (0, 0))
        state = pure_state(PHI_PLUS, (2, 2))
        assert abs(quantum_value(state, target_observables(2), expr) - 2.0) < 1e-12

    def test_reference_value_three_parties(self):
        expr = BellExpression(3, (0, 0, 0))
        state = pure_state(ghz_like_vector((0, 0, 0)), (2, 2, 2))
        assert abs(quantum_value(state, target_observables(3), expr) - 4.0) < 1e-12

    def test_every_branch_reaches_the_bound(self):
        for n in (2, 3):
            obs = target_observables(n)
            for bits in itertools.product((0, 1), repeat=n):
                expr = BellExpression(n, bits)
                state = pure_state(ghz_like_vector(bits), (2,) * n)
                assert abs(quantum_value(state, obs, expr) - expr.quantum_bound) < 1e-10


class TestClassicalBound:
    def test_two_parties(self):
        assert abs(classical_bound(BellExpression(2, (0, 0))) - SQRT2) < 1e-12

    def test_three_parties(self):
        assert abs(classical_bound(BellExpression(3, (0, 0, 0))) - 2 * SQRT2) < 1e-12

    def test_five_parties_against_brute_force(self):
        expr = BellExpression(5, (0, 1, 0, 0, 1))
        enumerated = classical_bound(expr)
        assert abs(enumerated - 4 * SQRT2) < 1e-12
        assert abs(enumerated - brute_force_classical_bound(5, expr.target_outcomes)) < 1e-12

    def test_brute_force_agreement_small_n(self):
        for n in (2, 3):
            for bits in itertools.product((0, 1), repeat=n):
                expr = BellExpression(n, bits)
                assert abs(classical_bound(expr) - brute_force_classical_bound(n, bits)) < 1e-12

    def test_relabeling_invariance(self):
        values = {
            classical_bound(BellExpression(3, bits))
            for bits in itertools.product((0, 1), repeat=3)
        }
        assert max(values) - min(values) < 1e-12

    def test_large_n_rejected(self):
        with pytest.raises(ValueError):
            classical_bound(BellExpression(11, (0,) * 11))

    def test_violated_by_reference(self):
        for n in range(2, 7):
            expr = BellExpression(n, (0,) * n)
            state = pure_state(ghz_like_vector((0,) * n), (2,) * n)
            value = quantum_value(state, target_observables(n), expr)
            assert classical_bound(expr) < value - 0.5


class TestQuantumValue:
    def test_visibility_scaling(self):
        expr = BellExpression(2, (0, 0))
        state = white_noise_mix(pure_state(PHI_PLUS, (2, 2)), 0.8)
        assert abs(quantum_value(state, target_observables(2), expr) - 1.6) < 1e-12

    def test_product_state(self):
        expr = BellExpression(2, (0, 0))
        state = pure_state(np.array([1.0, 0.0, 0.0, 0.0]), (2, 2))
        assert abs(quantum_value(state, target_observables(2), expr) - 1.0) < 1e-12

    def test_never_exceeds_quantum_bound(self):
        rng = np.random.default_rng(14)
        for n in (2, 3):
            expr = BellExpression(n, (0,) * n)
            op_samples = 1000
            for _ in range(op_samples):
                obs = [
                    (random_projective_observable(2, rng), random_projective_observable(2, rng))
                    for _ in range(n)
                ]
                top = float(np.max(np.linalg.eigvalsh(build_bell_operator(expr, obs))))
                assert top <= expr.quantum_bound + 1e-9


class TestSOS:
    def test_reference_identity_is_exact(self):
        for n in (2, 3):
            wit = sos_residual(BellExpression(n, (0,) * n), target_observables(n))
            assert wit.is_exact_identity
            assert wit.residual_norm < 1e-12

    def test_exact_for_random_projective_strategies(self):
        rng = np.random.default_rng(15)
        for _ in range(30):
            obs = [
                (random_projective_observable(2, rng), random_projective_observable(2, rng))
                for _ in range(2)
            ]
            wit = sos_residual(BellExpression(2, (0, 1)), obs)
            assert wit.is_exact_identity, wit.residual_norm

    def test_contracted_observable_breaks_identity_but_stays_psd(self):
        obs = target_observables(2)
        shrunk = [(0.9 * obs[0][0], obs[0][1]), obs[1]]
        wit = sos_residual(BellExpression(2, (0, 0)), shrunk)
        assert not wit.is_exact_identity
        assert wit.residual_norm > 1e-3
        assert wit.min_eigenvalue > -1e-9


class TestSOSRelations:
    def test_reference_strategy_is_maximal(self):
        state = pure_state(PHI_PLUS, (2, 2))
        rel = check_sos_relations(state, target_observables(2), BellExpression(2, (0, 0)))
        assert rel.maximal
        assert rel.p_violation < 1e-12 and max(rel.q_violations) < 1e-12

    def test_wrong_setting_is_detected(self):
        state = pure_state(PHI_PLUS, (2, 2))
        obs = [target_observables(2)[0], (X, X)]  # party 2 setting 0 should be Z
        rel = check_sos_relations(state, obs, BellExpression(2, (0, 0)))
        assert max(rel.q_violations) > 0.1
        assert abs(max(rel.q_violations) - 2.0) < 1e-9

    def test_noisy_state_is_not_maximal(self):
        state = white_noise_mix(pure_state(PHI_PLUS, (2, 2)), 0.5)
        rel = check_sos_relations(state, target_observables(2), BellExpression(2, (0, 0)))
        assert rel.p_violation > 0.01 and min(rel.q_violations) > 0.01


class TestExtraStatistics:
    def test_reference_conditional_state_passes(self, ref2):
        sigma = conditional_post_interaction_state(ref2, extra_branch_settings(2), (0, 0))
        stats = extra_statistics_check(sigma, ref2.observables_t2, 2)
        assert stats.passes
        assert len(stats.entries) == 2

    def test_wrong_conditioning_event_fails(self, ref2):
        sigma = conditional_post_interaction_state(ref2, (0, 0), (0, 0))
        stats = extra_statistics_check(sigma, ref2.observables_t2, 2)
        assert not stats.passes

    def test_three_party_reference_passes_all_entries(self, ref3):
        sigma = conditional_post_interaction_state(ref3, extra_branch_settings(3), (0, 0, 0))
        stats = extra_statistics_check(sigma, ref3.observables_t2, 3)
        assert stats.passes
        assert len(stats.entries) == 2 * (3 - 1)
        for _, value, target in stats.entries:
            assert abs(value - target) < 1e-12
