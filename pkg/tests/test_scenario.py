import itertools
import math

import numpy as np
import pytest

from bellcert.linalg import max_abs
from bellcert.quantum import DichotomicObservable, Interaction, QuantumState, pure_state
from bellcert.scenario import (
    Strategy,
    bell_branch_settings,
    extra_branch_settings,
    repeatability_spotcheck,
    run_scenario,
    scramble_strategy,
)

from conftest import X, Z

SQRT2 = math.sqrt(2.0)


def _identity_interaction_strategy(ref):
    return Strategy(
        source_state=ref.source_state,
        observables_t1=ref.observables_t1,
        observables_t2=ref.observables_t2,
        interaction=Interaction(np.eye(4), (2, 2), (2, 2)),
    )


class TestBranchSettings:
    def test_two_party_values(self):
        assert bell_branch_settings(2) == (0, 0)
        assert extra_branch_settings(2) == (1, 1)

    def test_n_party_values(self):
        assert bell_branch_settings(4) == (0, 0, 1, 1)
        assert extra_branch_settings(4) == (1, 1, 0, 0)


class TestRunScenario:
    def test_reference_two_parties(self, ref2):
        rec = run_scenario(ref2)
        assert abs(rec.t1_bell_value - 2.0) < 1e-12
        assert set(rec.t2_bell_values) == set(itertools.product((0, 1), repeat=2))
        for value in rec.t2_bell_values.values():
            assert abs(value - 2.0) < 1e-12
        assert rec.extra_stats is not None and rec.extra_stats.passes

    def test_reference_three_parties(self, ref3):
        rec = run_scenario(ref3)
        assert abs(rec.t1_bell_value - 4.0) < 1e-12
        assert len(rec.t2_bell_values) == 8
        for value in rec.t2_bell_values.values():
            assert abs(value - 4.0) < 1e-12
        assert rec.extra_stats is not None and rec.extra_stats.passes

    def test_identity_interaction_stays_classical(self, ref2):
        rec = run_scenario(_identity_interaction_strategy(ref2))
        assert max(rec.t2_bell_values.values()) <= SQRT2 + 1e-9

    def test_conditional_normalization(self, ref2):
        rec = run_scenario(ref2)
        for settings in rec.p2.values():
            for probs in settings.values():
                assert abs(float(np.sum(probs)) - 1.0) < 1e-10

    def test_no_signaling_at_t1(self, ref2):
        rec = run_scenario(ref2)
        for x_alice in (0, 1):
            marginals = []
            for x_bob in (0, 1):
                probs = rec.p1[(x_alice, x_bob)]
                marginals.append(probs.sum(axis=1))
            assert max_abs(marginals[0] - marginals[1]) < 1e-10

    def test_zero_probability_events_are_omitted(self):
        obs = tuple(
            (
                DichotomicObservable(Z, party=p, setting=0, time_slice=t),
                DichotomicObservable(X, party=p, setting=1, time_slice=t),
            )
            for p in range(2)
            for t in (1,)
        )
        obs2 = tuple(
            (
                DichotomicObservable(Z, party=p, setting=0, time_slice=2),
                DichotomicObservable(X, party=p, setting=1, time_slice=2),
            )
            for p in range(2)
        )
        strategy = Strategy(
            source_state=pure_state(np.array([1.0, 0, 0, 0]), (2, 2)),
            observables_t1=obs,
            observables_t2=obs2,
            interaction=Interaction(np.eye(4), (2, 2), (2, 2)),
        )
        rec = run_scenario(strategy)
        # first-round Z x Z on |00> is deterministic: only one Bell-branch event
        assert list(rec.t2_bell_values) == [(0, 0)]
        for (x1, a1) in rec.p2:
            assert rec.event_probabilities[(x1, a1)] > 1e-12

    def test_non_projective_first_round_rejected(self, ref2):
        soft = tuple(
            (DichotomicObservable(0.9 * pair[0].matrix), pair[1])
            for pair in ref2.observables_t1
        )
        strategy = Strategy(
            source_state=ref2.source_state,
            observables_t1=soft,
            observables_t2=ref2.observables_t2,
            interaction=ref2.interaction,
        )
        with pytest.raises(ValueError, match="projective"):
            run_scenario(strategy)


def _records_match(a, b, tol=1e-9):
    assert set(a.p1) == set(b.p1)
    for x in a.p1:
        assert max_abs(a.p1[x] - b.p1[x]) < tol
    assert set(a.p2) == set(b.p2)
    for event in a.p2:
        assert set(a.p2[event]) == set(b.p2[event])
        for x2 in a.p2[event]:
            assert max_abs(a.p2[event][x2] - b.p2[event][x2]) < tol
    assert abs(a.t1_bell_value - b.t1_bell_value) < tol
    for key in a.t2_bell_values:
        assert abs(a.t2_bell_values[key] - b.t2_bell_values[key]) < tol
    assert max_abs(np.array(a.extra_stats.values) - np.array(b.extra_stats.values)) < tol


class TestScramble:
    def test_trivial_aux_reproduces_statistics(self, ref2):
        scrambled = scramble_strategy(ref2, (1, 1), seed=0)
        _records_match(run_scenario(ref2), run_scenario(scrambled.strategy))

    def test_statistics_invariance_across_seeds_and_aux(self, ref2):
        base = run_scenario(ref2)
        for seed, aux in ((1, (2, 1)), (2, (1, 3)), (3, (2, 2)), (4, (3, 3))):
            scrambled = scramble_strategy(ref2, aux, seed=seed)
            _records_match(base, run_scenario(scrambled.strategy))

    def test_three_party_invariance(self, ref3):
        base = run_scenario(ref3)
        scrambled = scramble_strategy(ref3, (2, 1, 2), seed=5)
        _records_match(base, run_scenario(scrambled.strategy))

    def test_planted_objects_are_consistent(self, ref2):
        scrambled = scramble_strategy(ref2, (2, 2), seed=6)
        assert scrambled.aux_state.dims == (2, 2)
        v0 = scrambled.aux_unitary
        assert max_abs(np.conj(v0).T @ v0 - np.eye(4)) < 1e-10

    def test_rank_deficient_hook(self, ref2):
        scrambled = scramble_strategy(ref2, (2, 2), seed=7, xi_rank=1)
        eigs = np.linalg.eigvalsh(scrambled.aux_state.density)
        assert eigs[0] < 1e-12 and eigs[-1] > 0.1


class TestRepeatabilitySpotcheck:
    def test_honest_strategy_is_consistent(self, ref2):
        result = repeatability_spotcheck(ref2, rounds=1000, seed=0)
        assert result.consistent and result.mismatches == 0

    def test_cheating_device_is_caught(self, ref2):
        def swap_in_mixed_state(_state):
            return QuantumState(np.eye(4) / 4.0, (2, 2))

        result = repeatability_spotcheck(ref2, rounds=200, seed=1, tamper=swap_in_mixed_state)
        assert not result.consistent
        # expected mismatch rate 3/4 for two parties
        assert result.mismatches > 100

    def test_zero_rounds_vacuously_consistent(self, ref2):
        result = repeatability_spotcheck(ref2, rounds=0, seed=2)
        assert result.consistent and result.rounds == 0


class TestStrategyValidation:
    def test_dimension_chain_checked(self, ref2):
        with pytest.raises(ValueError):
            Strategy(
                source_state=ref2.source_state,
                observables_t1=ref2.observables_t1,
                observables_t2=ref2.observables_t2,
                interaction=Interaction(np.eye(8), (2, 4), (2, 4)),
            )
