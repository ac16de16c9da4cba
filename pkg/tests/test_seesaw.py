import numpy as np

from bellcert.bell import BellExpression, build_bell_operator
from bellcert.linalg import max_abs
from bellcert.quantum import random_projective_observable
from bellcert.reference import ghz_like_vector, target_observables
from bellcert.seesaw import (
    SeesawConfig,
    optimal_observable_update,
    optimal_state_update,
    seesaw_maximize,
    seesaw_restarts,
)

from conftest import X, Z, phase_distance


class TestObservableUpdate:
    def test_sign_fixed_point(self):
        assert max_abs(optimal_observable_update(Z) - Z) < 1e-12

    def test_scale_invariance(self):
        assert max_abs(optimal_observable_update(0.3 * X) - X) < 1e-12

    def test_degenerate_effective_operator(self):
        out = optimal_observable_update(np.diag([1.0, 0.0]).astype(complex))
        assert max_abs(out @ out - np.eye(2)) < 1e-12

    def test_never_decreases_objective(self):
        rng = np.random.default_rng(40)
        for _ in range(20):
            h = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
            h = (h + np.conj(h).T) / 2
            o_old = random_projective_observable(4, rng)
            o_new = optimal_observable_update(h)
            assert np.real(np.trace(o_new @ h)) >= np.real(np.trace(o_old @ h)) - 1e-10


class TestStateUpdate:
    def test_reference_operator_two_parties(self):
        expr = BellExpression(2, (0, 0))
        op = build_bell_operator(expr, target_observables(2))
        state, value = optimal_state_update(op, (2, 2))
        assert abs(value - 2.0) < 1e-10
        phi = ghz_like_vector((0, 0))
        assert phase_distance(state.density, np.outer(phi, phi.conj())) < 1e-10

    def test_reference_operator_three_parties(self):
        expr = BellExpression(3, (0, 0, 0))
        op = build_bell_operator(expr, target_observables(3))
        _, value = optimal_state_update(op, (2, 2, 2))
        assert abs(value - 4.0) < 1e-10

    def test_value_is_top_eigenvalue(self):
        rng = np.random.default_rng(41)
        h = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
        h = (h + np.conj(h).T) / 2
        _, value = optimal_state_update(h, (2, 2))
        assert abs(value - np.max(np.linalg.eigvalsh(h))) < 1e-10


class TestSeesaw:
    def test_monotone_convergence(self):
        expr = BellExpression(2, (0, 0))
        values = []
        for seed in range(5):
            cfg = SeesawConfig(local_dims=(2, 2), max_iters=50, seed=seed)
            result = seesaw_maximize(expr, cfg)
            values.append(result.value)
            assert result.value <= expr.quantum_bound + 1e-9
        assert max(values) >= expr.quantum_bound - 1e-6

    def test_restart_stability_two_parties(self):
        expr = BellExpression(2, (0, 0))
        results = seesaw_restarts(expr, (2, 2), range(20))
        good = sum(r.value >= expr.quantum_bound - 1e-4 for r in results)
        assert good >= 18

    def test_three_party_target(self):
        expr = BellExpression(3, (0, 0, 0))
        results = seesaw_restarts(expr, (2, 2, 2), range(10))
        assert max(r.value for r in results) >= expr.quantum_bound - 1e-6

    def test_no_dimension_advantage(self):
        expr = BellExpression(2, (0, 0))
        results = seesaw_restarts(expr, (3, 3), range(8))
        for r in results:
            assert r.value <= expr.quantum_bound + 1e-9

    def test_per_iteration_monotonicity(self):
        # re-run one seed manually, tracking the value after every update
        expr = BellExpression(2, (0, 1))
        cfg = SeesawConfig(local_dims=(2, 2), max_iters=30, seed=7)
        rng = np.random.default_rng(cfg.seed)
        observables = [
            [random_projective_observable(2, rng) for _ in range(2)] for _ in range(2)
        ]
        from bellcert.seesaw import _effective_operator

        last = -np.inf
        state = None
        for _ in range(10):
            op = build_bell_operator(expr, observables)
            state, value = optimal_state_update(op, (2, 2))
            assert value >= last - 1e-12
            last = value
            for party in range(2):
                for setting in (0, 1):
                    eff = _effective_operator(expr, observables, state, party, setting)
                    observables[party][setting] = optimal_observable_update(eff)
                    value = float(
                        np.real(
                            np.trace(build_bell_operator(expr, observables) @ state.density)
                        )
                    )
                    assert value >= last - 1e-12
                    last = value
