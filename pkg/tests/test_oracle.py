import json
from dataclasses import replace

import numpy as np
import pytest

from rmpc.errors import ContractViolation, GridBudgetError
from rmpc.oracle import (
    BOUNDS_ACTIVE,
    MAX_ITERS,
    OPTIMAL,
    RESTARTS_DISAGREE,
    MpcOracle,
    OracleCache,
    OracleOptions,
    OracleSolution,
    ShootingOptions,
    ShootingProblem,
    build_solution,
    cache_key,
    check_bellman,
    control_lattice,
    first_controls,
    solve_grid,
    solve_riccati,
    solve_shooting,
)
from rmpc.rollout import MpcInstance, simulate_controls

SHOOTING = ShootingOptions(restarts=3, iterations=400, learning_rate=0.05, seed=0, workers=1)


def test_riccati_single_step_closed_form(wide_integrator, lq_utility):
    x0 = np.array([0.1, 0.5])
    r = np.array([0.3])
    A, B = wide_integrator.A, wide_integrator.B
    C, Q, R, S = lq_utility.quadratic_form(1)
    M = C.T @ Q @ C + S
    m = (C.T @ Q).ravel() * r[0]
    u = np.linalg.solve(R + B.T @ M @ B, B.T @ m - B.T @ M @ A @ x0)
    solution = solve_riccati(wide_integrator, lq_utility, x0, r, 1)
    assert solution.status == OPTIMAL
    np.testing.assert_allclose(solution.controls[0], u, rtol=1e-9)


def test_riccati_beats_perturbations(wide_integrator, lq_utility, lq_instance):
    solution = solve_riccati(wide_integrator, lq_utility, lq_instance.x0, lq_instance.r, 5)
    rng = np.random.default_rng(0)
    for _ in range(20):
        perturbed = solution.controls + 1e-3 * rng.normal(size=solution.controls.shape)
        _, _, cost = simulate_controls(wide_integrator, lq_utility, lq_instance.x0, lq_instance.r, perturbed)
        assert cost > solution.cost


def test_solution_cost_is_the_simulated_cost(wide_integrator, lq_utility, lq_instance):
    solution = solve_riccati(wide_integrator, lq_utility, lq_instance.x0, lq_instance.r, 5)
    states, _, cost = simulate_controls(wide_integrator, lq_utility, lq_instance.x0, lq_instance.r,
                                        solution.controls)
    np.testing.assert_allclose(solution.states, states)
    assert solution.cost == cost
    assert solution.states.shape == (6, 2) and solution.horizon == 5


def test_shooting_agrees_with_riccati(wide_integrator, lq_utility, lq_instance):
    exact = solve_riccati(wide_integrator, lq_utility, lq_instance.x0, lq_instance.r, 4)
    solution = solve_shooting(wide_integrator, lq_utility, lq_instance.x0, lq_instance.r, 4, SHOOTING)
    assert solution.status == OPTIMAL
    assert solution.cost == pytest.approx(exact.cost, rel=1e-6, abs=1e-9)
    np.testing.assert_allclose(solution.controls, exact.controls, atol=1e-4)


def test_shooting_adjoint_gradient(bicycle, bicycle_utility):
    problem = ShootingProblem(bicycle, bicycle_utility, [0.5, 0.0, 0.1, 0.0], [0.0, 0.2, 0.4], 3)
    z = np.array([0.1, -0.3, 0.2])
    _, grad = problem.cost_and_grad(z)
    eps = 1e-6
    expected = []
    for j in range(z.size):
        step = np.zeros_like(z)
        step[j] = eps
        expected.append((problem.cost_and_grad(z + step)[0] - problem.cost_and_grad(z - step)[0]) / (2 * eps))
    np.testing.assert_allclose(grad, expected, rtol=1e-5, atol=1e-8)


def test_projected_gradient_drops_outward_components():
    z = np.array([-1.0, 1.0, 0.0, -1.0])
    g = np.array([2.0, -2.0, 3.0, -1.0])
    np.testing.assert_array_equal(ShootingProblem.projected_gradient(z, g), [0.0, 0.0, 3.0, -1.0])


def test_shooting_is_deterministic(bicycle, bicycle_utility):
    x0, r = [1.0, 0.0, 0.0, 0.0], [0.0, 0.0, 0.0]
    a = solve_shooting(bicycle, bicycle_utility, x0, r, 3, SHOOTING)
    b = solve_shooting(bicycle, bicycle_utility, x0, r, 3, SHOOTING)
    np.testing.assert_array_equal(a.controls, b.controls)
    assert np.all(np.abs(a.controls) <= bicycle.params.u_bound)
    # steering towards the reference from a positive offset
    assert a.controls[0, 0] < 0


def test_a_single_restart_is_never_optimal(wide_integrator, lq_utility, lq_instance):
    solution = solve_shooting(wide_integrator, lq_utility, lq_instance.x0, lq_instance.r, 3,
                              replace(SHOOTING, restarts=1))
    assert solution.status in (RESTARTS_DISAGREE, MAX_ITERS)


def test_shooting_without_iterations_reports_max_iters(wide_integrator, lq_utility, lq_instance):
    solution = solve_shooting(wide_integrator, lq_utility, lq_instance.x0, lq_instance.r, 3,
                              replace(SHOOTING, iterations=1, polish=False))
    assert solution.status == MAX_ITERS


def test_active_bounds_fall_back_to_shooting(double_integrator, lq_utility):
    x0, r = np.array([20.0, 0.0]), np.zeros(3)
    unconstrained = solve_riccati(double_integrator, lq_utility, x0, r, 3)
    assert unconstrained.status == BOUNDS_ACTIVE
    oracle = MpcOracle(double_integrator, lq_utility, OracleOptions(restarts=3, iterations=400))
    solution = oracle(x0, r, 3)
    assert solution.stats["solver"] == "shooting"
    assert solution.status == OPTIMAL
    assert solution.controls[0, 0] == pytest.approx(-1.0, abs=1e-9)
    assert np.all(np.abs(solution.controls) <= 1.0)
    assert solution.cost <= unconstrained.cost + 1e-9


def test_control_lattice():
    np.testing.assert_allclose(control_lattice(-1.0, 1.0, 0.5), [-1.0, -0.5, 0.0, 0.5, 1.0])
    assert control_lattice(-1.0, 1.0, 1e-3).size == 2001


def test_grid_agrees_with_shooting(scalar_cubic, scalar_utility):
    x0, r = [0.4], [0.8, -0.2]
    grid = solve_grid(scalar_cubic, scalar_utility, x0, r, 2, grid_step=1e-2)
    shooting = solve_shooting(scalar_cubic, scalar_utility, x0, r, 2, SHOOTING)
    assert grid.status == OPTIMAL and grid.stats["points"] == 201 ** 2
    assert shooting.cost <= grid.cost + 1e-12
    assert grid.cost - shooting.cost < 1e-3
    np.testing.assert_allclose(grid.controls, shooting.controls, atol=2e-2)


def test_grid_limits(scalar_cubic, scalar_utility):
    with pytest.raises(GridBudgetError):
        solve_grid(scalar_cubic, scalar_utility, [0.0], [0.0, 0.0, 0.0], 3, grid_step=1e-3)
    with pytest.raises(ContractViolation):
        solve_grid(scalar_cubic, scalar_utility, [0.0], [0.0] * 4, 4, grid_step=0.5)


def test_bellman_consistency_of_the_exact_oracle(wide_integrator, lq_utility, lq_instance):
    oracle = MpcOracle(wide_integrator, lq_utility, OracleOptions(solver="riccati"))
    report = check_bellman(oracle, lq_instance.x0, lq_instance.r, 5, tol=1e-9)
    assert report.conclusive and report.passed
    assert len(report.discrepancies) == 5
    assert report.max_discrepancy < 1e-9


def test_bellman_check_catches_a_perturbed_solution(wide_integrator, lq_utility, lq_instance):
    oracle = MpcOracle(wide_integrator, lq_utility, OracleOptions(solver="riccati"))
    solution = oracle(lq_instance.x0, lq_instance.r, 5)
    controls = solution.controls.copy()
    controls[0] += 0.05
    report = check_bellman(oracle, lq_instance.x0, lq_instance.r, 5, tol=1e-9,
                           solution=replace(solution, controls=controls))
    assert not report.passed
    assert report.max_discrepancy == pytest.approx(0.05, rel=1e-9)


def test_bellman_check_is_inconclusive_on_non_optimal_solves(wide_integrator, lq_utility, lq_instance):
    oracle = MpcOracle(wide_integrator, lq_utility, OracleOptions(solver="shooting", restarts=1, iterations=50))
    report = check_bellman(oracle, lq_instance.x0, lq_instance.r, 3, tol=1e-3)
    assert not report.conclusive and not report.passed
    assert "inconclusive" in report.summary()


def test_cache_hits_and_persists(tmp_path, wide_integrator, lq_utility, lq_instance):
    oracle = MpcOracle(wide_integrator, lq_utility, OracleOptions(solver="riccati"), OracleCache(tmp_path))
    first = oracle(lq_instance.x0, lq_instance.r, 5)
    second = oracle(lq_instance.x0, lq_instance.r, 5)
    assert oracle.cache.misses == 1 and oracle.cache.hits == 1
    np.testing.assert_array_equal(first.controls, second.controls)

    reopened = OracleCache(tmp_path)
    assert len(reopened) == 1
    key, restored = reopened.records()[0]
    np.testing.assert_array_equal(restored.controls, first.controls)
    assert restored.status == first.status and restored.cost == first.cost

    record = json.loads((tmp_path / "oracle_cache.jsonl").read_text().splitlines()[0])
    assert record["key"] == key
    assert "wall_ms" not in record["solution"]["stats"]


def test_cache_key_covers_everything_that_changes_the_answer(wide_integrator, lq_utility):
    base = cache_key(wide_integrator, lq_utility, [0.0, 0.0], [0.1, 0.2], 2, {"solver": "riccati"})
    assert base == cache_key(wide_integrator, lq_utility, [0.0, 0.0], [0.1, 0.2, 9.9], 2, {"solver": "riccati"})
    assert base != cache_key(wide_integrator, lq_utility, [0.0, 1e-12], [0.1, 0.2], 2, {"solver": "riccati"})
    assert base != cache_key(wide_integrator.with_params(dt=0.1), lq_utility, [0.0, 0.0], [0.1, 0.2], 2,
                             {"solver": "riccati"})
    assert base != cache_key(wide_integrator, lq_utility, [0.0, 0.0], [0.1, 0.2], 2, {"solver": "grid"})


def test_cache_skips_unreadable_records(tmp_path, wide_integrator, lq_utility, lq_instance):
    oracle = MpcOracle(wide_integrator, lq_utility, OracleOptions(solver="riccati"), OracleCache(tmp_path))
    oracle(lq_instance.x0, lq_instance.r, 5)
    with open(tmp_path / "oracle_cache.jsonl", "a") as f:
        f.write("{not json\n")
    assert len(OracleCache(tmp_path)) == 1


def test_solve_many_matches_single_solves(wide_integrator, lq_utility):
    instances = [MpcInstance([0.1 * i, 0.0], [0.2, 0.1, 0.0], 3) for i in range(4)]
    oracle = MpcOracle(wide_integrator, lq_utility, OracleOptions(solver="riccati", workers=2))
    many = oracle.solve_many(instances, horizons=[1, 2, 3, 3])
    for inst, n, sol in zip(instances, [1, 2, 3, 3], many):
        assert sol.horizon == n
        np.testing.assert_allclose(sol.controls, oracle(inst.x0, inst.r, n).controls)
    firsts = first_controls(many)
    assert firsts.shape == (4, 1)
    np.testing.assert_array_equal(firsts[:, 0], [sol.controls[0, 0] for sol in many])


def test_solution_round_trip_and_box_check(wide_integrator, lq_utility):
    solution = build_solution(wide_integrator, lq_utility, [0.0, 0.0], [0.5], [[0.25]], OPTIMAL, {"wall_ms": 1.0})
    restored = OracleSolution.from_dict(solution.to_dict())
    np.testing.assert_array_equal(restored.controls, solution.controls)
    assert "wall_ms" not in restored.stats
    with pytest.raises(ContractViolation):
        build_solution(wide_integrator, lq_utility, [0.0, 0.0], [0.5], [[10.5]], OPTIMAL)
    with pytest.raises(ContractViolation):
        build_solution(wide_integrator, lq_utility, [0.0, 0.0], [0.5], [[0.0]], "close-enough")


def test_unknown_solver():
    with pytest.raises(ContractViolation):
        OracleOptions(solver="ipopt")
