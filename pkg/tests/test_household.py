import csv

import numpy as np
import pytest

from src.oppcost.household import (
    CRRA_UTILITY,
    MYOPIC_POLICY,
    CapitalGrid,
    HouseholdModel,
    bellman_operator,
    bellman_residual,
    closed_form_coefficients,
    closed_form_log_full_depreciation,
    closed_form_policy,
    closed_form_value,
    compare_policies,
    export_value_csv,
    household_choice_opportunity_costs,
    make_capital_grid,
    reward_matrix,
    simulate_policy,
    steady_state_capital,
    value_function_iteration,
)
from src.oppcost.utils import (
    ConvergenceError,
    GridConfigurationError,
    InputError,
    SimulationRangeError,
    UnsupportedConfigurationError,
)


@pytest.fixture(scope="module")
def brock_mirman_solution():
    model = HouseholdModel(beta=0.95, delta=1.0, alpha=0.3, A=1.0)
    grid = make_capital_grid(model, n=501)
    return model, value_function_iteration(model, grid, tol=1e-8)


@pytest.mark.parametrize("kwargs", [
    {"beta": 0, "delta": 1, "alpha": 0.3},
    {"beta": 1, "delta": 1, "alpha": 0.3},
    {"beta": 0.9, "delta": 0, "alpha": 0.3},
    {"beta": 0.9, "delta": 1, "alpha": 1.0},
    {"beta": 0.9, "delta": 1, "alpha": 0.3, "A": 0},
    {"beta": 0.9, "delta": 1, "alpha": 0.3, "utility_kind": CRRA_UTILITY},
    {"beta": 0.9, "delta": 1, "alpha": 0.3, "utility_kind": CRRA_UTILITY, "sigma": 1.0},
    {"beta": 0.9, "delta": 1, "alpha": 0.3, "utility_kind": "quadratic"},
])
def test_model_validation(kwargs):
    with pytest.raises(InputError):
        HouseholdModel(**kwargs)


def test_functional_forms_satisfy_curvature_assumptions():
    C = np.array([0.1, 0.5, 1.0, 2.0])
    for model in (HouseholdModel(0.9, 0.1, 0.3), HouseholdModel(0.9, 0.1, 0.3, utility_kind=CRRA_UTILITY, sigma=2.0)):
        assert np.all(model.marginal_utility(C) > 0)
        assert np.all(np.diff(model.marginal_utility(C)) < 0)
        assert model.marginal_utility(1e-9) > 1e6
        assert np.all(np.diff(model.production(C)) > 0)
        assert np.all(np.diff(np.diff(model.production(np.linspace(0.1, 2, 20)))) < 0)


def test_grid_validation():
    with pytest.raises(InputError):
        CapitalGrid(np.array([0.1, 0.1, 0.2]))
    with pytest.raises(InputError):
        CapitalGrid(np.array([0.0, 0.1]))


def test_steady_state_and_default_grid(brock_mirman):
    k_star = steady_state_capital(brock_mirman)
    assert k_star == pytest.approx(0.285 ** (1 / 0.7))
    grid = make_capital_grid(brock_mirman)
    assert grid.n == 501
    assert grid.points[0] == pytest.approx(0.05 * k_star)
    assert grid.points[-1] == pytest.approx(2.5 * k_star)


def test_grid_too_high_for_some_state(brock_mirman):
    grid = CapitalGrid(np.array([2.0, 3.0]))
    with pytest.raises(GridConfigurationError):
        bellman_operator(brock_mirman, grid, np.zeros(2))


def test_bellman_with_zero_values_is_one_period_problem(brock_mirman, small_grid):
    TV, policy = bellman_operator(brock_mirman, small_grid, np.zeros(small_grid.n))
    assert np.all(policy == 0)
    expected = brock_mirman.utility(brock_mirman.resources(small_grid.points) - small_grid.points[0])
    np.testing.assert_allclose(TV, expected)


def test_bellman_rejects_bad_values(brock_mirman, small_grid):
    with pytest.raises(InputError):
        bellman_operator(brock_mirman, small_grid, np.zeros(3))
    with pytest.raises(InputError):
        bellman_operator(brock_mirman, small_grid, np.full(small_grid.n, np.nan))


def test_bellman_contraction(brock_mirman, small_grid):
    rng = np.random.default_rng(0)
    rewards = reward_matrix(brock_mirman, small_grid)
    for _ in range(100):
        V1 = rng.normal(scale=10, size=small_grid.n)
        V2 = rng.normal(scale=10, size=small_grid.n)
        TV1, _ = bellman_operator(brock_mirman, small_grid, V1, rewards=rewards)
        TV2, _ = bellman_operator(brock_mirman, small_grid, V2, rewards=rewards)
        assert np.max(np.abs(TV1 - TV2)) <= 0.95 * np.max(np.abs(V1 - V2)) + 1e-12


def test_vfi_residuals_shrink_by_beta():
    model = HouseholdModel(beta=0.5, delta=1.0, alpha=0.3, A=1.0)
    grid = make_capital_grid(model, n=101)
    solution = value_function_iteration(model, grid)
    residuals = np.asarray(solution.residuals)
    assert solution.residual < 1e-8
    assert np.all(residuals[1:] <= 0.5 * residuals[:-1] + 1e-12)
    assert solution.error_bound == pytest.approx(solution.residual * 0.5 / 0.5)


def test_vfi_nearly_myopic_household_consumes_everything(small_grid):
    model = HouseholdModel(beta=0.01, delta=1.0, alpha=0.3, A=1.0)
    solution = value_function_iteration(model, small_grid)
    assert np.all(solution.policy == 0)


def test_vfi_raises_without_convergence(brock_mirman, small_grid):
    with pytest.raises(ConvergenceError) as info:
        value_function_iteration(brock_mirman, small_grid, tol=1e-8, max_iter=3)
    assert info.value.residual > 1e-8


def test_closed_form_coefficients_solve_the_bellman_equation(brock_mirman):
    a, b = closed_form_coefficients(brock_mirman)
    assert b == pytest.approx(0.3 / (1 - 0.285))
    assert b == pytest.approx(0.41958, abs=1e-5)
    assert closed_form_policy(brock_mirman, 1.0) == pytest.approx(0.285)

    # substitute V(K) = a + b ln K with the analytic policy into the right-hand side
    K = np.geomspace(0.01, 1.0, 25)
    K_next = closed_form_policy(brock_mirman, K)
    rhs = np.log(brock_mirman.resources(K) - K_next) + 0.95 * closed_form_value(brock_mirman, K_next)
    np.testing.assert_allclose(rhs, closed_form_value(brock_mirman, K), rtol=1e-12, atol=1e-12)


def test_closed_form_unsupported_configurations(small_grid):
    with pytest.raises(UnsupportedConfigurationError):
        closed_form_log_full_depreciation(HouseholdModel(0.95, 0.5, 0.3), small_grid)
    crra = HouseholdModel(0.95, 1.0, 0.3, utility_kind=CRRA_UTILITY, sigma=2.0)
    with pytest.raises(UnsupportedConfigurationError):
        closed_form_log_full_depreciation(crra, small_grid)


def test_closed_form_small_beta_consumes_almost_everything():
    model = HouseholdModel(beta=1e-6, delta=1.0, alpha=0.3, A=1.0)
    assert closed_form_policy(model, 1.0) == pytest.approx(0.0, abs=1e-6)


def test_vfi_matches_closed_form(brock_mirman_solution):
    model, solution = brock_mirman_solution
    grid = solution.grid
    exact = closed_form_policy(model, grid.points)
    middle = slice(int(0.1 * grid.n), int(np.ceil(0.9 * grid.n)))
    relative = np.abs(solution.next_capital() - exact) / exact
    assert np.max(relative[middle]) <= 0.02

    oracle = closed_form_log_full_depreciation(model, grid)
    assert oracle.iterations == 0
    assert np.max(np.abs(solution.values - oracle.values)) < 0.05


def test_converged_solution_properties(brock_mirman_solution):
    model, solution = brock_mirman_solution
    assert np.all(np.diff(solution.values) >= 0)
    assert np.all(np.diff(solution.policy) >= 0)
    assert bellman_residual(model, solution.grid, solution.values) <= 1e-8
    assert np.all(solution.consumption(model) > 0)


def test_value_iterates_move_monotonically(brock_mirman, small_grid):
    rewards = reward_matrix(brock_mirman, small_grid)
    V = np.zeros(small_grid.n)
    steps = []
    for _ in range(30):
        V_next, _ = bellman_operator(brock_mirman, small_grid, V, rewards=rewards)
        steps.append(V_next - V)
        V = V_next
    steps = np.asarray(steps)
    # log utility is negative on this grid, so iterates fall from V0 = 0 and keep falling
    if np.all(steps[0] <= 0):
        assert np.all(steps <= 1e-12)
    elif np.all(steps[0] >= 0):
        assert np.all(steps >= -1e-12)
    else:
        assert np.all(np.max(np.abs(steps[1:]), axis=1) <= np.max(np.abs(steps[:-1]), axis=1) + 1e-12)


def test_steady_state_simulation_stays_put(brock_mirman_solution):
    model, solution = brock_mirman_solution
    k_star = steady_state_capital(model)
    result = simulate_policy(model, solution.grid, solution, k_star, 50)
    cell = solution.grid.cell_width(solution.grid.nearest_index(k_star))
    assert np.max(np.abs(result.capital - k_star)) <= cell


def test_dp_beats_myopic(brock_mirman_solution):
    model, solution = brock_mirman_solution
    compared = compare_policies(model, solution, steady_state_capital(model), 100)
    assert compared["dp"].lifetime_utility > compared["myopic"].lifetime_utility
    assert compared["margin"] > 0
    assert np.all(compared["myopic"].capital[1:] == solution.grid.points[0])


def test_single_period_simulation_is_current_utility(brock_mirman_solution):
    model, solution = brock_mirman_solution
    K0 = float(solution.grid.points[200])
    for policy in (solution, MYOPIC_POLICY):
        result = simulate_policy(model, solution.grid, policy, K0, 1)
        assert result.lifetime_utility == pytest.approx(float(model.utility(result.consumption[0])))


def test_simulation_outside_grid(brock_mirman_solution):
    model, solution = brock_mirman_solution
    with pytest.raises(SimulationRangeError):
        simulate_policy(model, solution.grid, solution, 100.0, 10)


def test_choice_opportunity_costs_at_steady_state(brock_mirman_solution):
    model, solution = brock_mirman_solution
    i = solution.grid.nearest_index(steady_state_capital(model))
    state = household_choice_opportunity_costs(model, solution.grid, solution.values, i)

    _, policy = bellman_operator(model, solution.grid, solution.values)
    assert state.dp_choice.index == policy[i]
    assert state.myopic_choice.index == 0
    assert state.myopic_choice.immediate_utility > state.dp_choice.immediate_utility
    # the myopic choice forgoes the DP choice's total, which beats its own
    assert state.myopic_choice.opportunity_cost == pytest.approx(state.dp_choice.total_value)
    assert state.myopic_choice.opportunity_cost > state.myopic_choice.total_value
    assert state.dp_choice.opportunity_cost <= state.dp_choice.total_value


def test_export_csv(tmp_path, brock_mirman_solution):
    model, solution = brock_mirman_solution
    path = tmp_path / "out" / "value.csv"
    export_value_csv(solution, model, str(path))
    with open(path, newline="") as f:
        rows = list(csv.DictReader(f))
    assert list(rows[0].keys()) == ["K", "V", "K_prime", "C"]
    assert len(rows) == solution.grid.n
    assert float(rows[10]["K_prime"]) == pytest.approx(solution.next_capital()[10])
