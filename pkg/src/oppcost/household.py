"""
Dynamic household problem: consume or carry capital forward.

    V(K) = max over K' of  u(C) + beta * V(K')
    C    = f(K) + (1 - delta) * K - K'

Solved by value-function iteration on a discrete capital grid; the
log-utility, full-depreciation case has a closed form used as an oracle.
"""
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple, Union

import numpy as np
from tqdm import tqdm

from src.oppcost.utils import (
    ConvergenceError,
    GridConfigurationError,
    InputError,
    SimulationRangeError,
    UnsupportedConfigurationError,
    format_number,
    get_logger,
    save_rows_to_csv,
)

LOG_UTILITY = "log"
CRRA_UTILITY = "crra"
MYOPIC_POLICY = "myopic-greedy"
DP_POLICY = "dp"

DEFAULT_GRID_N = 501
DEFAULT_GRID_LOW = 0.05
DEFAULT_GRID_HIGH = 2.5
DEFAULT_TOL = 1e-8
DEFAULT_MAX_ITER = 10000


@dataclass(frozen=True)
class HouseholdModel:
    beta: float
    delta: float
    alpha: float
    A: float = 1.0
    utility_kind: str = LOG_UTILITY
    sigma: Optional[float] = None

    def __post_init__(self):
        if not 0 < self.beta < 1:
            raise InputError(f"discount factor beta must lie in (0, 1), got {self.beta}")
        if not 0 < self.delta <= 1:
            raise InputError(f"depreciation delta must lie in (0, 1], got {self.delta}")
        if not 0 < self.alpha < 1:
            raise InputError(f"capital share alpha must lie in (0, 1), got {self.alpha}")
        if not self.A > 0:
            raise InputError(f"productivity A must be > 0, got {self.A}")
        if self.utility_kind not in (LOG_UTILITY, CRRA_UTILITY):
            raise InputError(f"utility must be '{LOG_UTILITY}' or '{CRRA_UTILITY}', got {self.utility_kind!r}")
        if self.utility_kind == CRRA_UTILITY:
            if self.sigma is None or not self.sigma > 0 or self.sigma == 1:
                raise InputError(f"CRRA utility needs sigma > 0 and sigma != 1, got {self.sigma}")

    def production(self, K):
        return self.A * np.power(K, self.alpha)

    def resources(self, K):
        """Output plus undepreciated capital: what can be split between C and K'."""
        return self.production(K) + (1 - self.delta) * np.asarray(K)

    def utility(self, C):
        C = np.asarray(C, dtype=float)
        if self.utility_kind == LOG_UTILITY:
            return np.log(C)
        return np.power(C, 1 - self.sigma) / (1 - self.sigma)

    def marginal_utility(self, C):
        C = np.asarray(C, dtype=float)
        if self.utility_kind == LOG_UTILITY:
            return 1.0 / C
        return np.power(C, -self.sigma)

    def to_dict(self) -> Dict:
        return {
            "beta": self.beta,
            "delta": self.delta,
            "alpha": self.alpha,
            "A": self.A,
            "utility": self.utility_kind,
            "sigma": self.sigma,
        }


@dataclass(frozen=True, eq=False)
class CapitalGrid:
    points: np.ndarray

    def __post_init__(self):
        points = np.asarray(self.points, dtype=float)
        if points.ndim != 1 or points.size < 1:
            raise InputError("capital grid must be a non-empty 1-D array")
        if not np.all(np.isfinite(points)) or np.any(points <= 0):
            raise InputError("capital grid points must be finite and > 0")
        if np.any(np.diff(points) <= 0):
            raise InputError("capital grid points must be strictly increasing")
        points.setflags(write=False)
        object.__setattr__(self, "points", points)

    @property
    def n(self) -> int:
        return int(self.points.size)

    def contains(self, K: float) -> bool:
        return bool(self.points[0] <= K <= self.points[-1])

    def nearest_index(self, K: float) -> int:
        j = int(np.searchsorted(self.points, K))
        if j == 0:
            return 0
        if j == self.n:
            return self.n - 1
        return j if self.points[j] - K < K - self.points[j - 1] else j - 1

    def cell_width(self, i: int) -> float:
        """Width of the larger grid cell adjacent to point i."""
        widths = np.diff(self.points)
        if widths.size == 0:
            return 0.0
        left = widths[i - 1] if i > 0 else 0.0
        right = widths[i] if i < widths.size else 0.0
        return float(max(left, right))


@dataclass(frozen=True, eq=False)
class ValueSolution:
    grid: CapitalGrid
    values: np.ndarray
    policy: np.ndarray
    iterations: int
    residual: float
    error_bound: float
    residuals: Tuple[float, ...] = field(default=())

    def next_capital(self) -> np.ndarray:
        return self.grid.points[self.policy]

    def consumption(self, model: HouseholdModel) -> np.ndarray:
        return model.resources(self.grid.points) - self.next_capital()

    def to_dict(self, model: HouseholdModel) -> Dict:
        return {
            "grid_n": self.grid.n,
            "iterations": self.iterations,
            "residual": self.residual,
            "error_bound": self.error_bound,
            "K": self.grid.points.tolist(),
            "V": self.values.tolist(),
            "K_prime": self.next_capital().tolist(),
            "C": self.consumption(model).tolist(),
        }


def steady_state_capital(model: HouseholdModel) -> float:
    """K* solving beta * (f'(K) + 1 - delta) = 1."""
    return float((model.alpha * model.A / (1 / model.beta - 1 + model.delta)) ** (1 / (1 - model.alpha)))


def make_capital_grid(
    model: HouseholdModel,
    n: int = DEFAULT_GRID_N,
    low: float = DEFAULT_GRID_LOW,
    high: float = DEFAULT_GRID_HIGH,
    spacing: str = "geometric",
) -> CapitalGrid:
    """n points on [low*K*, high*K*]; geometric spacing packs points where V bends most."""
    if n < 2:
        raise InputError(f"grid needs at least 2 points, got {n}")
    if not 0 < low < high:
        raise InputError(f"grid bounds must satisfy 0 < low < high, got {low}, {high}")
    k_star = steady_state_capital(model)
    if spacing == "geometric":
        points = np.geomspace(low * k_star, high * k_star, n)
    elif spacing == "linear":
        points = np.linspace(low * k_star, high * k_star, n)
    else:
        raise InputError(f"unknown grid spacing {spacing!r}")
    return CapitalGrid(points)


def reward_matrix(model: HouseholdModel, grid: CapitalGrid) -> np.ndarray:
    """
    u(C) for every (K_i, K'_j) pair, -inf where C <= 0.

    Raises:
        GridConfigurationError: some K_i admits no feasible K'.
    """
    K = grid.points
    consumption = model.resources(K)[:, None] - K[None, :]
    feasible = consumption > 0

    stranded = np.flatnonzero(~feasible.any(axis=1))
    if stranded.size:
        raise GridConfigurationError(
            f"grid minimum {format_number(K[0])} is too high: capital {format_number(K[stranded[0]])} "
            f"cannot fund any grid choice with positive consumption"
        )

    rewards = np.full(consumption.shape, -np.inf)
    rewards[feasible] = model.utility(consumption[feasible])
    return rewards


def _apply_bellman(rewards: np.ndarray, beta: float, V: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    objective = rewards + beta * V[None, :]
    policy = np.argmax(objective, axis=1)  # first maximum: smallest j on ties
    return objective[np.arange(objective.shape[0]), policy], policy


def _check_values(grid: CapitalGrid, V) -> np.ndarray:
    V = np.asarray(V, dtype=float)
    if V.shape != (grid.n,):
        raise InputError(f"value array has shape {V.shape}, expected ({grid.n},)")
    if not np.all(np.isfinite(V)):
        raise InputError("value array must be finite")
    return V


def bellman_operator(
    model: HouseholdModel, grid: CapitalGrid, V, rewards: Optional[np.ndarray] = None
) -> Tuple[np.ndarray, np.ndarray]:
    """
    One application of the Bellman operator on the grid.

    Returns:
        (TV, policy) where policy[i] is the index of the chosen K'.
    """
    V = _check_values(grid, V)
    if rewards is None:
        rewards = reward_matrix(model, grid)
    return _apply_bellman(rewards, model.beta, V)


def bellman_residual(model: HouseholdModel, grid: CapitalGrid, V) -> float:
    V = _check_values(grid, V)
    TV, _ = bellman_operator(model, grid, V)
    return float(np.max(np.abs(TV - V)))


def value_function_iteration(
    model: HouseholdModel,
    grid: CapitalGrid,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    progress: bool = False,
    logger=None,
) -> ValueSolution:
    """
    Iterate the Bellman operator from V0 = 0 until the sup-norm change drops
    below tol.

    Raises:
        ConvergenceError: max_iter reached (carries the last residual).
    """
    logger = get_logger(logger)
    if not tol > 0:
        raise InputError(f"tol must be positive, got {tol}")
    if max_iter < 1:
        raise InputError(f"max_iter must be a positive integer, got {max_iter}")

    logger.info(f"=== Value function iteration on {grid.n} grid points (beta={model.beta}) ===")
    rewards = reward_matrix(model, grid)
    V = np.zeros(grid.n)
    residuals: List[float] = []

    for iteration in tqdm(range(1, max_iter + 1), disable=not progress, desc="VFI"):
        V_new, policy = _apply_bellman(rewards, model.beta, V)
        residual = float(np.max(np.abs(V_new - V)))
        residuals.append(residual)
        V = V_new
        if iteration % 100 == 0:
            logger.debug(f"Iteration {iteration}: residual {residual:.3e}")
        if residual < tol:
            error_bound = residual * model.beta / (1 - model.beta)
            logger.info(f"Converged after {iteration} iterations "
                        f"(residual {residual:.3e}, error bound {error_bound:.3e})")
            return ValueSolution(grid, V, policy, iteration, residual, error_bound, tuple(residuals))

    logger.error(f"No convergence after {max_iter} iterations (residual {residuals[-1]:.3e})")
    raise ConvergenceError(max_iter, residuals[-1])


def _require_closed_form(model: HouseholdModel) -> None:
    if model.utility_kind != LOG_UTILITY or model.delta != 1:
        raise UnsupportedConfigurationError(
            "closed form needs log utility and full depreciation (delta = 1), "
            f"got utility={model.utility_kind}, delta={model.delta}"
        )


def closed_form_coefficients(model: HouseholdModel) -> Tuple[float, float]:
    """
    (a, b) in V(K) = a + b ln K. Substituting into the Bellman equation:
    the ln K terms match when b = alpha / (1 - alpha*beta), and the constants
    when a (1 - beta) = ln(A (1 - alpha*beta)) + beta*b ln(alpha*beta*A).
    """
    _require_closed_form(model)
    ab = model.alpha * model.beta
    b = model.alpha / (1 - ab)
    a = (np.log(model.A * (1 - ab)) + model.beta * b * np.log(ab * model.A)) / (1 - model.beta)
    return float(a), float(b)


def closed_form_policy(model: HouseholdModel, K):
    """K' = alpha * beta * A * K^alpha."""
    _require_closed_form(model)
    return model.alpha * model.beta * model.production(K)


def closed_form_value(model: HouseholdModel, K):
    a, b = closed_form_coefficients(model)
    return a + b * np.log(K)


def closed_form_log_full_depreciation(model: HouseholdModel, grid: CapitalGrid) -> ValueSolution:
    """Analytic solution evaluated on the grid, policy snapped to the nearest feasible grid point."""
    _require_closed_form(model)
    K = grid.points
    values = closed_form_value(model, K)
    resources = model.resources(K)

    policy = np.empty(grid.n, dtype=int)
    for i, target in enumerate(closed_form_policy(model, K)):
        j = grid.nearest_index(target)
        while j > 0 and resources[i] - K[j] <= 0:
            j -= 1
        policy[i] = j

    residual = bellman_residual(model, grid, values)
    return ValueSolution(grid, values, policy, 0, residual, residual * model.beta / (1 - model.beta))


@dataclass(frozen=True, eq=False)
class SimulationResult:
    policy_name: str
    consumption: np.ndarray
    capital: np.ndarray
    lifetime_utility: float

    def to_dict(self) -> Dict:
        return {
            "policy": self.policy_name,
            "consumption": self.consumption.tolist(),
            "capital": self.capital.tolist(),
            "lifetime_utility": self.lifetime_utility,
        }


def _smallest_feasible_index(grid: CapitalGrid, resources: float) -> int:
    if resources - grid.points[0] <= 0:
        raise SimulationRangeError(
            f"capital with resources {format_number(resources)} cannot fund the smallest grid point; enlarge the grid"
        )
    return 0


def simulate_policy(
    model: HouseholdModel,
    grid: CapitalGrid,
    policy: Union[ValueSolution, str],
    K0: float,
    T: int,
) -> SimulationResult:
    """
    Follow a policy for T periods from K0 and total sum_t beta^t u(C_t).

    policy is a solved ValueSolution (DP) or MYOPIC_POLICY: consume as much
    as the grid allows, keeping only its smallest point.
    """
    if T < 1:
        raise InputError(f"T must be >= 1, got {T}")
    if not grid.contains(K0):
        raise SimulationRangeError(
            f"K0 = {format_number(K0)} lies outside the grid "
            f"[{format_number(grid.points[0])}, {format_number(grid.points[-1])}]; enlarge the grid"
        )
    if isinstance(policy, ValueSolution):
        policy_name = DP_POLICY
        if policy.grid.n != grid.n or not np.array_equal(policy.grid.points, grid.points):
            raise InputError("solved policy was computed on a different grid")
    elif policy == MYOPIC_POLICY:
        policy_name = MYOPIC_POLICY
    else:
        raise InputError(f"unknown policy {policy!r}")

    K = float(K0)
    i = grid.nearest_index(K)
    capital = [K]
    consumption = []
    for _ in range(T):
        resources = float(model.resources(K))
        if policy_name == DP_POLICY:
            j = int(policy.policy[i])
            # K0 off-grid: step down until the snapped choice is affordable
            while j > 0 and resources - grid.points[j] <= 0:
                j -= 1
            if resources - grid.points[j] <= 0:
                raise SimulationRangeError("capital path leaves the feasible grid range; enlarge the grid")
        else:
            j = _smallest_feasible_index(grid, resources)
        K = float(grid.points[j])
        i = j
        consumption.append(resources - K)
        capital.append(K)

    consumption = np.asarray(consumption)
    discounts = model.beta ** np.arange(T)
    lifetime = float(np.sum(discounts * model.utility(consumption)))
    return SimulationResult(policy_name, consumption, np.asarray(capital), lifetime)


def compare_policies(
    model: HouseholdModel, solution: ValueSolution, K0: float, T: int, logger=None
) -> Dict:
    """DP against the myopic baseline from the same starting capital."""
    logger = get_logger(logger)
    dp = simulate_policy(model, solution.grid, solution, K0, T)
    myopic = simulate_policy(model, solution.grid, MYOPIC_POLICY, K0, T)
    margin = dp.lifetime_utility - myopic.lifetime_utility
    logger.info(f"Lifetime utility over {T} periods: DP {format_number(dp.lifetime_utility)}, "
                f"myopic {format_number(myopic.lifetime_utility)} (margin {format_number(margin)})")
    return {"dp": dp, "myopic": myopic, "margin": margin}


@dataclass(frozen=True)
class ChoiceValue:
    index: int
    next_capital: float
    consumption: float
    immediate_utility: float
    continuation_value: float
    total_value: float
    opportunity_cost: Optional[float]

    def to_dict(self) -> Dict:
        return dict(self.__dict__)


@dataclass(frozen=True)
class StateOpportunityCosts:
    state_index: int
    capital: float
    dp_choice: ChoiceValue
    myopic_choice: ChoiceValue
    best_choices: Tuple[ChoiceValue, ...]

    def to_dict(self) -> Dict:
        return {
            "state_index": self.state_index,
            "capital": self.capital,
            "dp_choice": self.dp_choice.to_dict(),
            "myopic_choice": self.myopic_choice.to_dict(),
            "best_choices": [c.to_dict() for c in self.best_choices],
        }


def household_choice_opportunity_costs(
    model: HouseholdModel, grid: CapitalGrid, V, i: int, top: int = 5
) -> StateOpportunityCosts:
    """
    Price every feasible K' at state K_i by u(C) + beta V(K'); a choice's
    opportunity cost is the best total among the other choices. The myopic
    choice maximises u(C) alone and forgoes the DP choice's total.
    """
    V = _check_values(grid, V)
    if not 0 <= i < grid.n:
        raise InputError(f"state index {i} outside grid of {grid.n} points")

    K = grid.points
    rewards = reward_matrix(model, grid)[i]
    feasible = np.flatnonzero(np.isfinite(rewards))
    totals = rewards[feasible] + model.beta * V[feasible]
    order = np.argsort(-totals, kind="stable")
    best, runner_up = order[0], (order[1] if order.size > 1 else None)
    resources = float(model.resources(K[i]))

    def choice(position: int) -> ChoiceValue:
        j = int(feasible[position])
        if order.size > 1:
            forgone = totals[runner_up] if position == best else totals[best]
            opportunity_cost = float(forgone)
        else:
            opportunity_cost = None
        return ChoiceValue(
            index=j,
            next_capital=float(K[j]),
            consumption=resources - float(K[j]),
            immediate_utility=float(rewards[j]),
            continuation_value=float(model.beta * V[j]),
            total_value=float(totals[position]),
            opportunity_cost=opportunity_cost,
        )

    return StateOpportunityCosts(
        state_index=i,
        capital=float(K[i]),
        dp_choice=choice(int(best)),
        myopic_choice=choice(0),
        best_choices=tuple(choice(int(p)) for p in order[:top]),
    )


def export_value_csv(solution: ValueSolution, model: HouseholdModel, csv_path: str, logger=None) -> None:
    """One row per grid point: K, V, K_prime, C."""
    logger = get_logger(logger)
    rows = [
        {"K": k, "V": v, "K_prime": kp, "C": c}
        for k, v, kp, c in zip(
            solution.grid.points.tolist(),
            solution.values.tolist(),
            solution.next_capital().tolist(),
            solution.consumption(model).tolist(),
        )
    ]
    save_rows_to_csv(rows, csv_path, fieldnames=["K", "V", "K_prime", "C"])
    logger.info(f"Saved value function and policy to {csv_path}")
