"""
Static producer problem: each period choose output Y_t to maximise
P_t*Y_t - F - c*Y_t^2. Periods do not constrain one another, so the
period-by-period (greedy) optimum is the whole-horizon optimum, subject only
to the global check that the plant should operate at all.
"""
from dataclasses import dataclass
from typing import Dict, Optional, Sequence, Tuple

import numpy as np

from src.oppcost.utils import InputError, format_number, get_logger

DEFAULT_FIXED_COST = 1000.0
DEFAULT_QUADRATIC_COEFFICIENT = 1.0


@dataclass(frozen=True)
class ProducerModel:
    prices: Tuple[float, ...]
    fixed_cost: float = DEFAULT_FIXED_COST
    quadratic_coefficient: float = DEFAULT_QUADRATIC_COEFFICIENT

    def __post_init__(self):
        object.__setattr__(self, "prices", tuple(float(p) for p in self.prices))
        if len(self.prices) < 1:
            raise InputError("producer model needs at least one period price (N >= 1)")
        if any(not np.isfinite(p) or p < 0 for p in self.prices):
            raise InputError(f"prices must be finite and non-negative, got {list(self.prices)}")
        if not np.isfinite(self.fixed_cost) or self.fixed_cost < 0:
            raise InputError(f"fixed cost must be >= 0, got {self.fixed_cost}")
        if not np.isfinite(self.quadratic_coefficient) or self.quadratic_coefficient <= 0:
            raise InputError(f"quadratic coefficient c must be > 0, got {self.quadratic_coefficient}")

    @property
    def horizon(self) -> int:
        return len(self.prices)

    def cost(self, output: float) -> float:
        return self.fixed_cost + self.quadratic_coefficient * output ** 2

    def period_profit(self, price: float, output: float) -> float:
        return price * output - self.cost(output)


@dataclass(frozen=True)
class ProducerPlan:
    outputs: Tuple[float, ...]
    profits: Tuple[float, ...]
    operate: bool
    total_profit: float
    operating_total_profit: float

    def to_dict(self) -> Dict:
        return {
            "outputs": list(self.outputs),
            "profits": list(self.profits),
            "operate": self.operate,
            "total_profit": self.total_profit,
            "operating_total_profit": self.operating_total_profit,
        }


def producer_period_optimum(price: float, model: ProducerModel) -> Tuple[float, float]:
    """
    First-order condition P - 2cY = 0.

    Returns:
        (Y*, profit) with Y* = P/(2c) and profit = P^2/(4c) - F.
    """
    if price < 0:
        raise InputError(f"price must be non-negative, got {price}")
    c = model.quadratic_coefficient
    output = price / (2 * c)
    return output, price ** 2 / (4 * c) - model.fixed_cost


def producer_plan(model: ProducerModel, logger=None) -> ProducerPlan:
    """Per-period optima, then the whole-horizon decision to operate."""
    logger = get_logger(logger)
    optima = [producer_period_optimum(p, model) for p in model.prices]
    operating_total = float(sum(profit for _, profit in optima))
    operate = operating_total >= 0

    if operate:
        outputs = tuple(y for y, _ in optima)
        profits = tuple(profit for _, profit in optima)
        total = operating_total
    else:
        outputs = (0.0,) * model.horizon
        profits = (0.0,) * model.horizon
        total = 0.0

    logger.info(f"Producer plan over {model.horizon} periods: "
                f"{'operate' if operate else 'shut down'} "
                f"(operating profit {format_number(operating_total)})")
    return ProducerPlan(outputs, profits, operate, total, operating_total)


def producer_plan_profit(model: ProducerModel, outputs: Optional[Sequence[float]]) -> float:
    """Whole-horizon profit of an arbitrary plan; None means the plant is shut."""
    if outputs is None:
        return 0.0
    if len(outputs) != model.horizon:
        raise InputError(f"plan has {len(outputs)} periods, model has {model.horizon}")
    prices = np.asarray(model.prices)
    y = np.asarray(outputs, dtype=float)
    return float(np.sum(prices * y - model.fixed_cost - model.quadratic_coefficient * y ** 2))


def producer_grid_search(price: float, model: ProducerModel, n: int = 20001) -> Tuple[float, float, float]:
    """
    Dense-grid argmax of one period's profit over Y in [0, 2P/c].

    Returns:
        (Y, profit, grid spacing)
    """
    upper = 2 * price / model.quadratic_coefficient
    if upper == 0:
        return 0.0, model.period_profit(price, 0.0), 0.0
    grid = np.linspace(0.0, upper, n)
    profits = price * grid - model.fixed_cost - model.quadratic_coefficient * grid ** 2
    best = int(np.argmax(profits))
    return float(grid[best]), float(profits[best]), float(grid[1] - grid[0])
