"""Online budget-constrained method selection.

Ranks every candidate method by predicted runtime, prices each one as
price_per_hour x predicted_hours, filters by the budget, and returns the
fastest feasible method. Cost is computed from the *predicted* runtime: a
measured one does not exist before execution.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from .domain import (
    Budget,
    CostEstimate,
    HardwareProfile,
    SelectionResult,
    TaskProfile,
    method_index,
)
from .errors import InfeasibleError
from .selectors import FittedSelector

SECONDS_PER_HOUR = 3600.0


def estimate_cost(hardware: HardwareProfile, predicted_runtime_s: float) -> CostEstimate:
    if predicted_runtime_s <= 0:
        raise ValueError(f"predicted runtime must be positive, got {predicted_runtime_s}")
    amount = hardware.price_per_hour * (predicted_runtime_s / SECONDS_PER_HOUR)
    return CostEstimate(amount=amount, runtime_source="predicted")


@dataclass(frozen=True)
class SelectionRequest:
    task: TaskProfile
    hardware: HardwareProfile
    selector: FittedSelector
    budget: Optional[Budget] = None  # None = unlimited


def select(req: SelectionRequest) -> SelectionResult:
    """Fastest predicted method whose estimated cost fits the budget.

    Raises InfeasibleError (carrying the cheapest option) when nothing fits.
    """
    ranking = req.selector.rank_methods(req.task, req.hardware)
    priced = [
        (method, runtime, estimate_cost(req.hardware, runtime)) for method, runtime in ranking
    ]
    if req.budget is None:
        feasible = priced
    else:
        feasible = [entry for entry in priced if entry[2].amount <= req.budget.limit]
    if not feasible:
        cheapest = min(priced, key=lambda e: (e[2].amount, e[1], method_index(e[0])))
        raise InfeasibleError(
            f"no method fits budget {req.budget.limit if req.budget else 0}; "
            f"cheapest option costs {cheapest[2].amount}",
            cheapest_cost=cheapest[2].amount,
            cheapest_method=cheapest[0],
        )
    method, runtime, cost = min(
        feasible, key=lambda e: (e[1], e[2].amount, method_index(e[0]))
    )
    return SelectionResult(
        method=method,
        predicted_runtime_s=runtime,
        cost=cost,
        feasible_set_size=len(feasible),
        ranking=tuple(ranking),
    )


def select_method(
    task: TaskProfile,
    hardware: HardwareProfile,
    selector: FittedSelector,
    budget: Optional[Budget] = None,
) -> SelectionResult:
    return select(SelectionRequest(task=task, hardware=hardware, selector=selector, budget=budget))
