import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import make_hardware, make_task

from metainf.domain import ALL_METHODS, Budget, MethodConfig, method_index
from metainf.errors import InfeasibleError
from metainf.selection import SelectionRequest, estimate_cost, select, select_method


class StubSelector:
    """Fixed scores per method index; stands in for any fitted selector."""

    def __init__(self, scores: dict[int, float]):
        self.scores = scores

    def rank_methods(self, task, hardware):
        pairs = [(m, self.scores[method_index(m)]) for m in ALL_METHODS if method_index(m) in self.scores]
        return sorted(pairs, key=lambda p: (p[1], method_index(p[0])))


def test_estimate_cost_arithmetic():
    hw = make_hardware(price_per_hour=2.0)
    assert estimate_cost(hw, 1800.0).amount == pytest.approx(1.0)
    assert estimate_cost(hw, 1800.0).runtime_source == "predicted"


def test_estimate_cost_zero_price():
    hw = make_hardware(price_per_hour=0.0)
    for runtime in (0.1, 100.0, 1e6):
        assert estimate_cost(hw, runtime).amount == 0.0


def test_estimate_cost_published_runtime_case():
    hw = make_hardware(price_per_hour=1.2)
    assert estimate_cost(hw, 96.21).amount == pytest.approx(0.032070, abs=5e-7)


def test_estimate_cost_rejects_nonpositive():
    with pytest.raises(ValueError):
        estimate_cost(make_hardware(), 0.0)


TABLE_B16 = {0: 1435.27, 2: 128.70, 1: 146.44, 4: 101.10, 7: 96.21}
TABLE_B256 = {0: 1424.99, 2: 114.44, 1: 107.40, 4: 68.46, 7: 80.65}


def test_unlimited_budget_picks_fastest_b16():
    result = select_method(make_task(), make_hardware(), StubSelector(TABLE_B16))
    assert result.method == MethodConfig(True, True, True)
    assert result.predicted_runtime_s == 96.21
    assert result.feasible_set_size == 5


def test_unlimited_budget_picks_fastest_b256():
    result = select_method(make_task(), make_hardware(), StubSelector(TABLE_B256))
    assert result.method == MethodConfig(True, False, False)
    assert result.predicted_runtime_s == 68.46


def test_budget_shrinks_feasible_set_to_prefix():
    # cost is proportional to predicted runtime on a fixed hardware, so the
    # feasible set is always a prefix of the runtime ranking; brute-force over
    # the five (cost, runtime) pairs confirms both the set and the winner
    hw = make_hardware(price_per_hour=3600.0)  # cost == runtime in currency
    budget = Budget(101.10)
    costs = dict(TABLE_B16)
    feasible = {m: r for m, r in TABLE_B16.items() if costs[m] <= budget.limit}
    expected = min(feasible, key=lambda m: (feasible[m], m))
    result = select_method(make_task(), hw, StubSelector(TABLE_B16), budget)
    assert method_index(result.method) == expected == 7
    assert result.cost.amount <= budget.limit
    assert result.feasible_set_size == len(feasible) == 2  # All and Prefix Caching


def test_infeasible_carries_cheapest():
    hw = make_hardware(price_per_hour=3600.0)
    with pytest.raises(InfeasibleError) as err:
        select_method(make_task(), hw, StubSelector(TABLE_B16), Budget(10.0))
    assert err.value.cheapest_cost == pytest.approx(96.21)
    assert method_index(err.value.cheapest_method) == 7


def test_budget_zero_with_zero_price_is_feasible():
    hw = make_hardware(price_per_hour=0.0)
    result = select_method(make_task(), hw, StubSelector(TABLE_B16), Budget(0.0))
    assert result.cost.amount == 0.0
    assert result.feasible_set_size == 5


def test_budget_zero_with_positive_price_is_infeasible():
    hw = make_hardware(price_per_hour=1.0)
    with pytest.raises(InfeasibleError):
        select_method(make_task(), hw, StubSelector(TABLE_B16), Budget(0.0))


def test_request_object_entrypoint():
    req = SelectionRequest(
        task=make_task(), hardware=make_hardware(), selector=StubSelector(TABLE_B16), budget=None
    )
    assert select(req).method == MethodConfig(True, True, True)


def test_result_invariants():
    result = select_method(make_task(), make_hardware(), StubSelector(TABLE_B16))
    ranked = [method_index(m) for m, _ in result.ranking]
    assert len(ranked) == len(set(ranked)) == 5
    scores = [s for _, s in result.ranking]
    assert scores == sorted(scores)


def test_budget_safety_randomized_brute_force(rng):
    """select() never exceeds the budget; infeasible exactly when brute force
    finds nothing affordable."""
    for _ in range(2000):
        m_count = int(rng.integers(2, 9))
        midxs = sorted(rng.choice(8, size=m_count, replace=False).tolist())
        scores = {int(m): float(rng.uniform(0.5, 2000.0)) for m in midxs}
        price = float(rng.uniform(0.0, 50.0))
        hw = make_hardware(price_per_hour=price)
        budget = Budget(float(rng.uniform(0.0, 10.0)))
        costs = {m: price * scores[m] / 3600.0 for m in midxs}
        affordable = {m for m in midxs if costs[m] <= budget.limit}
        try:
            result = select_method(make_task(), hw, StubSelector(scores), budget)
        except InfeasibleError as err:
            assert not affordable
            assert err.cheapest_cost == pytest.approx(min(costs.values()))
            continue
        assert affordable
        assert result.cost.amount <= budget.limit
        expected = min(affordable, key=lambda m: (scores[m], costs[m], m))
        assert method_index(result.method) == expected


def test_budget_monotonicity(rng):
    scores = {m: float(rng.uniform(1.0, 100.0)) for m in range(8)}
    hw = make_hardware(price_per_hour=36.0)
    sel = StubSelector(scores)
    prev_runtime = None
    for limit in np.linspace(min(scores.values()) * 0.011, max(scores.values()) * 0.011, 25):
        try:
            result = select_method(make_task(), hw, sel, Budget(float(limit)))
        except InfeasibleError:
            assert prev_runtime is None
            continue
        if prev_runtime is not None:
            assert result.predicted_runtime_s <= prev_runtime + 1e-12
        prev_runtime = result.predicted_runtime_s


@settings(max_examples=200, deadline=None)
@given(
    runtimes=st.lists(
        st.floats(min_value=0.01, max_value=5000.0, allow_nan=False), min_size=1, max_size=8
    ),
    price=st.floats(min_value=0.0, max_value=100.0, allow_nan=False),
    limit=st.floats(min_value=0.0, max_value=50.0, allow_nan=False),
)
def test_budget_safety_property(runtimes, price, limit):
    scores = {i: r for i, r in enumerate(runtimes)}
    hw = make_hardware(price_per_hour=price)
    budget = Budget(limit)
    affordable = {m for m, r in scores.items() if price * r / 3600.0 <= limit}
    try:
        result = select_method(make_task(), hw, StubSelector(scores), budget)
    except InfeasibleError:
        assert not affordable
        return
    assert affordable
    assert result.cost.amount <= limit


@settings(max_examples=100, deadline=None)
@given(
    price=st.floats(min_value=0.0, max_value=1000.0, allow_nan=False),
    runtime=st.floats(min_value=1e-6, max_value=1e6, allow_nan=False),
)
def test_estimate_cost_matches_rate_arithmetic(price, runtime):
    amount = estimate_cost(make_hardware(price_per_hour=price), runtime).amount
    assert amount == pytest.approx(price * runtime / 3600.0, rel=1e-12, abs=1e-300)


def test_price_scale_covariance(rng):
    scores = {m: float(rng.uniform(1.0, 100.0)) for m in range(8)}
    sel = StubSelector(scores)
    for _ in range(50):
        price = float(rng.uniform(0.1, 10.0))
        limit = float(rng.uniform(0.001, 0.3))
        lam = float(2.0 ** rng.integers(-3, 6))  # powers of two scale exactly
        base = select_method(make_task(), make_hardware(price_per_hour=price), sel, Budget(limit))
        scaled = select_method(
            make_task(), make_hardware(price_per_hour=price * lam), sel, Budget(limit * lam)
        )
        assert base.method == scaled.method