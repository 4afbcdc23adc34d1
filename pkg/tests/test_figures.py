"""Figure exports: CSV rows and SVG charts from solved plans."""
import datetime as dt

import numpy as np
import pytest

from pricecast.figures import emit_figures
from pricecast.forecast import ForecastGrid, PriceLadder
from pricecast.optimize import PricingProblem, solve
from pricecast.pipeline import OptimizeArtifacts

START = dt.date(2024, 1, 1)


def weekly_grid(prices, demand):
    prices = tuple(float(p) for p in prices)
    demand = np.asarray(demand, dtype=float)
    revenue = np.asarray(prices)[:, None] * demand
    buckets = tuple(START + dt.timedelta(weeks=t) for t in range(demand.shape[1]))
    ladder = PriceLadder(prices, prices[0], prices[-1])
    return ForecastGrid(ladder, buckets, demand, revenue, "weekly", {})


def outcome_for(grid, alpha, s0=10.0):
    problem = PricingProblem(
        prices=np.asarray(grid.ladder.levels), demand=grid.demand, s0=s0, alpha=alpha
    )
    return solve(problem)


# price 10 earns more but sells less: raising the floor forces price 5
TWO_LEVEL = weekly_grid((5.0, 10.0), [[4.0], [3.0]])


def arts(*pairs, is_sweep):
    return OptimizeArtifacts(results=list(pairs), is_sweep=is_sweep)


def test_single_feasible_outputs(tmp_path):
    grid = weekly_grid((5.0, 10.0), [[4.0, 2.0, 1.0], [3.0, 1.0, 0.5]])
    paths = emit_figures(grid, arts((0.0, outcome_for(grid, 0.0)), is_sweep=False), tmp_path)
    assert [p.name for p in paths] == ["fig2.csv", "fig2.svg", "fig3.csv", "fig3.svg"]
    assert all(p.is_file() for p in paths)

    fig2 = (tmp_path / "fig2.csv").read_bytes().decode().splitlines()
    assert fig2[0] == "week,price,demand"
    assert len(fig2) == 4  # one row per bucket
    assert fig2[1].split(",")[0] == "1"
    fig3 = (tmp_path / "fig3.csv").read_bytes().decode().splitlines()
    assert fig3[0] == "week,price,revenue"
    # rows carry the planned price and its predicted demand and revenue
    week, price, demand = fig2[1].split(",")
    _, _, revenue = fig3[1].split(",")
    assert float(revenue) == float(price) * float(demand)

    svg = (tmp_path / "fig2.svg").read_text()
    assert svg.count("<polyline") == 2  # price and demand series
    assert "Optimal pricing and predicted demand" in svg
    assert (tmp_path / "fig3.svg").read_text().count("<polyline") == 2


def test_single_infeasible_writes_stub_files(tmp_path):
    paths = emit_figures(
        TWO_LEVEL, arts((0.9, outcome_for(TWO_LEVEL, 0.9)), is_sweep=False), tmp_path
    )
    assert len(paths) == 4
    note = b"# status: infeasible, no feasible plan\n"
    assert (tmp_path / "fig2.csv").read_bytes() == b"week,price,demand\r\n" + note
    assert (tmp_path / "fig3.csv").read_bytes() == b"week,price,revenue\r\n" + note
    assert "no feasible plan" in (tmp_path / "fig2.svg").read_text()


def test_sweep_emits_fig4_with_blank_infeasible_rows(tmp_path):
    results = [(a, outcome_for(TWO_LEVEL, a)) for a in (0.05, 0.35, 0.45)]
    assert [o.status for _, o in results] == ["optimal", "optimal", "infeasible"]
    paths = emit_figures(TWO_LEVEL, arts(*results, is_sweep=True), tmp_path)
    assert [p.name for p in paths][-2:] == ["fig4.csv", "fig4.svg"]

    rows = (tmp_path / "fig4.csv").read_bytes().decode().splitlines()
    assert rows[0] == "alpha,objective,mean_price"
    assert rows[1] == "0.05,30.0,10.0"  # unconstrained optimum: price 10 sells 3
    assert rows[2] == "0.35,20.0,5.0"  # floor 3.5 forces price 5
    assert rows[3] == "0.45,,"
    assert (tmp_path / "fig4.svg").read_text().count("<polyline") == 2


def test_fig2_uses_lowest_feasible_alpha(tmp_path):
    results = [(a, outcome_for(TWO_LEVEL, a)) for a in (0.05, 0.35, 0.45)]
    emit_figures(TWO_LEVEL, arts(*results, is_sweep=True), tmp_path)
    assert (tmp_path / "fig2.csv").read_bytes().decode().splitlines()[1] == "1,10.0,3.0"

    # drop the least constrained run: the next feasible plan takes over
    emit_figures(TWO_LEVEL, arts(*results[1:], is_sweep=True), tmp_path)
    assert (tmp_path / "fig2.csv").read_bytes().decode().splitlines()[1] == "1,5.0,4.0"


def test_sweep_with_no_feasible_alpha(tmp_path):
    results = [(a, outcome_for(TWO_LEVEL, a)) for a in (0.45, 0.9)]
    emit_figures(TWO_LEVEL, arts(*results, is_sweep=True), tmp_path)
    rows = (tmp_path / "fig4.csv").read_bytes().decode()
    assert rows.endswith("# status: infeasible, no feasible plan\n")
    assert "no feasible plan at any alpha" in (tmp_path / "fig4.svg").read_text()


def test_emit_is_deterministic(tmp_path):
    grid = weekly_grid((5.0, 10.0), [[4.0, 2.0], [3.0, 1.0]])
    a = arts((0.1, outcome_for(grid, 0.1)), is_sweep=False)
    first = {p.name: p.read_bytes() for p in emit_figures(grid, a, tmp_path / "one")}
    second = {p.name: p.read_bytes() for p in emit_figures(grid, a, tmp_path / "two")}
    assert first == second
