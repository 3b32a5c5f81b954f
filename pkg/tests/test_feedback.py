import numpy as np
import pytest

from monohjb import (
    GridFunction,
    OutOfDomainError,
    ProblemSpec,
    SolveOptions,
    build_uniform,
    control_grid,
    cost_consistency,
    simulate,
    solve_picard,
)
from monohjb.feedback import trajectory_csv


def test_frozen_system_stationary(frozen_2d):
    tri = build_uniform(frozen_2d.domain, 0.5)
    grid = control_grid(0.5)
    value = GridFunction.zeros(tri, grid)
    traj = simulate(frozen_2d, tri, grid, value, np.array([0.25, -0.25]), 0, 0.5, 10)
    assert traj.discounted_total == 0.0
    np.testing.assert_allclose(traj.states, np.tile([0.25, -0.25], (11, 1)))


def test_top_control_stays_top(paper):
    tri = build_uniform(paper.domain, 0.1)
    grid = control_grid(0.1)
    value = GridFunction.zeros(tri, grid)
    traj = simulate(paper, tri, grid, value, np.array([0.3, 0.3]), grid.m, 0.1, 20)
    assert np.all(traj.control_indices == grid.m)
    assert traj.terminal_control == grid.m
    # with a = 1 the discrete dynamics is an exact geometric contraction
    for j in range(traj.n_steps):
        np.testing.assert_allclose(
            traj.states[j + 1], (1 - 2 * 0.1) * traj.states[j], atol=1e-15
        )


@pytest.fixture(scope="module")
def solved(paper):
    hk = 0.1
    tri = build_uniform(paper.domain, hk)
    grid = control_grid(hk)
    u, _, _ = solve_picard(paper, tri, grid, SolveOptions(h=hk))
    return tri, grid, u


def test_controls_always_monotone(paper, solved):
    tri, grid, u = solved
    rng = np.random.default_rng(2)
    for _ in range(10):
        x0 = rng.uniform(tri.lower, tri.upper)
        a0 = int(rng.integers(0, grid.n_levels))
        traj = simulate(paper, tri, grid, u, x0, a0, 0.1, 50)
        assert np.all(np.diff(traj.control_indices) >= 0)
        assert traj.terminal_control >= traj.control_indices[-1]


def test_discounted_total_near_analytic(paper, solved):
    tri, grid, u = solved
    traj = simulate(paper, tri, grid, u, np.array([0.5, 0.5]), grid.m, 0.1, 200)
    assert traj.discounted_total == pytest.approx(0.15, abs=0.05)


def test_truncation_tail(paper, solved):
    tri, grid, u = solved
    short = simulate(paper, tri, grid, u, np.array([0.5, 0.5]), 0, 0.1, 30)
    long = simulate(paper, tri, grid, u, np.array([0.5, 0.5]), 0, 0.1, 60)
    tail = (paper.bound_f / paper.discount) * (1 - 0.1) ** 30
    assert abs(long.discounted_total - short.discounted_total) <= tail + 1e-12


def test_cost_consistency_zero_value_zero_cost(frozen_2d):
    tri = build_uniform(frozen_2d.domain, 0.5)
    grid = control_grid(0.5)
    value = GridFunction.zeros(tri, grid)
    traj = simulate(frozen_2d, tri, grid, value, np.array([0.1, 0.1]), 0, 0.5, 5)
    assert cost_consistency(frozen_2d, tri, grid, value, traj, 0.5) == 0.0


def test_cost_consistency_near_fixed_point(paper, solved):
    tri, grid, u = solved
    traj = simulate(paper, tri, grid, u, np.array([0.5, 0.5]), 0, 0.1, 100)
    gap = cost_consistency(paper, tri, grid, u, traj, 0.1)
    assert gap <= 0.1


def test_trajectory_exits_domain():
    expanding = ProblemSpec(
        dynamics=lambda x, a: 2.0 * np.asarray(x, dtype=float),
        cost=lambda x, a: 0.0,
        discount=1.0,
        domain=(np.array([-1.0, -1.0]), np.array([1.0, 1.0])),
        lip_g=2.0, bound_g=2.9, lip_f=0.0, bound_f=0.0,
    )
    tri = build_uniform(expanding.domain, 0.5)
    grid = control_grid(0.5)
    value = GridFunction.zeros(tri, grid)
    with pytest.raises(OutOfDomainError) as exc:
        simulate(expanding, tri, grid, value, np.array([0.5, 0.5]), 0, 0.5, 5)
    assert exc.value.context == 0  # leaves at the first step


def test_trajectory_csv_layout(paper, solved):
    tri, grid, u = solved
    traj = simulate(paper, tri, grid, u, np.array([0.5, 0.5]), 0, 0.1, 5)
    lines = trajectory_csv(traj, grid, paper.discount, 0.1).strip().split("\n")
    assert lines[0] == "step,x1,x2,a,stage_cost,discounted_cumulative"
    assert len(lines) == 6
    last = lines[-1].split(",")
    assert float(last[-1]) == pytest.approx(traj.discounted_total, rel=1e-12)
