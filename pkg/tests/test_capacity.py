import numpy as np
import pytest

from nlhodge.space import MetricMeasureSpace, gen_interval
from nlhodge.neighborhoods import rips_system
from nlhodge.kernels import fractional_kernel
from nlhodge.capacity import (
    CapacityError,
    RemovabilityReport,
    build_capacity_problem,
    capacity,
    capacity_of_hole,
    removability_sweep,
)


def interval_problem(target, eps=0.25, alpha=0.5, n=40, **kwargs):
    return build_capacity_problem(
        gen_interval(n), rips_system(eps), fractional_kernel(1.0, alpha), target, **kwargs
    )


# --- the quadratic form and its minimizer ---------------------------------------


def test_clamping_everything_gives_the_total_mass():
    # u == 1 kills the coboundary term exactly, leaving sum of point weights.
    space = gen_interval(20)
    problem = build_capacity_problem(
        space, rips_system(0.3), fractional_kernel(1.0, 0.5), [10], clamp_radius=2.0
    )
    assert problem.clamp.size == 20
    result = capacity(problem)
    assert np.array_equal(result.potential, np.ones(20))
    assert result.value == pytest.approx(space.total_mass, rel=1e-14)
    assert result.max_principle_ok


def test_potential_is_one_on_the_clamp_and_bounded():
    problem = interval_problem([20])
    result = capacity(problem)
    assert (result.potential[problem.clamp] == 1.0).all()
    assert result.max_principle_ok
    assert result.value > 0.0


def test_clamp_ring_is_one_mesh_width():
    space = gen_interval(40)
    problem = interval_problem([20], n=40)
    d = space.dist[:, [20]].min(axis=1)
    want = np.nonzero(d <= space.mesh_width() * (1.0 + 1e-9))[0]
    assert np.array_equal(problem.clamp, want)
    assert set([19, 20, 21]) <= set(problem.clamp.tolist())


def test_capacity_value_matches_dense_quadratic_minimum():
    # Brute-force oracle: solve the clamped minimization with dense algebra.
    problem = interval_problem([20], n=30)
    result = capacity(problem)
    A = problem.energy.toarray()
    clamp = problem.clamp
    free = np.setdiff1d(np.arange(30), clamp)
    u = np.zeros(30)
    u[clamp] = 1.0
    u[free] = np.linalg.solve(A[np.ix_(free, free)], -A[np.ix_(free, clamp)].sum(axis=1))
    want = float(u @ A @ u)
    assert result.value == pytest.approx(want, rel=1e-10)
    assert np.allclose(result.potential, u, atol=1e-10)


def test_minimizer_beats_other_feasible_candidates():
    rng = np.random.default_rng(3)
    problem = interval_problem([20], n=40)
    result = capacity(problem)
    A = problem.energy
    for _ in range(20):
        v = rng.uniform(0.0, 1.0, 40)
        v[problem.clamp] = 1.0
        assert result.value <= float(v @ (A @ v)) * (1.0 + 1e-12)


# --- monotonicity ----------------------------------------------------------------


def test_capacity_grows_with_the_target_set():
    small = capacity(interval_problem([20])).value
    large = capacity(interval_problem([14, 20, 26])).value
    assert small <= large * (1.0 + 1e-12)
    assert large > small  # strictly, for a genuinely bigger clamp


def test_capacity_grows_with_the_neighborhood_scale():
    # More admissible pairs mean more nonnegative energy terms.
    tight = capacity(interval_problem([20], eps=0.1)).value
    wide = capacity(interval_problem([20], eps=0.3)).value
    assert tight <= wide * (1.0 + 1e-12)
    assert wide > tight


def test_capacity_scales_linearly_under_exact_mass_doubling():
    # Doubling point weights and halving the kernel scale doubles every tuple
    # mass (all float operations are exact powers of two), so the capacity
    # doubles exactly.
    space = gen_interval(40)
    doubled = MetricMeasureSpace(space.dist, 2.0 * space.weights)
    base = capacity(
        build_capacity_problem(space, rips_system(0.25), fractional_kernel(1.0, 0.5), [20])
    )
    scaled = capacity(
        build_capacity_problem(
            doubled, rips_system(0.25), fractional_kernel(1.0, 0.5, scale=0.5), [20]
        )
    )
    assert scaled.value == pytest.approx(2.0 * base.value, rel=1e-12)
    assert np.allclose(scaled.potential, base.potential, atol=1e-10)


# --- the resolution ladder --------------------------------------------------------


def test_single_point_capacities_decrease_with_resolution():
    caps = [capacity_of_hole(n, 0.25, 0.5).value for n in (50, 100, 200, 400)]
    assert all(b < a for a, b in zip(caps, caps[1:]))


def test_ladder_verdicts():
    report = removability_sweep(resolutions=(50, 100, 200, 400), alphas=(0.5, 1.5), eps=0.25)
    assert report.verdict_for(0.5) == "removable"
    assert report.verdict_for(1.5) == "non-removable"
    slopes = {r.alpha: r.slope for r in report.rows}
    assert slopes[0.5] < -0.2
    assert abs(slopes[1.5]) < 0.05
    with pytest.raises(KeyError):
        report.verdict_for(0.7)


def test_high_order_capacities_stay_flat():
    caps = [capacity_of_hole(n, 0.25, 1.5).value for n in (50, 100, 200)]
    assert max(caps) / min(caps) < 1.01


def test_report_csv_round_trip(tmp_path):
    report = removability_sweep(resolutions=(50, 100), alphas=(0.5,), eps=0.25)
    path = tmp_path / "removability.csv"
    report.save(path)
    lines = path.read_text().splitlines()
    assert lines[0] == "resolution,alpha,epsilon,capacity,slope,verdict"
    assert len(lines) == 3
    first = lines[1].split(",")
    assert first[0] == "50"
    assert float(first[3]) == pytest.approx(report.rows[0].capacity)
    assert first[5] == report.rows[0].verdict


def test_hole_radius_clamps_an_interval_of_points():
    wide = capacity_of_hole(101, 0.25, 0.5, hole_center=0.5, hole_radius=0.03)
    point = capacity_of_hole(101, 0.25, 0.5, hole_center=0.5, hole_radius=0.0)
    assert wide.value > point.value
    assert int(np.sum(wide.potential == 1.0)) > int(np.sum(point.potential == 1.0))


# --- guards -----------------------------------------------------------------------


def test_degenerate_targets_are_rejected():
    with pytest.raises(CapacityError, match="empty"):
        interval_problem([])
    with pytest.raises(CapacityError, match="out of range"):
        interval_problem([40], n=40)
    with pytest.raises(CapacityError, match="out of range"):
        interval_problem([-1])
