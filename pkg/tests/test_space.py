import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nlhodge.space import (
    MetricMeasureSpace,
    SpaceValidationError,
    gen_circle,
    gen_interval,
    gen_punctured_interval,
    gen_sphere,
    gen_two_components,
    load_distance_matrix,
)


def test_circle_distances_follow_arc_law_exactly():
    n, radius = 32, 1.0
    space = gen_circle(n, radius)
    step = radius * (2.0 * np.pi / n)
    for i in range(n):
        for j in range(n):
            k = min(abs(i - j), n - abs(i - j))
            assert space.dist[i, j] == step * k


def test_circle_total_mass_is_circumference():
    space = gen_circle(10, radius=2.0)
    assert space.total_mass == pytest.approx(2.0 * np.pi * 2.0, rel=1e-15)


def test_circle_mesh_width_is_one_step():
    space = gen_circle(16)
    assert space.mesh_width() == pytest.approx(2.0 * np.pi / 16, rel=1e-15)


def test_interval_endpoints_and_mass():
    space = gen_interval(64)
    assert space.dist[0, 63] == 1.0
    assert space.total_mass == pytest.approx(1.0, rel=1e-12)


def test_two_components_gap_is_min_cross_distance():
    space = gen_two_components(8, gap=0.5)
    cross = space.dist[:8, 8:]
    assert cross.min() == pytest.approx(0.5, rel=1e-15)


# Oracle: on the n=100 grid (step 1/99) no point falls strictly inside the
# band (0.495, 0.505); the nearest grid values 49/99 and 50/99 sit 0.00505
# away from 0.5, outside a radius of 0.005. On the n=101 grid the midpoint
# 0.5 is a grid point and is the single removal.
def test_punctured_interval_counting_oracle_even_grid():
    space = gen_punctured_interval(100, 0.5, 0.005)
    assert space.n == 100


def test_punctured_interval_counting_oracle_odd_grid():
    space = gen_punctured_interval(101, 0.5, 0.005)
    assert space.n == 100
    assert not np.isclose(space.metadata["points"], 0.5).any()


def test_punctured_interval_zero_radius_removes_nothing():
    space = gen_punctured_interval(50, 0.5, 0.0)
    assert space.n == 50


def test_punctured_interval_wide_hole_rejected():
    with pytest.raises(SpaceValidationError):
        gen_punctured_interval(10, 0.5, 0.6)


def test_sphere_is_a_valid_geodesic_metric():
    space = gen_sphere(64)
    assert space.dist.max() <= np.pi + 1e-12
    assert space.total_mass == pytest.approx(4.0 * np.pi, rel=1e-12)
    # antipodal-ish pair distance computed from the embedding directly
    pts = space.metadata["points"]
    i, j = 0, 63
    expected = np.arccos(np.clip(pts[i] @ pts[j], -1, 1))
    assert space.dist[i, j] == pytest.approx(expected, abs=1e-9)


def test_triangle_violation_names_all_three_indices():
    d = np.array([[0.0, 1.0, 3.0], [1.0, 0.0, 1.0], [3.0, 1.0, 0.0]])
    with pytest.raises(SpaceValidationError, match=r"triangle.*\(0, 1, 2\)"):
        MetricMeasureSpace(d, np.ones(3))


def test_asymmetry_names_the_pair():
    d = np.array([[0.0, 1.0], [1.5, 0.0]])
    with pytest.raises(SpaceValidationError, match=r"asymmetric.*\(0, 1\)|asymmetric.*\(1, 0\)"):
        MetricMeasureSpace(d, np.ones(2))


def test_nonzero_diagonal_rejected():
    d = np.array([[0.1, 1.0], [1.0, 0.0]])
    with pytest.raises(SpaceValidationError, match="diagonal"):
        MetricMeasureSpace(d, np.ones(2))


def test_zero_off_diagonal_rejected():
    d = np.zeros((2, 2))
    with pytest.raises(SpaceValidationError, match="distinct"):
        MetricMeasureSpace(d, np.ones(2))


def test_negative_weight_rejected():
    space_d = gen_interval(4).dist
    with pytest.raises(SpaceValidationError, match="non-positive weight at 2"):
        MetricMeasureSpace(space_d, np.array([1.0, 1.0, -1.0, 1.0]))


def test_near_coincident_points_warn():
    x = np.array([0.0, 1e-12, 1.0])
    d = np.abs(x[:, None] - x[None, :])
    with pytest.warns(RuntimeWarning, match="separation"):
        MetricMeasureSpace(d, np.ones(3))


def test_arrays_are_read_only():
    space = gen_interval(5)
    with pytest.raises(ValueError):
        space.dist[0, 1] = 7.0
    with pytest.raises(ValueError):
        space.weights[0] = 7.0


def test_permuted_preserves_intrinsic_quantities():
    space = gen_circle(12)
    rng = np.random.default_rng(3)
    perm = rng.permutation(12)
    other = space.permuted(perm)
    assert other.total_mass == space.total_mass
    assert other.mesh_width() == pytest.approx(space.mesh_width(), rel=1e-15)
    i, j = 3, 7
    assert other.dist[i, j] == space.dist[perm[i], perm[j]]


def test_permuted_rejects_non_permutation():
    with pytest.raises(SpaceValidationError):
        gen_interval(4).permuted([0, 0, 1, 2])


@settings(max_examples=25, deadline=None)
@given(st.integers(min_value=3, max_value=24), st.floats(min_value=0.1, max_value=5.0))
def test_circle_metric_valid_for_any_size(n, radius):
    space = gen_circle(n, radius)
    assert space.n == n


def test_loader_round_trip(tmp_path):
    ref = gen_interval(6)
    mat = tmp_path / "d.csv"
    np.savetxt(mat, ref.dist, delimiter=",")
    wfile = tmp_path / "w.txt"
    np.savetxt(wfile, ref.weights)
    space = load_distance_matrix(mat, wfile)
    assert np.allclose(space.dist, ref.dist, atol=1e-15)
    assert np.allclose(space.weights, ref.weights, atol=1e-18)


def test_loader_defaults_to_uniform_weights(tmp_path):
    mat = tmp_path / "d.csv"
    np.savetxt(mat, gen_interval(5).dist, delimiter=",")
    space = load_distance_matrix(mat)
    assert np.allclose(space.weights, 0.2)


def test_loader_rejects_garbage(tmp_path):
    mat = tmp_path / "d.csv"
    mat.write_text("a,b\nc,d\n")
    with pytest.raises(SpaceValidationError, match="cannot parse"):
        load_distance_matrix(mat)


def test_loader_rejects_bad_weights(tmp_path):
    mat = tmp_path / "d.csv"
    np.savetxt(mat, gen_interval(4).dist, delimiter=",")
    wfile = tmp_path / "w.txt"
    wfile.write_text("0.25\n0.25\n-0.25\n0.25\n")
    with pytest.raises(SpaceValidationError, match="non-positive weight at 2"):
        load_distance_matrix(mat, wfile)
