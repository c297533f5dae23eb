import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from geoqgate.errors import ConfigError, NonpositiveDuration, ObjectiveEvaluationFailed, OutOfDomain
from geoqgate.paths import (
    CALIBRATED_RYDBERG,
    CriticalRegion,
    bezier3,
    bezier3_derivative,
    bezier_path,
    circle_path,
    control_point_path,
    linear_path,
    mass_term,
    path_from_json,
    polyline_path,
    rydberg_ladder_ring_path,
    rydberg_ring_path,
    sinusoidal_kitaev_path,
    update_reference_path,
)

finite = st.floats(-50, 50, allow_nan=False)


def all_families():
    return [
        linear_path([0.1, -0.3], [1.7, 2.2], 3.0),
        polyline_path([[0, 0], [1, 0.5], [0.2, 2.0]], 2.0),
        sinusoidal_kitaev_path(0.3, 0.5, 0.7, 0.5, 5.0),
        rydberg_ring_path(8, 6, -3, 4, 1.3),
        rydberg_ladder_ring_path(8, 6, -3, 4, 1.3, intermediate_detuning=20.0),
        bezier_path([0.1, 0.2], [0.5, -0.4], 4.0),
        control_point_path([[0, 0], [0.5, 1.0], [1.5, 0.7], [2, 2]], 2.5),
        circle_path([1.0, -1.0], 0.7, 6.0, start_angle=0.3, sweep=4.0),
    ]


def smooth_families():
    return [p for p in all_families() if p.family != "polyline"]


def test_linear_examples():
    p = linear_path([0, 0], [1, 1], 1.0)
    np.testing.assert_array_equal(p.position(0.5), [0.5, 0.5])
    np.testing.assert_array_equal(p.velocity(p.grid), np.ones((p.grid.size, 2)))
    still = linear_path([2, 3], [2, 3], 1.0)
    np.testing.assert_array_equal(still.velocity(still.grid), 0.0)
    np.testing.assert_array_equal(still.position(still.grid), np.tile([2.0, 3.0], (still.grid.size, 1)))


def test_nonpositive_duration_rejected():
    for T in (0.0, -1.0, float("nan")):
        with pytest.raises(NonpositiveDuration):
            linear_path([0], [1], T)


def test_kitaev_sinusoid_examples():
    p = sinusoidal_kitaev_path(0.0, 0.5, 0.0, 0.5, 2.0)
    np.testing.assert_allclose(p.position(1.0), [0.5, 0.5], atol=1e-15)
    q = sinusoidal_kitaev_path(0.3, 0.2, 0.7, 0.4, 2.0)
    np.testing.assert_array_equal(q.position(0.0), [0.3, 0.7])
    np.testing.assert_array_equal(q.position(2.0), [0.3, 0.7 + 2 * 0.4])


def test_ring_examples():
    p = rydberg_ring_path(8, 6, -3, 4, 2.0)
    np.testing.assert_array_equal(p.position(0.0), [0.0, 1.0])
    np.testing.assert_array_equal(p.position(2.0), [0.0, 7.0])
    np.testing.assert_allclose(p.position(1.0), [8.0, -4.0], atol=1e-14)


def test_ring_avoids_calibrated_disk():
    c = CALIBRATED_RYDBERG
    p = rydberg_ring_path(c["Omega12"], c["Omega23"], c["Delta12"], c["Delta23"], 1.0)
    region = CriticalRegion((10.0, 5.0), 5.0)
    pts = p.position(p.grid)
    assert np.min(mass_term(pts[:, 0], pts[:, 1], region)) > 0


def test_ladder_lift_matches_ring_two_photon_detuning():
    ring = rydberg_ring_path(8, 6, -3, 4, 1.0)
    lift = rydberg_ladder_ring_path(8, 6, -3, 4, 1.0, intermediate_detuning=15.0)
    t = ring.grid
    # Components are (Omega12, Omega23, Delta12, Delta23) on the ladder.
    lp = lift.position(t)
    np.testing.assert_allclose(lp[:, 2] + lp[:, 3], ring.position(t)[:, 1], atol=1e-12)


def test_bezier_profile_examples():
    assert bezier3(0.0) == 0.0
    assert bezier3(1.0) == 1.0
    assert bezier3(0.5) == 0.875
    with pytest.raises(OutOfDomain):
        bezier3(1.5)
    with pytest.raises(OutOfDomain):
        bezier3(-0.1)


def test_bezier3_identity_and_monotone():
    t = np.linspace(0, 1, 1000)
    b = bezier3(t)
    assert np.max(np.abs(b + (1 - t) ** 3 - 1)) <= 1e-15
    assert np.all(np.diff(b) >= 0)
    np.testing.assert_allclose(bezier3_derivative(t), 3 * (1 - t) ** 2, atol=1e-15)


def test_bezier_path_velocity():
    p = bezier_path([0.0, 1.0], [1.0, -2.0], 4.0)
    np.testing.assert_array_equal(p.velocity(4.0), [0.0, 0.0])
    np.testing.assert_allclose(p.velocity(0.0), [3 * 1.0 / 4, 3 * -2.0 / 4])
    assert bezier_path([0.0], [1.0], 2.0).position(2.0)[0] == 1.0


def test_mass_term_examples():
    r = CriticalRegion((10.0, 5.0), 5.0)
    assert mass_term(10.0, 5.0, r) == -5.0
    assert mass_term(13.0, 9.0, r) == pytest.approx(0.0, abs=1e-15)
    assert mass_term(20.0, 5.0, r) == 5.0
    with pytest.raises(ConfigError):
        CriticalRegion((0.0, 0.0), 0.0)


@pytest.mark.parametrize("path", smooth_families(), ids=lambda p: p.family)
def test_velocity_matches_central_difference(path):
    t = path.grid[1:-1]
    h = 1e-6 * path.T
    fd = (path.position(t + h) - path.position(t - h)) / (2 * h)
    assert np.max(np.abs(path.velocity(t) - fd)) < 1e-6 * max(path.scale(), 1.0)


@pytest.mark.parametrize("path", all_families(), ids=lambda p: p.family)
def test_endpoints_exact_and_roundtrip(path):
    start, end = path.endpoints
    np.testing.assert_array_equal(path.position(0.0), start)
    np.testing.assert_array_equal(path.position(path.T), end)
    again = path_from_json(path.to_json())
    assert again == path
    np.testing.assert_array_equal(again.position(again.grid), path.position(path.grid))
    # The JSON document has exactly the four public fields.
    assert set(json.loads(path.to_json())) == {"family", "parameters", "T", "grid_steps"}


def test_polyline_constant_speed_segments():
    # Between knots the polyline moves at constant speed along each segment.
    p = polyline_path([[0, 0], [1, 0], [1, 1]], 2.0, grid_steps=8)
    np.testing.assert_allclose(p.position(0.5), [0.5, 0.0])
    np.testing.assert_allclose(p.velocity(0.5), [1.0, 0.0])
    np.testing.assert_allclose(p.velocity(1.5), [0.0, 1.0])


@settings(max_examples=50, deadline=None)
@given(st.lists(st.tuples(finite, finite), min_size=2, max_size=5), st.floats(0.01, 100))
def test_roundtrip_bit_exact_random(verts, T):
    p = polyline_path(verts, T)
    q = path_from_json(p.to_json())
    assert q == p
    np.testing.assert_array_equal(q.endpoints[0], p.endpoints[0])
    np.testing.assert_array_equal(q.endpoints[1], p.endpoints[1])


def test_unknown_path_fields_rejected():
    doc = json.loads(linear_path([0], [1], 1.0).to_json())
    doc["colour"] = "red"
    with pytest.raises(ConfigError):
        path_from_json(json.dumps(doc))


def ref_path():
    return control_point_path([[0.0, 0.0], [0.3, 0.9], [1.1, 0.4], [2.0, 1.0]], 1.0)


def test_update_zero_step_and_constant_objective():
    ref = ref_path()
    assert update_reference_path(ref, 0.0, lambda p: 1.0) == ref
    moved = update_reference_path(ref, 0.5, lambda p: 3.0)
    np.testing.assert_allclose(moved.params["points"], ref.params["points"], atol=1e-12)


def test_update_quadratic_objective():
    ref = ref_path()
    target = np.array([[0.0, 0.0], [1.0, 1.0], [-0.5, 2.0], [2.0, 1.0]])

    def objective(path):
        pts = np.asarray(path.params["points"])[1:-1]
        return -float(np.sum((pts - target[1:-1]) ** 2))

    eta = 0.1
    new = update_reference_path(ref, eta, objective)
    old_pts = np.asarray(ref.params["points"])
    new_pts = np.asarray(new.params["points"])
    expected = old_pts[1:-1] + 2 * eta * (target[1:-1] - old_pts[1:-1])
    np.testing.assert_allclose(new_pts[1:-1], expected, atol=1e-9)
    np.testing.assert_array_equal(new.position(0.0), ref.position(0.0))
    np.testing.assert_array_equal(new.position(new.T), ref.position(ref.T))


def test_update_wraps_objective_errors():
    def broken(path):
        raise RuntimeError("solver diverged")

    with pytest.raises(ObjectiveEvaluationFailed):
        update_reference_path(ref_path(), 0.1, broken)
    with pytest.raises(ObjectiveEvaluationFailed):
        update_reference_path(ref_path(), 0.1, lambda p: float("nan"))
