import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from geoflow import (
    DegenerateStateError,
    InvalidArgumentError,
    Model,
    PointCloud,
    make_state_neighbor,
    make_state_tangent,
    sample_sphere,
    wave_propagate,
)
from geoflow.states import (
    coherent_amplitudes,
    default_momentum,
    discrete_norm,
    pick_neighbor,
    save_state,
    time_normalized_state,
)


def test_base_amplitude_is_one():
    cloud = sample_sphere(30, seed=2)
    state = make_state_neighbor(cloud, 4, 9, 0.3)
    assert state.amplitudes[4] == 1 + 0j


def test_envelope_and_phase_by_substitution():
    h = 0.1
    # X_1 - X_0 is orthogonal to the momentum and has squared length 2h
    X = np.array([[0.0, 0.0, 0.0], [0.0, math.sqrt(2 * h), 0.0], [0.05, 0.0, 0.0]])
    cloud = PointCloud(X, 2)
    state = make_state_neighbor(cloud, 0, 2, h)
    np.testing.assert_allclose(state.momentum, [1.0, 0.0, 0.0])
    assert abs(abs(state.amplitudes[1]) - math.exp(-1)) < 1e-15
    assert abs(np.angle(state.amplitudes[1])) < 1e-15


def test_neighbor_state_reference():
    cloud = sample_sphere(50, seed=8)
    j0, js, h = 3, 17, 0.25
    X = cloud.points
    xi = (X[js] - X[j0]) / np.linalg.norm(X[js] - X[j0])
    ref = [complex(math.cos(np.dot(xi, X[j0] - x) / h), math.sin(np.dot(xi, X[j0] - x) / h))
           * math.exp(-np.sum((x - X[j0]) ** 2) / (2 * h)) for x in X]
    state = make_state_neighbor(cloud, j0, js, h)
    assert np.abs(state.amplitudes - np.array(ref)).max() < 1e-14


def test_neighbor_rejections():
    cloud = PointCloud(np.array([[1.0, 0, 0], [1.0, 0, 0], [0, 1.0, 0]]), 2)
    with pytest.raises(InvalidArgumentError):
        make_state_neighbor(cloud, 0, 1, 0.2)
    with pytest.raises(InvalidArgumentError):
        make_state_neighbor(cloud, 2, 2, 0.2)
    with pytest.raises(InvalidArgumentError):
        make_state_neighbor(cloud, 0, 2, 0.0)


def test_neighbor_accuracy_flag():
    cloud = sample_sphere(50, seed=8)
    assert make_state_neighbor(cloud, 0, 1, 0.3).accuracy_warning


def test_tangent_state():
    X = np.array([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]])
    cloud = PointCloud(X, 2, Model.SPHERE2)
    state = make_state_tangent(cloud, 0, np.array([0.0, 1.0, 0.0]), 0.2)
    assert np.dot(cloud.points[0], state.momentum) == 0
    with pytest.raises(InvalidArgumentError, match="normal component 1"):
        make_state_tangent(cloud, 0, np.array([1.0, 0.0, 0.0]), 0.2)


def test_default_momentum_tangent():
    cloud = sample_sphere(40, seed=1)
    for j in range(10):
        xi = default_momentum(cloud, j)
        assert abs(np.linalg.norm(xi) - 1) < 1e-12
        assert abs(np.dot(xi, cloud.points[j])) < 1e-12


def test_pick_neighbor_direction_and_ties():
    X = np.array([[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [1.0, 0.0, 0.0], [0.5, 0.05, 0.0]])
    cloud = PointCloud(X, 2)
    assert pick_neighbor(cloud, 0, [1.0, 0.0, 0.0]) == 4
    assert pick_neighbor(cloud, 0, [0.0, 1.0, 0.0]) == 2
    X2 = X[:4]
    assert pick_neighbor(PointCloud(X2, 2), 0, [1.0, 0.0, 0.0]) == 1
    with pytest.raises(InvalidArgumentError):
        pick_neighbor(cloud, 0, [0.0, 0.0, 1.0])


def test_discrete_norm_examples():
    assert discrete_norm(np.ones(7)) == 1.0
    assert discrete_norm(np.array([1.0, 0, 0, 0])) == 0.5


@given(arrays(np.complex128, st.integers(1, 50), elements=st.complex_numbers(max_magnitude=1e3, allow_nan=False)))
def test_discrete_norm_reference(u):
    ref = math.sqrt(sum(abs(z) ** 2 for z in u) / len(u))
    assert abs(discrete_norm(u) - ref) <= 1e-14 * max(ref, 1.0)


def test_time_normalization():
    cloud = sample_sphere(30, seed=2)
    state = make_state_neighbor(cloud, 0, 5, 0.3)
    psi, c = time_normalized_state(state, state.amplitudes)
    np.testing.assert_allclose(psi, state.amplitudes / discrete_norm(state.amplitudes), rtol=1e-15)
    psi2, c2 = time_normalized_state(state, 2 * state.amplitudes)
    assert c2 == pytest.approx(2 * c, rel=1e-15)
    np.testing.assert_allclose(psi2, psi / 2, rtol=1e-15)
    with pytest.raises(DegenerateStateError):
        time_normalized_state(state, np.zeros(30))


def test_normalized_propagation_has_unit_mass(sphere_small):
    cloud, ops, dec = sphere_small
    state = make_state_tangent(cloud, 0, default_momentum(cloud, 0), 0.3)
    prop = wave_propagate(dec, 0.3, ops.epsilon, 0.0, ops.c20, state.amplitudes)
    psi, _ = time_normalized_state(state, prop)
    again = wave_propagate(dec, 0.3, ops.epsilon, 0.0, ops.c20, psi)
    assert abs(np.mean(np.abs(again) ** 2) - 1) < 1e-12


def test_amplitudes_vectorized():
    X = np.random.default_rng(0).standard_normal((6, 3))
    a = coherent_amplitudes(X, X[0], np.array([0.0, 0.0, 1.0]), 0.5)
    assert a.shape == (6,) and a[0] == 1


def test_save_state(tmp_path):
    cloud = sample_sphere(5, seed=2)
    path = tmp_path / "s.csv"
    save_state(make_state_neighbor(cloud, 0, 1, 0.3), path)
    lines = path.read_text().splitlines()
    assert lines[0].startswith("# j0=0") and lines[1] == "index,re,im" and len(lines) == 7
    index, re, im = lines[2].split(",")
    assert (index, float(re), float(im)) == ("0", 1.0, 0.0)
