import math

import numpy as np
import pytest

from geoflow import (
    EmptySupportError,
    InvalidArgumentError,
    KernelConfig,
    Model,
    PointCloud,
    RecoveryConfig,
    build_graph_operators,
    decompose,
    geodesic_distance,
    make_state_neighbor,
    make_state_tangent,
    sample_flat_torus,
    sample_sphere,
    trace_geodesic,
    UnsupportedModelError,
)
from geoflow.recovery import (
    bump_cutoff,
    extrinsic_mean,
    propagate_density,
    recovery_error,
    sample_max,
    save_trace,
    torus_local_mean,
)
from geoflow.states import default_momentum


@pytest.fixture(scope="module")
def sphere_run():
    h = 0.3
    cloud = sample_sphere(800, seed=4)
    cfg = RecoveryConfig(h=h, t_grid=(0.0, 0.2, 0.4))
    ops = build_graph_operators(cloud, KernelConfig(cfg.epsilon, 1.0, 2))
    dec = decompose(ops)
    state = make_state_tangent(cloud, 0, default_momentum(cloud, 0), h)
    return cloud, ops, dec, state, cfg


def nearest_spacing(cloud, j):
    d = np.linalg.norm(cloud.points - cloud.points[j], axis=1)
    d[j] = np.inf
    return geodesic_distance(cloud.model, cloud.points[j], cloud.points[int(np.argmin(d))])


def test_config_defaults_and_validation():
    cfg = RecoveryConfig(h=0.2)
    assert cfg.epsilon == pytest.approx(0.2 ** 4)
    assert cfg.radii == pytest.approx((math.sqrt(0.2), 2 * math.sqrt(0.2)))
    assert RecoveryConfig(h=0.2, alpha=1.0).epsilon == pytest.approx(0.008)
    for bad in (dict(alpha=0.5), dict(alpha=2.5), dict(c_in=2.0, c_out=1.0), dict(t_grid=(0.2, 0.1)),
                dict(epsilon_shift=-1.0)):
        with pytest.raises(InvalidArgumentError):
            RecoveryConfig(h=0.2, **bad)


def test_sample_max_examples():
    assert sample_max([0.1, 0.7, 0.2]) == 1
    assert sample_max([0.5, 0.5]) == 0


def test_bump_values():
    cloud = PointCloud(np.array([[0.0, 0.0], [1.0, 0.0], [1.5, 0.0], [2.0, 0.0], [5.0, 0.0]]), 1)
    chi = bump_cutoff(np.zeros(2), (1.0, 2.0), cloud)
    assert chi[0] == 1.0 and chi[1] == 1.0 and chi[3] == 0.0 and chi[4] == 0.0
    assert chi[2] == pytest.approx(math.exp(-1 / 3), abs=1e-15)
    assert abs(chi[2] - 0.7165) < 1e-4
    with pytest.raises(InvalidArgumentError):
        bump_cutoff(np.zeros(2), (2.0, 2.0), cloud)


def test_extrinsic_mean_point_mass():
    X = np.array([[1.0, 0, 0], [0, 1.0, 0], [0, 0, 1.0], [0.6, 0.8, 0]])
    cloud = PointCloud(X, 2)
    density = np.zeros(4)
    density[2] = 4.0  # <density, 1>_N = 1
    mean, snap = extrinsic_mean(density, np.ones(4), cloud)
    np.testing.assert_allclose(mean, X[2])
    assert snap == 2


def test_extrinsic_mean_two_points():
    X = np.array([[1.0, 0, 0], [0, 1.0, 0]])
    mean, snap = extrinsic_mean(np.ones(2), np.ones(2), PointCloud(X, 2))
    np.testing.assert_allclose(mean, [0.5, 0.5, 0.0])
    assert snap == 0


def test_extrinsic_mean_empty():
    with pytest.raises(EmptySupportError):
        extrinsic_mean(np.ones(2), np.zeros(2), PointCloud(np.eye(2, 3), 2))


def test_density_normalized(sphere_run):
    cloud, ops, dec, state, cfg = sphere_run
    for t in (0.0, 0.3):
        _, density, c = propagate_density(dec, state, t, cfg, ops.c20)
        assert abs(density.mean() - 1) < 1e-12 and c > 0
    _, d0, _ = propagate_density(dec, state, 0.0, cfg, ops.c20)
    base = np.abs(state.amplitudes) ** 2
    np.testing.assert_allclose(d0, base / base.mean(), rtol=1e-12)


def test_constant_input_stays_constant(sphere_run):
    cloud, ops, dec, state, cfg = sphere_run
    for t in (0.0, 0.25, 0.5):
        _, density, _ = propagate_density(dec, state, t, cfg, ops.c20, amplitudes=np.ones(cloud.N))
        np.testing.assert_allclose(density, 1.0, atol=1e-9)


def test_initial_maximizer_is_base(sphere_run):
    cloud, ops, dec, state, cfg = sphere_run
    _, density, _ = propagate_density(dec, state, 0.0, cfg, ops.c20)
    assert sample_max(density) == state.base_index


def test_trace_shape_and_t0_errors(sphere_run):
    cloud, ops, dec, state, cfg = sphere_run
    trace = trace_geodesic(cloud, ops, dec, state, cfg)
    assert len(trace) == 3
    assert trace.max_index[0] == 0
    spacing = nearest_spacing(cloud, 0)
    assert trace.err_max[0] <= spacing + 1e-12 and trace.err_mean[0] <= spacing + 1e-12
    for k in range(3):
        d = np.linalg.norm(cloud.points - trace.mean_point[k], axis=1)
        assert trace.snapped_index[k] == int(np.argmin(d))
    rows = recovery_error(trace, cloud.model)
    assert rows[1]["t"] == 0.2 and rows[1]["err_mean"] == trace.err_mean[1]


def test_trace_zero_grid_snaps_near_base(sphere_run):
    cloud, ops, dec, state, _ = sphere_run
    cfg = RecoveryConfig(h=0.3, t_grid=(0.0,))
    trace = trace_geodesic(cloud, ops, dec, state, cfg)
    assert len(trace) == 1
    assert geodesic_distance("Sphere2", cloud.points[trace.snapped_index[0]], cloud.points[0]) <= nearest_spacing(
        cloud, 0) + 1e-12


def test_trace_without_cutoff(sphere_run):
    cloud, ops, dec, state, _ = sphere_run
    cfg = RecoveryConfig(h=0.3, t_grid=(0.0, 0.2), use_cutoff=False)
    trace = trace_geodesic(cloud, ops, dec, state, cfg)
    _, density, _ = propagate_density(dec, state, 0.2, cfg, ops.c20)
    np.testing.assert_allclose(trace.mean_point[1], density @ cloud.points / cloud.N, rtol=1e-12)


def test_trace_validation(sphere_run):
    cloud, ops, dec, state, _ = sphere_run
    with pytest.raises(InvalidArgumentError, match="0.9"):
        trace_geodesic(cloud, ops, dec, state, RecoveryConfig(h=0.3, t_grid=(0.1, 3.0)))
    small = sample_sphere(10, seed=0)
    bad_state = make_state_neighbor(small, 0, 1, 0.3)
    with pytest.raises(InvalidArgumentError):
        trace_geodesic(cloud, ops, dec, bad_state, RecoveryConfig(h=0.3))


def test_oracle_point_in_cloud_can_be_exact():
    # a dense ring of samples along the great circle through x0 in direction xi
    angles = np.linspace(0, 2 * np.pi, 400, endpoint=False)
    ring = np.column_stack([np.cos(angles), np.sin(angles), np.zeros_like(angles)])
    cloud = PointCloud(np.vstack([ring, sample_sphere(400, seed=1).points]), 2, Model.SPHERE2)
    h = 0.3
    cfg = RecoveryConfig(h=h, t_grid=(0.0,))
    ops = build_graph_operators(cloud, KernelConfig(cfg.epsilon, 1.0, 2))
    state = make_state_tangent(cloud, 0, np.array([0.0, 1.0, 0.0]), h)
    trace = trace_geodesic(cloud, ops, decompose(ops), state, cfg)
    assert trace.err_max[0] == 0.0


def test_external_trace_unscored(tmp_path):
    X = sample_sphere(300, seed=2).points
    cloud = PointCloud(X, 2)
    cfg = RecoveryConfig(h=0.3, t_grid=(0.0, 0.2))
    ops = build_graph_operators(cloud, KernelConfig(cfg.epsilon, 1.0, 2))
    state = make_state_neighbor(cloud, 0, 1, 0.3)
    trace = trace_geodesic(cloud, ops, decompose(ops), state, cfg)
    assert np.isnan(trace.err_max).all() and trace.oracle_points is None
    path = tmp_path / "trace.csv"
    save_trace(trace, path)
    rows = [line for line in path.read_text().splitlines() if not line.startswith("#")]
    assert rows[0].endswith("c_tN,err_max,err_mean") and rows[1].endswith(",,")


def test_torus_local_mean():
    cloud = sample_flat_torus(600, seed=9)
    h = 0.4
    cfg = RecoveryConfig(h=h, t_grid=(0.0, 0.3), local_mean=True, epsilon_override=0.08)
    ops = build_graph_operators(cloud, KernelConfig(cfg.epsilon, 1.0, 2))
    state = make_state_tangent(cloud, 0, default_momentum(cloud, 0), h)
    trace = trace_geodesic(cloud, ops, decompose(ops), state, cfg)
    assert trace.local_index is not None and np.isfinite(trace.err_local).all()
    with pytest.raises(UnsupportedModelError):
        torus_local_mean(np.ones(3), np.ones(3), PointCloud(np.eye(3), 2))
