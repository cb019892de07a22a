"""Element grid layout, clustering, UAV tracking and node mobility."""

import numpy as np
import pytest

from risharvest.geometry import (Scene, element_world_positions, kmeans,
                                 make_element_grid, node_mobility_step,
                                 uav_step)


def test_element_grid_shapes_and_centering():
    g8 = make_element_grid(8, 0.0625)
    assert g8.shape == (8, 3)
    # 2 x 4 panel: two x rows, four y columns
    assert len(set(np.round(g8[:, 0], 9))) == 2
    assert len(set(np.round(g8[:, 1], 9))) == 4
    assert np.allclose(g8.mean(axis=0), 0.0)
    assert np.all(g8[:, 2] == 0.0)

    g16 = make_element_grid(16, 0.1)
    assert len(set(np.round(g16[:, 0], 9))) == 4
    assert len(set(np.round(g16[:, 1], 9))) == 4

    g7 = make_element_grid(7, 0.1)          # prime -> 1 x 7 line
    assert len(set(np.round(g7[:, 0], 9))) == 1

    assert np.array_equal(make_element_grid(1, 0.5), np.zeros((1, 3)))
    with pytest.raises(ValueError):
        make_element_grid(0, 0.1)


def test_element_grid_spacing():
    g = make_element_grid(4, 0.25)           # 2 x 2
    xs = np.unique(np.round(g[:, 0], 12))
    ys = np.unique(np.round(g[:, 1], 12))
    assert xs[1] - xs[0] == pytest.approx(0.25)
    assert ys[1] - ys[0] == pytest.approx(0.25)


def _scene(nodes, wps=None, speeds=None, uav=(50.0, 50.0, 50.0)):
    nodes = np.asarray(nodes, dtype=float)
    k = nodes.shape[0]
    return Scene(
        bs_position=np.zeros(3),
        uav_position=np.asarray(uav, dtype=float),
        element_offsets=make_element_grid(4, 0.0625),
        node_positions=nodes,
        node_waypoints=nodes.copy() if wps is None else np.asarray(wps, float),
        node_speeds=np.ones(k) if speeds is None else np.asarray(speeds, float),
        bounds=np.array([[0.0, 0.0, 0.0], [100.0, 100.0, 130.0]]),
        node_speed_min=0.5,
        node_speed_max=2.0,
    )


def test_element_world_positions_translate_with_uav():
    sc = _scene([[10.0, 10.0, 0.0]], uav=(20.0, 30.0, 40.0))
    world = element_world_positions(sc)
    assert np.array_equal(world, sc.uav_position[None, :]
                          + sc.element_offsets)


def test_scene_validation():
    with pytest.raises(ValueError):
        _scene([[1.0, 2.0]])                      # nodes not (K, 3)
    sc = _scene([[1.0, 2.0, 0.0]])
    with pytest.raises(ValueError):
        Scene(bs_position=np.zeros(3), uav_position=np.zeros(3),
              element_offsets=sc.element_offsets,
              node_positions=sc.node_positions,
              node_waypoints=sc.node_waypoints,
              node_speeds=np.ones(2),             # wrong length
              bounds=sc.bounds)


def test_kmeans_single_cluster_is_global_mean():
    rng = np.random.default_rng(0)
    pts = rng.uniform(0, 100, size=(12, 3))
    cents, assign = kmeans(pts, 1, max_iters=5, seed=3)
    assert np.allclose(cents[0], pts.mean(axis=0), rtol=0, atol=1e-12)
    assert np.all(assign == 0)


def test_kmeans_recovers_separated_blobs_exactly():
    rng = np.random.default_rng(1)
    blobs = []
    centers = np.array([[10.0, 10.0, 0.0], [80.0, 15.0, 0.0],
                        [45.0, 90.0, 0.0]])
    for c in centers:
        blobs.append(c + rng.uniform(-1.0, 1.0, size=(6, 3)))
    pts = np.concatenate(blobs)
    cents, assign = kmeans(pts, 3, max_iters=20, seed=7)
    # blob spread 2 m versus separation > 60 m: farthest point seeding
    # lands one seed per blob and Lloyd converges to the exact means
    want = np.array([b.mean(axis=0) for b in blobs])
    order = np.argsort(cents[:, 0])
    worder = np.argsort(want[:, 0])
    assert np.allclose(cents[order], want[worder], rtol=0, atol=1e-12)
    for b in range(3):
        members = assign[6 * b:6 * (b + 1)]
        assert len(set(members.tolist())) == 1


def test_kmeans_fixed_point_properties():
    rng = np.random.default_rng(2)
    pts = rng.uniform(0, 50, size=(15, 3))
    cents, assign = kmeans(pts, 4, max_iters=50, seed=5)
    # converged: every point sits with its nearest centroid and every
    # non-empty centroid is the mean of its members
    d2 = np.sum((pts[:, None, :] - cents[None, :, :]) ** 2, axis=2)
    assert np.array_equal(np.argmin(d2, axis=1), assign)
    for c in range(4):
        members = pts[assign == c]
        if members.shape[0]:
            assert np.allclose(cents[c], members.mean(axis=0),
                               rtol=0, atol=1e-9)


def test_kmeans_deterministic_and_validated():
    pts = np.random.default_rng(3).uniform(0, 10, size=(9, 3))
    a = kmeans(pts, 3, seed=11)
    b = kmeans(pts, 3, seed=11)
    assert np.array_equal(a[0], b[0]) and np.array_equal(a[1], b[1])
    with pytest.raises(ValueError):
        kmeans(pts, 0)
    with pytest.raises(ValueError):
        kmeans(pts, 10)
    with pytest.raises(ValueError):
        kmeans(pts[0], 1)


def test_uav_step_moves_along_bearing():
    out = uav_step(np.array([0.0, 0.0, 50.0]), np.array([30.0, 40.0, 0.0]),
                   v_max=15.0, dt=1.0, z_min=10.0, z_max=120.0)
    # distance 50 m, step 15 m -> 3-4-5 triangle
    assert np.allclose(out, [9.0, 12.0, 50.0], rtol=0, atol=1e-12)


def test_uav_step_arrives_and_clamps_altitude():
    out = uav_step(np.array([9.0, 0.0, 5.0]), np.array([10.0, 0.0, 99.0]),
                   v_max=15.0, dt=1.0, z_min=10.0, z_max=120.0)
    assert np.allclose(out, [10.0, 0.0, 10.0])
    still = uav_step(np.array([5.0, 5.0, 50.0]), np.array([90.0, 5.0, 50.0]),
                     v_max=0.0, dt=1.0)
    assert np.allclose(still, [5.0, 5.0, 50.0])
    with pytest.raises(ValueError):
        uav_step(np.zeros(3), np.zeros(3), v_max=-1.0, dt=1.0)


def test_node_step_travels_toward_waypoint():
    sc = _scene([[0.0, 0.0, 0.0]], wps=[[10.0, 0.0, 0.0]], speeds=[2.0])
    out = node_mobility_step(sc, 1.0, np.random.default_rng(0))
    assert np.allclose(out.node_positions[0], [2.0, 0.0, 0.0])
    assert np.array_equal(out.node_waypoints, sc.node_waypoints)
    assert out.node_speeds[0] == 2.0
    # the input scene is untouched
    assert np.allclose(sc.node_positions[0], [0.0, 0.0, 0.0])


def test_node_step_arrival_redraws_waypoint_and_speed():
    sc = _scene([[9.5, 0.0, 0.0]], wps=[[10.0, 0.0, 0.0]], speeds=[2.0])
    out = node_mobility_step(sc, 1.0, np.random.default_rng(4))
    assert np.allclose(out.node_positions[0], [10.0, 0.0, 0.0])
    wp = out.node_waypoints[0]
    assert not np.allclose(wp, [10.0, 0.0, 0.0])
    assert 0.0 <= wp[0] <= 100.0 and 0.0 <= wp[1] <= 100.0
    assert wp[2] == 0.0
    assert 0.5 <= out.node_speeds[0] <= 2.0


def test_node_step_zero_speed_is_frozen():
    sc = _scene([[3.0, 4.0, 0.0]], wps=[[50.0, 50.0, 0.0]], speeds=[0.0])
    out = node_mobility_step(sc, 10.0, np.random.default_rng(5))
    assert np.array_equal(out.node_positions, sc.node_positions)
    assert np.array_equal(out.node_waypoints, sc.node_waypoints)
    assert out.node_speeds[0] == 0.0
