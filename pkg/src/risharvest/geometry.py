"""Scene geometry and mobility: UAV waypoint tracking, ground node random
waypoint motion, node clustering for UAV placement targets.

Positions are float64 arrays of shape (3,) in meters, z up. Ground nodes live
at z = 0, the UAV keeps a fixed service altitude.
"""

from dataclasses import dataclass, replace

import numpy as np


def as_position(p):
    p = np.asarray(p, dtype=float)
    if p.shape != (3,):
        raise ValueError("position must have shape (3,), got %s" % (p.shape,))
    return p


@dataclass
class Scene:
    """Snapshot of everything that has a location.

    bounds is a (2, 3) array [[xmin, ymin, zmin], [xmax, ymax, zmax]]
    enclosing all positions. Node speed limits are carried here so that the
    mobility step is self contained.
    """

    bs_position: np.ndarray          # (3,)
    uav_position: np.ndarray         # (3,)
    element_offsets: np.ndarray      # (L, 3), body frame offsets from UAV
    node_positions: np.ndarray       # (K, 3)
    node_waypoints: np.ndarray       # (K, 3)
    node_speeds: np.ndarray          # (K,) m/s
    bounds: np.ndarray               # (2, 3)
    node_speed_min: float = 0.0      # m/s
    node_speed_max: float = 0.0      # m/s

    def __post_init__(self):
        self.bs_position = as_position(self.bs_position)
        self.uav_position = as_position(self.uav_position)
        self.element_offsets = np.asarray(self.element_offsets, dtype=float)
        self.node_positions = np.asarray(self.node_positions, dtype=float)
        self.node_waypoints = np.asarray(self.node_waypoints, dtype=float)
        self.node_speeds = np.asarray(self.node_speeds, dtype=float)
        self.bounds = np.asarray(self.bounds, dtype=float)
        if self.element_offsets.ndim != 2 or self.element_offsets.shape[1] != 3:
            raise ValueError("element_offsets must be (L, 3)")
        if self.node_positions.ndim != 2 or self.node_positions.shape[1] != 3:
            raise ValueError("node_positions must be (K, 3)")
        if self.node_waypoints.shape != self.node_positions.shape:
            raise ValueError("node_waypoints must match node_positions")
        if self.node_speeds.shape != (self.node_positions.shape[0],):
            raise ValueError("node_speeds must be (K,)")
        if self.bounds.shape != (2, 3):
            raise ValueError("bounds must be (2, 3)")
        if np.any(self.bounds[0] > self.bounds[1]):
            raise ValueError("bounds lower corner exceeds upper corner")

    @property
    def n_elements(self):
        return self.element_offsets.shape[0]

    @property
    def n_nodes(self):
        return self.node_positions.shape[0]


def make_element_grid(n_elements, spacing):
    """Planar array offsets, rows x cols grid centered on the airframe.

    Rows = largest divisor of n_elements not exceeding sqrt(n_elements), so
    8 -> 2x4 and 16 -> 4x4. Panel lies in the horizontal plane.
    """
    if n_elements < 1:
        raise ValueError("need at least one element")
    rows = 1
    for r in range(1, int(np.sqrt(n_elements)) + 1):
        if n_elements % r == 0:
            rows = r
    cols = n_elements // rows
    ii, jj = np.meshgrid(np.arange(rows), np.arange(cols), indexing="ij")
    offs = np.zeros((n_elements, 3))
    offs[:, 0] = (ii.ravel() - (rows - 1) / 2.0) * spacing
    offs[:, 1] = (jj.ravel() - (cols - 1) / 2.0) * spacing
    return offs


def element_world_positions(scene):
    """World coordinates of every reflecting element, shape (L, 3)."""
    return scene.uav_position[None, :] + scene.element_offsets


def kmeans(points, n_clusters, max_iters=20, seed=0):
    """Lloyd k-means with farthest point seeding.

    First centroid is the point picked by the seeded generator, the rest
    greedily maximize distance to the nearest chosen centroid, ties broken
    by lowest point index. Empty clusters keep their previous centroid.
    Returns (centroids (k, 3), assignment (N,)).
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2:
        raise ValueError("points must be 2-D")
    n = pts.shape[0]
    if not 1 <= n_clusters <= n:
        raise ValueError("n_clusters must be in [1, n_points]")
    rng = np.random.default_rng(seed)

    chosen = [int(rng.integers(n))]
    d2 = np.sum((pts - pts[chosen[0]]) ** 2, axis=1)
    while len(chosen) < n_clusters:
        idx = int(np.argmax(d2))  # argmax takes the first max -> lowest index
        chosen.append(idx)
        d2 = np.minimum(d2, np.sum((pts - pts[idx]) ** 2, axis=1))
    centroids = pts[chosen].copy()

    assignment = np.full(n, -1, dtype=int)
    for _ in range(max_iters):
        dist2 = np.sum((pts[:, None, :] - centroids[None, :, :]) ** 2, axis=2)
        new_assignment = np.argmin(dist2, axis=1)
        if np.array_equal(new_assignment, assignment):
            break
        assignment = new_assignment
        for c in range(n_clusters):
            members = pts[assignment == c]
            if members.shape[0] > 0:
                centroids[c] = members.mean(axis=0)
    return centroids, assignment


def uav_step(current, target, v_max, dt, z_min=0.0, z_max=np.inf):
    """Move horizontally toward target by at most v_max*dt, altitude held.

    The altitude channel is only clamped into [z_min, z_max]; waypoint z is
    ignored because the platform flies a fixed service altitude.
    """
    if v_max < 0 or dt < 0:
        raise ValueError("v_max and dt must be nonnegative")
    cur = as_position(current)
    tgt = as_position(target)
    delta = tgt[:2] - cur[:2]
    dist = float(np.hypot(delta[0], delta[1]))
    step = min(v_max * dt, dist)
    out = cur.copy()
    if dist > 0.0:
        out[:2] = cur[:2] + delta * (step / dist)
    out[2] = min(max(cur[2], z_min), z_max)
    return out


def node_mobility_step(scene, dt, rng):
    """One random waypoint update for all ground nodes, returns a new Scene.

    Each node heads to its waypoint at its drawn speed. On arrival (the
    remaining distance fits inside this step) it lands exactly on the
    waypoint and draws a fresh waypoint uniformly in the horizontal bounds
    plus a fresh speed in [node_speed_min, node_speed_max]. A zero speed
    node never arrives and never redraws, so it is frozen.
    """
    if dt < 0:
        raise ValueError("dt must be nonnegative")
    pos = scene.node_positions.copy()
    wps = scene.node_waypoints.copy()
    spd = scene.node_speeds.copy()
    lo, hi = scene.bounds[0], scene.bounds[1]
    for k in range(pos.shape[0]):
        delta = wps[k, :2] - pos[k, :2]
        dist = float(np.hypot(delta[0], delta[1]))
        travel = spd[k] * dt
        if travel >= dist and dist >= 0.0 and spd[k] > 0.0:
            pos[k, :2] = wps[k, :2]
            wps[k, 0] = rng.uniform(lo[0], hi[0])
            wps[k, 1] = rng.uniform(lo[1], hi[1])
            wps[k, 2] = pos[k, 2]
            spd[k] = rng.uniform(scene.node_speed_min, scene.node_speed_max)
        elif dist > 0.0 and travel > 0.0:
            pos[k, :2] += delta * (travel / dist)
    return replace(
        scene, node_positions=pos, node_waypoints=wps, node_speeds=spd
    )
