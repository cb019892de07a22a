"""Slotted downlink environment: a BS serves K ground nodes through a
UAV mounted RIS that harvests RF + solar energy into a shared battery.

Per slot the agent picks the harvesting split (protocol dependent), the
reflection phases and the per node transmit powers. Reward is the RF
harvesting efficiency minus penalties for QoS misses, battery overflow
and energy causality violations.

Slot order: the action is applied to the channel realization that was
already exposed in the observation, then nodes move, the UAV tracks the
cluster centroid, fresh channels and solar arrivals are drawn and the
next observation is assembled. So the agent always acts on exactly the
channels it has just seen.
"""

from dataclasses import dataclass, field

import numpy as np

from .channel import (ChannelConfig, ChannelRealization, estimate_csi,
                      path_loss_gain, sample_bs_ris, sample_ris_node)
from .comms import incident_power, precode, sinr_and_rate
from .energy import (Battery, EhAction, EhConfig, EhProtocol, battery_step,
                     harvested_rf_energy, incident_split, sample_solar)
from .geometry import (Scene, element_world_positions, kmeans,
                       make_element_grid, node_mobility_step, uav_step)

TWO_PI = 2.0 * np.pi


@dataclass
class SceneConfig:
    bs_position: tuple = (0.0, 0.0, 25.0)
    uav_start: tuple = (60.0, 60.0, 50.0)
    service_altitude_m: float = 50.0
    altitude_min_m: float = 10.0
    altitude_max_m: float = 120.0
    uav_speed_mps: float = 15.0
    bounds_m: tuple = ((0.0, 0.0, 0.0), (120.0, 120.0, 130.0))
    node_speed_min_mps: float = 0.5
    node_speed_max_mps: float = 2.0
    element_spacing_m: float = 0.0625   # half wavelength at 2.4 GHz
    kmeans_clusters: int = 1
    kmeans_iters: int = 10

    def validate(self):
        if self.service_altitude_m < self.altitude_min_m \
                or self.service_altitude_m > self.altitude_max_m:
            raise ValueError("service altitude outside the allowed band")
        if self.uav_speed_mps < 0:
            raise ValueError("uav_speed_mps must be >= 0")
        if self.node_speed_min_mps < 0 \
                or self.node_speed_max_mps < self.node_speed_min_mps:
            raise ValueError("bad node speed range")
        if self.element_spacing_m <= 0:
            raise ValueError("element_spacing_m must be > 0")
        if self.kmeans_clusters < 1:
            raise ValueError("kmeans_clusters must be >= 1")


@dataclass
class EnvConfig:
    n_antennas: int = 8              # Z, BS antennas
    n_elements: int = 16             # L, RIS elements
    n_nodes: int = 3                 # K, IoT nodes
    slots_per_episode: int = 100
    protocol: EhProtocol = EhProtocol.HYBRID
    qos_min_bps: float = 70e6
    p_max_w: float = 1.0             # total BS transmit budget
    battery_capacity_j: float = 500.0
    battery_init_frac: float = 0.5
    csi_error: float = 0.0           # zeta
    hw_impairment: float = 0.0       # phi
    use_renewable: bool = True
    penalty_qos: float = 0.5
    penalty_overflow: float = 0.25
    penalty_causality: float = 0.5
    done_on_empty: bool = True
    scene: SceneConfig = field(default_factory=SceneConfig)
    channel: ChannelConfig = field(default_factory=ChannelConfig)
    energy: EhConfig = field(default_factory=EhConfig)

    def validate(self):
        if min(self.n_antennas, self.n_elements, self.n_nodes) < 1:
            raise ValueError("Z, L, K must all be >= 1")
        if self.slots_per_episode < 1:
            raise ValueError("slots_per_episode must be >= 1")
        if self.qos_min_bps < 0:
            raise ValueError("qos_min_bps must be >= 0")
        if self.p_max_w <= 0:
            raise ValueError("p_max_w must be > 0")
        if self.battery_capacity_j <= 0:
            raise ValueError("battery_capacity_j must be > 0")
        if not 0.0 <= self.battery_init_frac <= 1.0:
            raise ValueError("battery_init_frac must lie in [0, 1]")
        if not 0.0 <= self.csi_error <= 1.0:
            raise ValueError("csi_error must lie in [0, 1]")
        if self.hw_impairment < 0:
            raise ValueError("hw_impairment must be >= 0")
        if min(self.penalty_qos, self.penalty_overflow,
               self.penalty_causality) < 0:
            raise ValueError("penalty weights must be >= 0")
        self.scene.validate()
        if not isinstance(self.protocol, EhProtocol):
            raise ValueError("protocol must be an EhProtocol")

    @property
    def action_dim(self):
        l, k = self.n_elements, self.n_nodes
        if self.protocol in (EhProtocol.TS, EhProtocol.PS):
            return 2 + l + k
        return 4 + l + k

    @property
    def state_dim(self):
        z, l, k = self.n_antennas, self.n_elements, self.n_nodes
        # raw channel estimates, element and node positions, per element
        # cascade summaries, link quality summaries, pending solar,
        # previous raw action
        return 2 * l * z + 2 * l * k + 3 * l + 3 * k \
            + (l + 3 * l * k) + (2 * k + 1) + 1 + self.action_dim


@dataclass
class SlotReport:
    """Everything measured while executing one slot."""

    t: int
    protocol: str
    efficiency: float
    incident_rf_j: float
    harvested_rf_j: float
    solar_j: float
    battery_before_j: float
    battery_after_j: float
    overflow_j: float
    consumed_j: float
    causality_violation: bool
    rates_bps: np.ndarray
    sinr: np.ndarray
    qos_ok: np.ndarray
    qos_violations: int
    precoder_fallback: bool
    reward: float


class RisEnv:
    """Discrete time control environment over the physics stack.

    Raw agent actions are vectors in [-1, 1]^action_dim; map_action turns
    them into physical controls. Layouts (dtheta are phase residuals
    around the slot's co-phasing reference):

        TS:     [tau, dtheta_1..L, ptot, w_1..K]
        PS:     [rho, dtheta_1..L, ptot, w_1..K]
        HYBRID: [tau, rho, eta, dtheta_1..L, ptot, w_1..K]

    eta picks how many elements harvest during the hybrid first phase;
    the concrete subset is the top of the slot's estimated incident
    power ranking, so one smooth scalar stands in for the per element
    selection bits. Transmit power is a total budget fraction ptot plus
    normalized per node weights w, which keeps the total a single
    monotone coordinate instead of a sum of box coordinates.
    """

    def __init__(self, cfg: EnvConfig):
        cfg.validate()
        self.cfg = cfg
        self.action_dim = cfg.action_dim
        self.state_dim = cfg.state_dim
        self._done = True
        self._t = 0

    # ------------------------------------------------------------------
    # lifecycle

    def reset(self, seed):
        """Start an episode; all randomness flows from the single seed."""
        cfg = self.cfg
        ss = np.random.SeedSequence(seed)
        (self._rng_channel, self._rng_csi, self._rng_solar,
         self._rng_mobility, self._rng_kmeans) = map(
            np.random.default_rng, ss.spawn(5))

        sc = cfg.scene
        lo = np.asarray(sc.bounds_m[0], dtype=float)
        hi = np.asarray(sc.bounds_m[1], dtype=float)
        k = cfg.n_nodes
        nodes = np.zeros((k, 3))
        nodes[:, 0] = self._rng_mobility.uniform(lo[0], hi[0], size=k)
        nodes[:, 1] = self._rng_mobility.uniform(lo[1], hi[1], size=k)
        wps = np.zeros((k, 3))
        wps[:, 0] = self._rng_mobility.uniform(lo[0], hi[0], size=k)
        wps[:, 1] = self._rng_mobility.uniform(lo[1], hi[1], size=k)
        speeds = self._rng_mobility.uniform(
            sc.node_speed_min_mps, sc.node_speed_max_mps, size=k)
        uav = np.asarray(sc.uav_start, dtype=float).copy()
        uav[2] = sc.service_altitude_m
        self._scene = Scene(
            bs_position=np.asarray(sc.bs_position, dtype=float),
            uav_position=uav,
            element_offsets=make_element_grid(
                cfg.n_elements, sc.element_spacing_m),
            node_positions=nodes,
            node_waypoints=wps,
            node_speeds=speeds,
            bounds=np.stack([lo, hi]),
            node_speed_min=sc.node_speed_min_mps,
            node_speed_max=sc.node_speed_max_mps,
        )

        self._battery = Battery(
            cfg.battery_init_frac * cfg.battery_capacity_j,
            cfg.battery_capacity_j)
        self._t = 0
        self._done = False
        self._prev_raw = np.zeros(self.action_dim)

        # observation normalizers, frozen at the initial geometry
        d1 = np.linalg.norm(self._scene.bs_position
                            - self._scene.uav_position)
        self._g1_scale = np.sqrt(path_loss_gain(
            d1, cfg.channel.pathloss_exp_bs_ris, cfg.channel.ref_loss_db))
        d2 = np.linalg.norm(
            self._scene.node_positions - self._scene.uav_position[None, :],
            axis=1).mean()
        self._g2_scale = np.sqrt(path_loss_gain(
            d2, cfg.channel.pathloss_exp_ris_node, cfg.channel.ref_loss_db))
        self._pos_scale = float(np.max(hi - lo))
        self._solar_scale = max(
            cfg.energy.solar_rate_jps * cfg.energy.slot_duration_s,
            cfg.energy.solar_packet_j)

        self._sample_slot()
        return self._observe()

    def _sample_slot(self):
        """Draw the channels and the solar influx the next action faces."""
        cfg = self.cfg
        ch = cfg.channel
        scene = self._scene
        elems = element_world_positions(scene)

        d1 = np.linalg.norm(scene.bs_position - scene.uav_position)
        gain1 = float(path_loss_gain(
            d1, ch.pathloss_exp_bs_ris, ch.ref_loss_db))
        g1 = sample_bs_ris(self._rng_channel, cfg.n_elements,
                           cfg.n_antennas, gain1)

        g2 = np.zeros((cfg.n_nodes, cfg.n_elements), dtype=complex)
        gains2 = np.zeros(cfg.n_nodes)
        for kk in range(cfg.n_nodes):
            dk = np.linalg.norm(scene.uav_position
                                - scene.node_positions[kk])
            gains2[kk] = path_loss_gain(
                dk, ch.pathloss_exp_ris_node, ch.ref_loss_db)
            g2[kk] = sample_ris_node(
                self._rng_channel, elems, scene.node_positions[kk],
                ch.rician_k, gains2[kk], ch.wavelength)

        g1_est = estimate_csi(g1, cfg.csi_error, gain1, self._rng_csi)
        g2_est = np.zeros_like(g2)
        for kk in range(cfg.n_nodes):
            g2_est[kk] = estimate_csi(
                g2[kk], cfg.csi_error, gains2[kk], self._rng_csi)

        self._realization = ChannelRealization(
            g1_true=g1, g2_true=g2, g1_est=g1_est, g2_est=g2_est,
            csi_error=cfg.csi_error)
        self._theta_ref, self._slot_features, self._harvest_order = \
            self._alignment_reference()
        # solar is drawn even when unused so paired runs stay paired
        solar = sample_solar(self._rng_solar, cfg.energy)
        self._solar_pending = solar if cfg.use_renewable else 0.0

    def _alignment_reference(self):
        """Co-phasing reference and per element summaries, estimates only.

        A 16 level coordinate sweep picks each element phase to lift the
        weakest node's estimated cascade norm under full reflection; the
        theta action is later interpreted as a residual around this
        reference, so an all zero raw action already points the array
        sensibly. The summaries exposed to the observation are the per
        element incident power shares, the residual misalignment angles
        per node, and the per node contribution magnitude shares. Also
        returns a harvest pick ladder over the elements, which
        map_action uses to ground the hybrid harvest-count scalar.
        """
        cfg = self.cfg
        r = self._realization
        l, k = cfg.n_elements, cfg.n_nodes
        # v[k, l] = element l's contribution vector to node k's cascade
        v = r.g2_est[:, :, None] * r.g1_est[None, :, :]    # (K, L, Z)
        theta = np.zeros(l)
        unit = np.exp(1j * theta)
        h = np.sum(v * unit[None, :, None], axis=1)        # (K, Z)
        grid = np.arange(16) / 16.0 * TWO_PI
        spin = np.exp(1j * grid)
        for _ in range(2):
            for ll in range(l):
                rest = h - unit[ll] * v[:, ll]             # (K, Z)
                cand = rest[None, :, :] \
                    + spin[:, None, None] * v[None, :, ll]
                score = np.min(np.linalg.norm(cand, axis=2), axis=1)
                j = int(np.argmax(score))
                theta[ll] = grid[j]
                unit[ll] = spin[j]
                h = cand[j]

        equal = np.full(k, cfg.p_max_w / k)
        w, _ = precode(r.g1_est, r.g2_est, theta, np.ones(l), equal)
        b = r.g1_est @ w                                   # (L, K)
        inc = np.sum(np.abs(b) ** 2, axis=1)               # (L,)
        tot_inc = float(np.sum(inc))
        inc_share = inc * (l / tot_inc) if tot_inc > 0 else np.ones(l)
        m = r.g2_est.T * b                                 # (L, K)
        spun = unit[:, None] * m
        tot = np.sum(spun, axis=0)                         # (K,)
        delta = np.zeros((l, k))
        ok = np.abs(tot) > 0
        delta[:, ok] = np.angle(spun[:, ok] / tot[None, ok])
        mag = np.abs(m)
        colsum = np.sum(mag, axis=0)
        share = np.divide(mag * l, colsum[None, :],
                          out=np.ones_like(mag), where=colsum[None, :] > 0)

        # link quality summaries that drive the power backoff decision:
        # per node rate headroom over the QoS floor, per stream relative
        # incident efficiency, and where full power incidence sits on
        # the rectifier curve (all log scaled and clipped)
        ch = cfg.channel
        _, rates, _ = sinr_and_rate(
            r.g1_est, r.g2_est, theta, np.ones(l), w, 0.0,
            ch.noise_power_w, ch.bandwidth_hz)
        qos = max(cfg.qos_min_bps, 1.0)
        head = np.clip(np.log(np.maximum(rates, qos * 1e-3) / qos),
                       -3.0, 3.0) / 3.0
        q = np.sum(np.abs(b) ** 2, axis=0)
        qsum = float(np.sum(q))
        qrel = q * (k / qsum) if qsum > 0 else np.ones(k)
        level = np.clip(np.log(max(tot_inc, 1e-300)
                               / cfg.energy.rectifier_b), -3.0, 3.0) / 3.0

        feats = np.concatenate([inc_share, np.cos(delta).ravel(),
                                np.sin(delta).ravel(), share.ravel(),
                                head, qrel, [level]])
        # harvest pick ladder: an element is a cheap pull-out when its
        # incident share is large but no node leans on it for rate, so
        # rank by incident fraction minus the worst node cascade fraction
        frac = np.divide(mag, colsum[None, :],
                         out=np.full_like(mag, 1.0 / l),
                         where=colsum[None, :] > 0)
        inc_frac = inc / tot_inc if tot_inc > 0 else np.full(l, 1.0 / l)
        order = np.argsort(-(inc_frac - np.max(frac, axis=1)),
                           kind="stable")
        return theta, feats, order

    def _observe(self):
        r = self._realization
        elems = element_world_positions(self._scene)
        return np.concatenate([
            r.g1_est.real.ravel() / self._g1_scale,
            r.g1_est.imag.ravel() / self._g1_scale,
            r.g2_est.real.ravel() / self._g2_scale,
            r.g2_est.imag.ravel() / self._g2_scale,
            elems.ravel() / self._pos_scale,
            self._scene.node_positions.ravel() / self._pos_scale,
            self._slot_features,
            [self._solar_pending / self._solar_scale],
            self._prev_raw,
        ])

    # ------------------------------------------------------------------
    # action handling

    def map_action(self, raw):
        """Affine map from [-1, 1]^D to physical controls.

        The power tail is [ptot, w_1..K]: ptot scales the total budget
        and the weights are normalized into per node shares (all-zero
        weights fall back to an even split), so the sum never exceeds
        the budget and total power stays one monotone coordinate. Phase
        entries are residuals in [-pi, pi) added to the slot's
        co-phasing reference, so the zero action reflects along the
        estimated cascade; the composition still reaches every absolute
        phase. The hybrid eta scalar turns into hard element modes:
        round(eta * L) elements harvest, taken from the top of the
        slot's estimated incident power ranking.
        """
        raw = np.asarray(raw, dtype=float)
        if raw.shape != (self.action_dim,):
            raise ValueError("raw action must have shape (%d,), got %s"
                             % (self.action_dim, raw.shape))
        frac = (np.clip(raw, -1.0, 1.0) + 1.0) / 2.0
        l, k = self.cfg.n_elements, self.cfg.n_nodes
        proto = self.cfg.protocol
        if proto == EhProtocol.HYBRID:
            tau, rho = float(frac[0]), float(frac[1])
            omega = np.zeros(l)
            omega[self._harvest_order[:int(round(frac[2] * l))]] = 1.0
            resid = frac[3:3 + l]
            ptail = frac[3 + l:]
        else:
            if proto == EhProtocol.TS:
                tau, rho = float(frac[0]), 0.0
                omega = np.ones(l)
            else:
                tau, rho = 0.0, float(frac[0])
                omega = np.zeros(l)
            resid = frac[1:1 + l]
            ptail = frac[1 + l:]
        theta = np.mod(self._theta_ref + resid * TWO_PI - np.pi, TWO_PI)
        total = float(ptail[0]) * self.cfg.p_max_w
        wts = ptail[1:]
        wsum = float(np.sum(wts))
        if wsum > 0.0:
            power = total * wts / wsum
        else:
            power = np.full(k, total / k)
        return EhAction(tau=tau, rho=rho, omega=omega, theta=theta,
                        power=power)

    # ------------------------------------------------------------------
    # slot execution

    def _evaluate_slot(self, action, battery):
        cfg = self.cfg
        action.validate(cfg.n_elements, cfg.n_nodes, cfg.p_max_w)
        r = self._realization
        dur = cfg.energy.slot_duration_s

        # BS beamforms against the nominal full reflection cascade; the
        # per phase amplitude profiles then act on the realized link
        w, fallback = precode(r.g1_est, r.g2_est, action.theta,
                              np.ones(cfg.n_elements), action.power)
        p_inc = incident_power(r.g1_true, w)
        incident_j = float(np.sum(p_inc)) * dur

        phases = incident_split(p_inc, action, cfg.protocol, cfg.energy)
        harvested_j = harvested_rf_energy(phases, cfg.energy)
        efficiency = harvested_j / incident_j if incident_j > 0.0 else 0.0

        rates = np.zeros(cfg.n_nodes)
        sinr = np.zeros(cfg.n_nodes)
        for ph in phases:
            if ph.duration <= 0.0 or not np.any(ph.amplitudes > 0.0):
                continue
            s, rate, _ = sinr_and_rate(
                r.g1_true, r.g2_true, action.theta, ph.amplitudes, w,
                cfg.hw_impairment, cfg.channel.noise_power_w,
                cfg.channel.bandwidth_hz)
            frac_t = ph.duration / dur
            rates += frac_t * rate
            sinr += frac_t * s
        qos_ok = rates >= cfg.qos_min_bps
        n_viol = int(cfg.n_nodes - np.sum(qos_ok))

        solar_j = self._solar_pending
        consumed_j = cfg.energy.hover_drain_w * dur
        new_batt, overflow_j, violated = battery_step(
            battery, harvested_j + solar_j, consumed_j)

        reward = (efficiency
                  - cfg.penalty_qos * n_viol / cfg.n_nodes
                  - cfg.penalty_overflow * overflow_j
                  / cfg.battery_capacity_j
                  - cfg.penalty_causality * float(violated))
        report = SlotReport(
            t=self._t, protocol=cfg.protocol.value, efficiency=efficiency,
            incident_rf_j=incident_j, harvested_rf_j=harvested_j,
            solar_j=solar_j, battery_before_j=battery.level_j,
            battery_after_j=new_batt.level_j, overflow_j=overflow_j,
            consumed_j=consumed_j, causality_violation=violated,
            rates_bps=rates, sinr=sinr, qos_ok=qos_ok,
            qos_violations=n_viol, precoder_fallback=fallback,
            reward=reward)
        return reward, report, new_batt

    def peek(self, action):
        """Score an EhAction on the pending slot without advancing.

        Used by search baselines; repeated calls see the identical slot.
        """
        if self._done:
            raise RuntimeError("episode finished, call reset first")
        reward, report, _ = self._evaluate_slot(action, self._battery)
        return reward, report

    def step(self, raw_action):
        """Run one slot; returns (next_state, reward, done, SlotReport)."""
        raw = np.clip(np.asarray(raw_action, dtype=float), -1.0, 1.0)
        return self.step_action(self.map_action(raw), raw_echo=raw)

    def step_action(self, action, raw_echo=None):
        """Run one slot from an already mapped EhAction.

        Lets search baselines drive the same dynamics as step; raw_echo
        fills the previous-action slice of the next observation and
        defaults to zeros.
        """
        if self._done:
            raise RuntimeError("episode finished, call reset first")
        raw = np.zeros(self.action_dim) if raw_echo is None else raw_echo
        reward, report, new_batt = self._evaluate_slot(
            action, self._battery)
        self._battery = new_batt
        self._t += 1
        self._prev_raw = raw

        cfg = self.cfg
        done = self._t >= cfg.slots_per_episode
        if cfg.done_on_empty and report.causality_violation \
                and new_batt.level_j <= 0.0:
            done = True
        self._done = done
        if not done:
            dur = cfg.energy.slot_duration_s
            self._scene = node_mobility_step(
                self._scene, dur, self._rng_mobility)
            target = self._placement_target()
            self._scene.uav_position = uav_step(
                self._scene.uav_position, target,
                cfg.scene.uav_speed_mps, dur,
                cfg.scene.altitude_min_m, cfg.scene.altitude_max_m)
            self._sample_slot()
        return self._observe(), reward, done, report

    def _placement_target(self):
        """Centroid of the most populated node cluster, service altitude."""
        sc = self.cfg.scene
        seed = int(self._rng_kmeans.integers(2 ** 31))
        cents, assign = kmeans(self._scene.node_positions,
                               min(sc.kmeans_clusters, self.cfg.n_nodes),
                               sc.kmeans_iters, seed)
        counts = np.bincount(assign, minlength=cents.shape[0])
        best = int(np.argmax(counts))   # ties -> lowest cluster index
        target = cents[best].copy()
        target[2] = sc.service_altitude_m
        return target

    @property
    def exploration_scale(self):
        """Per dimension exploration emphasis for gaussian policy noise.

        The reward is much more sensitive to the scalar controls than to
        any single phase residual, and the rectifier's saturation means
        the interesting total power region is far from where a policy
        tends to sit early on. Scaling noise up on those coordinates
        keeps counterfactual actions flowing into the replay buffer, so
        the critic sees the power axis at good phase configurations
        instead of only at the random warmup ones.
        """
        scale = np.ones(self.action_dim)
        n_scalar = 3 if self.cfg.protocol == EhProtocol.HYBRID else 1
        scale[:n_scalar] = 2.0
        scale[n_scalar + self.cfg.n_elements] = 4.0    # total power
        return scale

    @property
    def battery_level_j(self):
        return self._battery.level_j

    @property
    def slot_index(self):
        return self._t
