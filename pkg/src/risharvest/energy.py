"""Energy side of the platform: nonlinear RF rectifier, slot splitting for
the TS / PS / hybrid harvesting protocols, solar arrivals and the shared
battery bookkeeping.

Powers in watt, energies in joule, durations in seconds.
"""

import enum
from dataclasses import dataclass, field

import numpy as np


class EhProtocol(str, enum.Enum):
    TS = "TS"
    PS = "PS"
    HYBRID = "HYBRID"


@dataclass
class EhConfig:
    # sigmoid rectifier constants, classic measured-fit values
    rectifier_max_w: float = 24e-3   # saturation output M
    rectifier_a: float = 150.0       # steepness, 1/W
    rectifier_b: float = 14e-3       # knee input power, W
    aggregate_rectifier: bool = True  # one rectifier fed by the summed power
    solar_rate_jps: float = 0.0      # lambda, J/s of expected solar influx
    solar_packet_j: float = 0.1      # quantum of one arrival
    hover_drain_w: float = 0.0       # propulsion + electronics draw
    slot_duration_s: float = 1.0

    def __post_init__(self):
        if self.rectifier_max_w <= 0 or self.rectifier_a <= 0 \
                or self.rectifier_b <= 0:
            raise ValueError("rectifier constants must be positive")
        if self.solar_rate_jps < 0 or self.solar_packet_j <= 0:
            raise ValueError("bad solar parameters")
        if self.hover_drain_w < 0:
            raise ValueError("hover_drain_w must be >= 0")
        if self.slot_duration_s <= 0:
            raise ValueError("slot_duration_s must be > 0")


@dataclass
class EhAction:
    """One slot worth of harvesting controls.

    tau: fraction of the slot spent in the dedicated harvest phase
         (TS and hybrid; forced 0.0 under PS).
    rho: power splitting fraction routed to the rectifier during the
         reflecting phase (PS and hybrid; forced 0.0 under TS).
    omega: per element mode scores in [0, 1]; during the hybrid first
           phase an element with omega >= 0.5 harvests, else it reflects.
    theta: per element phase shifts in [0, 2*pi).
    power: per node transmit powers, sum <= p_max.
    """

    tau: float
    rho: float
    omega: np.ndarray
    theta: np.ndarray
    power: np.ndarray

    def __post_init__(self):
        self.omega = np.asarray(self.omega, dtype=float)
        self.theta = np.asarray(self.theta, dtype=float)
        self.power = np.asarray(self.power, dtype=float)

    def validate(self, n_elements, n_nodes, p_max):
        if not 0.0 <= self.tau <= 1.0:
            raise ValueError("tau must lie in [0, 1]")
        if not 0.0 <= self.rho <= 1.0:
            raise ValueError("rho must lie in [0, 1]")
        if self.omega.shape != (n_elements,):
            raise ValueError("omega must have shape (L,)")
        if self.theta.shape != (n_elements,):
            raise ValueError("theta must have shape (L,)")
        if self.power.shape != (n_nodes,):
            raise ValueError("power must have shape (K,)")
        if np.any(self.omega < 0.0) or np.any(self.omega > 1.0):
            raise ValueError("omega entries must lie in [0, 1]")
        if np.any(self.theta < 0.0) or np.any(self.theta >= 2.0 * np.pi):
            raise ValueError("theta entries must lie in [0, 2*pi)")
        if np.any(self.power < 0.0):
            raise ValueError("powers must be >= 0")
        if float(np.sum(self.power)) > p_max * (1.0 + 1e-9):
            raise ValueError("sum of powers exceeds the budget")


@dataclass
class PhasePlan:
    """One temporal phase of a slot as seen by the RF front end.

    eh_input is the per element power routed into rectification (W, shape
    (L,)); amplitudes are the reflection magnitudes applied during the
    phase (0 for a fully harvesting element).
    """

    duration: float
    amplitudes: np.ndarray
    eh_input: np.ndarray

    @property
    def eh_input_total(self):
        return float(np.sum(self.eh_input))


def _sigmoid(x):
    # overflow safe logistic
    x = np.asarray(x, dtype=float)
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def rectify(p_in, cfg):
    """Nonlinear sigmoid rectifier output power.

    psi = M / (1 + exp(-a (p - b))) normalized so that zero input gives
    zero output and the ceiling stays M:
        out = max(0, (psi - M*Omega) / (1 - Omega)),  Omega = 1/(1+exp(a b))
    Accepts scalars or arrays.
    """
    p = np.asarray(p_in, dtype=float)
    if np.any(p < 0):
        raise ValueError("input power must be >= 0")
    m = cfg.rectifier_max_w
    psi = m * _sigmoid(cfg.rectifier_a * (p - cfg.rectifier_b))
    omega = float(_sigmoid(-cfg.rectifier_a * cfg.rectifier_b))
    out = np.maximum(0.0, (psi - m * omega) / (1.0 - omega))
    if np.isscalar(p_in):
        return float(out)
    return out


def incident_split(p_inc, action, protocol, cfg):
    """Slice the slot into phases and route incident power per protocol.

    p_inc: per element incident RF power (L,), constant over the slot.

    TS: phase one of length tau*T with all elements harvesting at full
    incident power (amplitude 0), phase two reflecting everything.
    PS: a single phase; every element harvests rho of its power and
    reflects with amplitude sqrt(1 - rho).
    HYBRID: phase one of length tau*T applies the per element omega
    selection (harvest or reflect whole elements), phase two is PS with
    rho. tau = 1 reduces to pure element selection, tau = 0 to pure PS.

    Zero length phases are dropped, so TS with tau = 0 equals the PS plan
    with rho = 0 and the hybrid endpoints match their parent protocols
    exactly.
    """
    p = np.asarray(p_inc, dtype=float)
    if p.ndim != 1:
        raise ValueError("p_inc must be a vector")
    if np.any(p < 0):
        raise ValueError("incident power must be >= 0")
    n = p.shape[0]
    t = cfg.slot_duration_s
    if action.theta.shape != (n,):
        raise ValueError("theta length mismatch")

    ones = np.ones(n)
    zeros = np.zeros(n)
    phases = []
    if protocol == EhProtocol.TS:
        if action.tau > 0.0:
            phases.append(PhasePlan(action.tau * t, zeros, p.copy()))
        if action.tau < 1.0:
            phases.append(PhasePlan((1.0 - action.tau) * t, ones, zeros))
    elif protocol == EhProtocol.PS:
        amp = np.full(n, np.sqrt(1.0 - action.rho))
        phases.append(PhasePlan(t, amp, action.rho * p))
    elif protocol == EhProtocol.HYBRID:
        if action.omega.shape != (n,):
            raise ValueError("omega length mismatch")
        if action.tau > 0.0:
            harvesting = action.omega >= 0.5
            amp = np.where(harvesting, 0.0, 1.0)
            phases.append(PhasePlan(
                action.tau * t, amp, np.where(harvesting, p, 0.0)))
        if action.tau < 1.0:
            amp = np.full(n, np.sqrt(1.0 - action.rho))
            phases.append(PhasePlan(
                (1.0 - action.tau) * t, amp, action.rho * p))
    else:
        raise ValueError("unknown protocol %r" % (protocol,))
    return phases


def harvested_rf_energy(phases, cfg):
    """Joules recovered by the rectifier over the listed phases.

    aggregate_rectifier feeds the summed per element power into one
    rectifier, otherwise each element rectifies its own share.
    """
    total = 0.0
    for ph in phases:
        if ph.duration <= 0.0:
            continue
        if cfg.aggregate_rectifier:
            total += rectify(ph.eh_input_total, cfg) * ph.duration
        else:
            total += float(np.sum(rectify(ph.eh_input, cfg))) * ph.duration
    return total


def sample_solar(rng, cfg):
    """Solar energy arriving during one slot, quantized Poisson arrivals.

    Count ~ Poisson(lambda * T / packet); returns count * packet joules so
    the mean influx is lambda * T.
    """
    mean_count = cfg.solar_rate_jps * cfg.slot_duration_s / cfg.solar_packet_j
    if mean_count == 0.0:
        return 0.0
    return float(rng.poisson(mean_count)) * cfg.solar_packet_j


@dataclass
class Battery:
    level_j: float
    capacity_j: float

    def __post_init__(self):
        if self.capacity_j <= 0:
            raise ValueError("capacity must be > 0")
        if not 0.0 <= self.level_j <= self.capacity_j:
            raise ValueError("level outside [0, capacity]")


def battery_step(battery, harvested_j, consumed_j):
    """Harvest first, then spend; returns (battery, overflow_j, violation).

    Overflow is the energy clipped at the capacity ceiling. If the demand
    exceeds what is stored after harvesting, the causality flag is raised
    and consumption is capped at the stored amount (level hits 0.0).
    """
    if harvested_j < 0 or consumed_j < 0:
        raise ValueError("energies must be >= 0")
    filled = battery.level_j + harvested_j
    overflow = max(0.0, filled - battery.capacity_j)
    filled = min(filled, battery.capacity_j)
    violated = consumed_j > filled
    level = max(0.0, filled - min(consumed_j, filled))
    return Battery(level, battery.capacity_j), overflow, violated
