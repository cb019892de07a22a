"""Channel models for the two hop BS -> RIS -> node link.

The direct BS -> node path is blocked, so only the cascaded link exists.
BS -> RIS entries are i.i.d. Rayleigh, RIS -> node is Rician with a
geometry locked LoS phase per element. Large scale gain follows a
log-distance law anchored at 1 m.
"""

from dataclasses import dataclass, field

import numpy as np

C_LIGHT = 2.998e8  # m/s


@dataclass
class ChannelConfig:
    pathloss_exp_bs_ris: float = 2.2
    pathloss_exp_ris_node: float = 2.5
    ref_loss_db: float = 30.0        # loss at 1 m, dB
    rician_k: float = 3.0            # linear K factor of the RIS -> node hop
    noise_power_w: float = 2.5e-13   # -96 dBm over the full band
    bandwidth_hz: float = 20e6
    carrier_hz: float = 2.4e9

    def __post_init__(self):
        if self.rician_k < 0:
            raise ValueError("rician_k must be >= 0")
        if self.noise_power_w <= 0:
            raise ValueError("noise_power_w must be > 0")
        if self.bandwidth_hz <= 0:
            raise ValueError("bandwidth_hz must be > 0")
        if self.carrier_hz <= 0:
            raise ValueError("carrier_hz must be > 0")

    @property
    def wavelength(self):
        return C_LIGHT / self.carrier_hz


@dataclass
class ChannelRealization:
    """True and estimated small scale channels for one slot.

    g1 is the BS -> RIS matrix (L, Z); g2 stacks the RIS -> node vectors
    as rows (K, L). Estimates share the shapes.
    """

    g1_true: np.ndarray
    g2_true: np.ndarray
    g1_est: np.ndarray
    g2_est: np.ndarray
    csi_error: float = 0.0


def path_loss_gain(distance, exponent, ref_loss_db):
    """Linear power gain 10^(-ref/10) * d^-exponent, d clamped to >= 1 m."""
    d = np.maximum(np.asarray(distance, dtype=float), 1.0)
    return 10.0 ** (-ref_loss_db / 10.0) * d ** (-exponent)


def _cn(rng, shape):
    # unit variance circularly symmetric complex gaussian
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) \
        * np.sqrt(0.5)


def sample_bs_ris(rng, n_elements, n_antennas, gain):
    """Rayleigh block, each entry CN(0, gain). Shape (L, Z)."""
    if gain < 0:
        raise ValueError("gain must be >= 0")
    return np.sqrt(gain) * _cn(rng, (n_elements, n_antennas))


def sample_ris_node(rng, element_positions, node_position, rician_k, gain,
                    wavelength):
    """Rician vector over the elements, shape (L,).

    LoS phase of element l is -2*pi*d_l/lambda with d_l the exact element
    to node distance, so the deterministic part carries the array geometry.
    Each entry has mean power equal to gain.
    """
    if gain < 0:
        raise ValueError("gain must be >= 0")
    d = np.linalg.norm(element_positions - node_position[None, :], axis=1)
    los = np.exp(-2j * np.pi * d / wavelength)
    nlos = _cn(rng, d.shape[0])
    kf = rician_k
    h = np.sqrt(kf / (kf + 1.0)) * los + np.sqrt(1.0 / (kf + 1.0)) * nlos
    return np.sqrt(gain) * h


def estimate_csi(true_channel, csi_error, mean_power, rng):
    """Blend the true channel with white estimation noise.

    est = sqrt(1 - zeta) * h + sqrt(zeta) * e where e is CN with per entry
    power mean_power (the configured average power of h). zeta = 0 returns
    the true values untouched so ideal CSI stays bit identical.
    """
    if not 0.0 <= csi_error <= 1.0:
        raise ValueError("csi_error must lie in [0, 1]")
    h = np.asarray(true_channel)
    if csi_error == 0.0:
        return h.copy()
    e = _cn(rng, h.shape) * np.sqrt(mean_power)
    return np.sqrt(1.0 - csi_error) * h + np.sqrt(csi_error) * e
