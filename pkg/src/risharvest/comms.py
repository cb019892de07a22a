"""Link layer pieces: MRT precoding on the estimated cascaded channel,
incident RF power at the array, and SINR / rate under residual hardware
distortion.

Shapes: g1 is (L, Z), g2 stacks node vectors as rows (K, L), precoder W
is (Z, K) with one column per node.
"""

from dataclasses import dataclass

import numpy as np


@dataclass
class LinkBudget:
    """Per slot RF accounting for one reflection configuration."""

    incident_w: np.ndarray       # (L,) incident power per element
    effective_gain: np.ndarray   # (K, K) complex, row = receiving node
    sinr: np.ndarray             # (K,)
    rate_bps: np.ndarray         # (K,)


def cascade(g1, g2, theta, amplitudes):
    """Cascaded node channels H = g2 * diag(amp * e^{j theta}) * g1, (K, Z)."""
    profile = amplitudes * np.exp(1j * theta)
    return (g2 * profile[None, :]) @ g1


def precode(g1_est, g2_est, theta, amplitudes, power):
    """MRT beams on the estimated cascade, one column per node.

    w_k = sqrt(p_k) * conj(h_k) / ||h_k|| where h_k is node k's estimated
    cascaded channel under the commanded reflection profile. A vanishing
    estimate falls back to a uniform beam (flagged), keeping the power
    exact. Returns (W (Z, K), fallback_used).
    """
    power = np.asarray(power, dtype=float)
    if np.any(power < 0):
        raise ValueError("powers must be >= 0")
    h = cascade(g1_est, g2_est, theta, amplitudes)      # (K, Z)
    z = g1_est.shape[1]
    w = np.zeros((z, h.shape[0]), dtype=complex)
    fallback = False
    for k in range(h.shape[0]):
        norm = np.linalg.norm(h[k])
        if norm > 0.0:
            w[:, k] = np.sqrt(power[k]) * np.conj(h[k]) / norm
        else:
            fallback = True
            w[:, k] = np.sqrt(power[k] / z)
    return w, fallback


def incident_power(g1_true, precoders):
    """Total RF power hitting each element, shape (L,).

    p_l = sum_k |row_l(g1) w_k|^2. Depends only on the BS side, so it is
    unchanged by whatever the reflection profile does afterwards.
    """
    return np.sum(np.abs(g1_true @ precoders) ** 2, axis=1)


def sinr_and_rate(g1_true, g2_true, theta, amplitudes, precoders, phi,
                  noise_power_w, bandwidth_hz):
    """Downlink SINR and Shannon rate per node for one reflection profile.

    Hardware distortion is modeled as extra noise phi * (received signal
    power), so
        sinr_k = S_k / (I_k + phi * (S_k + I_k) + sigma^2).
    Returns (sinr (K,), rate_bps (K,), effective_gain (K, K)).
    """
    if phi < 0:
        raise ValueError("phi must be >= 0")
    h = cascade(g1_true, g2_true, theta, amplitudes)    # (K, Z)
    g = h @ precoders                                   # (K, K)
    p = np.abs(g) ** 2
    signal = np.diag(p).copy()
    interference = np.sum(p, axis=1) - signal
    received = signal + interference
    sinr = signal / (interference + phi * received + noise_power_w)
    rate = bandwidth_hz * np.log2(1.0 + sinr)
    return sinr, rate, g
