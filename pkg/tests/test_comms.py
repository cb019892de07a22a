"""Link layer checks against independent loop-based oracles.

Every expected value here is recomputed with explicit per-index loops so
the vectorized implementation is compared against straight-line math,
not against itself.
"""

import numpy as np
import pytest

from risharvest.comms import cascade, incident_power, precode, sinr_and_rate


def _rand_cn(rng, shape):
    # unit-variance circular complex entries
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) \
        / np.sqrt(2.0)


def _setup(seed, z=3, l=4, k=2):
    rng = np.random.default_rng(seed)
    g1 = _rand_cn(rng, (l, z))
    g2 = _rand_cn(rng, (k, l))
    theta = rng.uniform(0.0, 2.0 * np.pi, l)
    amp = rng.uniform(0.0, 1.0, l)
    power = rng.uniform(0.1, 1.0, k)
    return rng, g1, g2, theta, amp, power


def _cascade_loops(g1, g2, theta, amp):
    k, l = g2.shape
    z = g1.shape[1]
    h = np.zeros((k, z), dtype=complex)
    for i in range(k):
        for j in range(z):
            acc = 0.0 + 0.0j
            for m in range(l):
                acc += g2[i, m] * amp[m] * np.exp(1j * theta[m]) * g1[m, j]
            h[i, j] = acc
    return h


def test_cascade_matches_elementwise_loops():
    for seed in range(5):
        _, g1, g2, theta, amp, _ = _setup(seed)
        want = _cascade_loops(g1, g2, theta, amp)
        got = cascade(g1, g2, theta, amp)
        np.testing.assert_allclose(got, want, rtol=1e-12, atol=0.0)


def test_precode_matches_closed_form():
    for seed in range(5):
        _, g1, g2, theta, amp, power = _setup(seed)
        w, fb = precode(g1, g2, theta, amp, power)
        assert not fb
        h = _cascade_loops(g1, g2, theta, amp)
        for k in range(h.shape[0]):
            norm = np.sqrt(sum(abs(h[k, j]) ** 2 for j in range(h.shape[1])))
            want = np.sqrt(power[k]) * np.conj(h[k]) / norm
            np.testing.assert_allclose(w[:, k], want, rtol=1e-12, atol=0.0)
            # column carries exactly the commanded power
            np.testing.assert_allclose(
                np.linalg.norm(w[:, k]) ** 2, power[k], rtol=1e-12)


def test_precode_beam_beats_random_unit_beams():
    # MRT maximizes own-node received power among equal-power beams
    rng, g1, g2, theta, amp, power = _setup(11)
    w, _ = precode(g1, g2, theta, amp, power)
    h = cascade(g1, g2, theta, amp)
    for k in range(h.shape[0]):
        best = np.abs(h[k] @ w[:, k]) ** 2
        for _ in range(50):
            u = _rand_cn(rng, h.shape[1])
            u = u / np.linalg.norm(u)
            rival = power[k] * np.abs(h[k] @ u) ** 2
            assert rival <= best * (1.0 + 1e-12)


def test_precode_fallback_uniform_beam():
    _, g1, g2, theta, amp, power = _setup(3)
    g2_dead = g2.copy()
    g2_dead[1, :] = 0.0                    # node 1 estimate vanishes
    w, fb = precode(g1, g2_dead, theta, amp, power)
    assert fb
    z = g1.shape[1]
    np.testing.assert_allclose(w[:, 1], np.full(z, np.sqrt(power[1] / z)),
                               rtol=1e-12)
    # healthy column unaffected by the other node's fallback
    np.testing.assert_allclose(np.linalg.norm(w[:, 0]) ** 2, power[0],
                               rtol=1e-12)


def test_precode_rejects_negative_power():
    _, g1, g2, theta, amp, _ = _setup(4)
    with pytest.raises(ValueError):
        precode(g1, g2, theta, amp, np.array([0.5, -0.1]))


def test_incident_power_matches_loops():
    for seed in range(5):
        _, g1, g2, theta, amp, power = _setup(seed)
        w, _ = precode(g1, g2, theta, amp, power)
        got = incident_power(g1, w)
        l, z = g1.shape
        k = w.shape[1]
        for m in range(l):
            acc = 0.0
            for kk in range(k):
                rx = 0.0 + 0.0j
                for j in range(z):
                    rx += g1[m, j] * w[j, kk]
                acc += abs(rx) ** 2
            np.testing.assert_allclose(got[m], acc, rtol=1e-12)


def test_incident_power_quadratic_in_beam_scale():
    _, g1, g2, theta, amp, power = _setup(6)
    w, _ = precode(g1, g2, theta, amp, power)
    base = incident_power(g1, w)
    np.testing.assert_allclose(incident_power(g1, 2.0 * w), 4.0 * base,
                               rtol=1e-12)


def test_sinr_and_rate_match_loops():
    noise = 3.16e-14     # W
    bw = 20e6            # Hz
    for seed in range(5):
        for phi in (0.0, 0.08):
            _, g1, g2, theta, amp, power = _setup(seed)
            w, _ = precode(g1, g2, theta, amp, power)
            sinr, rate, g = sinr_and_rate(g1, g2, theta, amp, w, phi,
                                          noise, bw)
            h = _cascade_loops(g1, g2, theta, amp)
            kn = h.shape[0]
            for k in range(kn):
                p_row = [abs(sum(h[k, j] * w[j, kk]
                                 for j in range(h.shape[1]))) ** 2
                         for kk in range(kn)]
                sig = p_row[k]
                intf = sum(p_row) - sig
                want = sig / (intf + phi * (sig + intf) + noise)
                np.testing.assert_allclose(sinr[k], want, rtol=1e-12)
                np.testing.assert_allclose(rate[k],
                                           bw * np.log2(1.0 + want),
                                           rtol=1e-12)
            np.testing.assert_allclose(g, h @ w, rtol=1e-12, atol=0.0)


def test_distortion_strictly_lowers_sinr():
    _, g1, g2, theta, amp, power = _setup(9)
    w, _ = precode(g1, g2, theta, amp, power)
    clean, _, _ = sinr_and_rate(g1, g2, theta, amp, w, 0.0, 1e-14, 20e6)
    dirty, _, _ = sinr_and_rate(g1, g2, theta, amp, w, 0.08, 1e-14, 20e6)
    assert np.all(dirty < clean)


def test_single_node_has_no_interference():
    rng = np.random.default_rng(12)
    z, l = 3, 4
    g1 = _rand_cn(rng, (l, z))
    g2 = _rand_cn(rng, (1, l))
    theta = rng.uniform(0.0, 2.0 * np.pi, l)
    amp = np.ones(l)
    w, _ = precode(g1, g2, theta, amp, np.array([0.7]))
    noise = 1e-13
    for phi in (0.0, 0.05):
        sinr, _, g = sinr_and_rate(g1, g2, theta, amp, w, phi, noise, 20e6)
        sig = abs(g[0, 0]) ** 2
        np.testing.assert_allclose(sinr[0], sig / (phi * sig + noise),
                                   rtol=1e-12)


def test_sinr_rejects_negative_phi():
    _, g1, g2, theta, amp, power = _setup(2)
    w, _ = precode(g1, g2, theta, amp, power)
    with pytest.raises(ValueError):
        sinr_and_rate(g1, g2, theta, amp, w, -0.01, 1e-13, 20e6)
