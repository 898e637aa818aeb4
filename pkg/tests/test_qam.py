import itertools

import numpy as np
import pytest

from cdcfir.link.qam import constellation, qam16_demap, qam16_map, theoretical_ber_16qam


def test_round_trip_all_labels():
    bits = np.array(list(itertools.product([0, 1], repeat=4)), dtype=np.uint8).ravel()
    np.testing.assert_array_equal(qam16_demap(qam16_map(bits)), bits)


def test_normalization():
    pts = constellation()
    assert abs(pts.mean()) < 1e-15
    assert np.mean(np.abs(pts) ** 2) == pytest.approx(1.0, rel=1e-14)
    assert len(set(np.round(pts, 12))) == 16


def test_gray_neighbours():
    pts = constellation()
    dist = np.abs(pts[:, None] - pts[None, :])
    dmin = dist[dist > 0].min()
    pairs = 0
    for a in range(16):
        for b in range(a + 1, 16):
            if np.isclose(dist[a, b], dmin):
                assert bin(a ^ b).count("1") == 1
                pairs += 1
    assert pairs == 24  # 4x4 grid: 2 * 4 * 3 nearest-neighbour pairs


def test_demap_is_minimum_distance():
    rng = np.random.default_rng(0)
    r = rng.normal(size=5000) * 0.6 + 1j * rng.normal(size=5000) * 0.6
    pts = constellation()
    nearest = np.argmin(np.abs(r[:, None] - pts[None, :]), axis=1)
    labels = ((nearest[:, None] >> np.arange(3, -1, -1)) & 1).ravel()
    np.testing.assert_array_equal(qam16_demap(r), labels)


def test_bad_bit_count():
    with pytest.raises(ValueError):
        qam16_map(np.zeros(6))


def test_theory_monotone_to_zero():
    ebn0 = np.arange(0, 20, 0.5)
    ber = theoretical_ber_16qam(ebn0)
    assert np.all(np.diff(ber) < 0)
    assert theoretical_ber_16qam(20) < 1e-15


def test_theory_near_one_percent_at_8db():
    ber = theoretical_ber_16qam(8.0)
    assert 1e-2 / 1.3 <= ber <= 1e-2 * 1.3


def test_theory_against_monte_carlo():
    # AWGN-only symbol-level oracle, 1e7 bits
    rng = np.random.default_rng(2024)
    n_bits = 10_000_000
    bits = rng.integers(0, 2, n_bits, dtype=np.uint8)
    s = qam16_map(bits)
    esn0 = 4 * 10 ** 0.8
    noise = (rng.standard_normal(s.size) + 1j * rng.standard_normal(s.size)) * np.sqrt(0.5 / esn0)
    ber = np.count_nonzero(qam16_demap(s + noise) != bits) / n_bits
    p = theoretical_ber_16qam(8.0)
    assert abs(ber - p) <= 3 * np.sqrt(p * (1 - p) / n_bits)
