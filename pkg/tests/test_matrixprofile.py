import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.spatial.distance import cdist

from kneescout.errors import DegenerateWindow, SeriesTooShort, WindowTooLarge
from kneescout.matrixprofile import FLAT_STD, mass, stamp


def znorm_distance_oracle(u, w):
    """Pairwise z-normalized Euclidean distance with the flat-window rules."""
    u = np.asarray(u, dtype=float)
    w = np.asarray(w, dtype=float)
    L = len(u)
    su, sw = float(np.std(u)), float(np.std(w))
    if su < FLAT_STD and sw < FLAT_STD:
        return 0.0
    if su < FLAT_STD or sw < FLAT_STD:
        return math.sqrt(L)
    zu = (u - u.mean()) / su
    zw = (w - w.mean()) / sw
    return float(np.linalg.norm(zu - zw))


def naive_distance_profile(query, series):
    L, M = len(query), len(series)
    return np.array(
        [znorm_distance_oracle(query, series[k : k + L]) for k in range(M - L + 1)]
    )


def allpairs_distance_matrix(series, L):
    """Naive O(M^2 L) all-pairs z-normalized distances, array form.

    Windows are z-normalized directly and compared pairwise; flat-window
    rules and the ceil(L/2) exclusion band match the library contract.
    """
    series = np.asarray(series, dtype=float)
    n = len(series) - L + 1
    W = np.lib.stride_tricks.sliding_window_view(series, L).astype(float)
    mu = W.mean(axis=1)
    sd = W.std(axis=1)
    flat = sd < FLAT_STD
    Z = np.where(
        flat[:, None], 0.0, (W - mu[:, None]) / np.where(flat, 1.0, sd)[:, None]
    )
    D = cdist(Z, Z)
    D[flat[:, None] ^ flat[None, :]] = math.sqrt(L)
    D[flat[:, None] & flat[None, :]] = 0.0
    offsets = np.abs(np.arange(n)[:, None] - np.arange(n)[None, :])
    D[offsets <= math.ceil(L / 2)] = np.inf
    return D


def naive_matrix_profile(series, L):
    """O(M^2 L) all-pairs oracle with exclusion band and smallest-index ties."""
    series = np.asarray(series, dtype=float)
    M = len(series)
    n = M - L + 1
    radius = math.ceil(L / 2)
    P = np.full(n, np.inf)
    I = np.full(n, -1, dtype=np.int64)
    for j in range(n):
        for k in range(n):
            if abs(k - j) <= radius:
                continue
            d = znorm_distance_oracle(series[j : j + L], series[k : k + L])
            if d < P[j] or (d == P[j] and k < I[j]):
                P[j] = d
                I[j] = k
    return P, I


class TestMass:
    def test_self_match_is_zero(self):
        rng = np.random.default_rng(0)
        series = rng.normal(0, 1, 40)
        k = 13
        profile = mass(series[k : k + 6], series)
        assert profile.distances[k] == pytest.approx(0.0, abs=1e-7)

    def test_affine_invariance(self):
        rng = np.random.default_rng(1)
        series = rng.normal(0, 1, 50)
        sub = series[10:18]
        profile = mass(3.0 * sub + 2.0, series)
        assert profile.distances[10] == pytest.approx(0.0, abs=1e-7)

    def test_fft_matches_naive(self):
        rng = np.random.default_rng(2)
        series = np.cumsum(rng.normal(0, 1, 64))
        query = series[20:28]
        got = mass(query, series).distances
        expected = naive_distance_profile(query, series)
        assert np.max(np.abs(got - expected)) < 1e-9

    def test_trivial_match_masked_when_self_join(self):
        rng = np.random.default_rng(3)
        series = rng.normal(0, 1, 40)
        profile = mass(series[10:16], series, query_start=10)
        radius = math.ceil(6 / 2)
        assert np.all(np.isinf(profile.distances[10 - radius : 10 + radius + 1]))
        outside = np.delete(profile.distances, np.s_[10 - radius : 10 + radius + 1])
        assert np.all(np.isfinite(outside))

    def test_degenerate_window(self):
        with pytest.raises(DegenerateWindow):
            mass(np.array([1.0]), np.ones(10))

    def test_window_too_large(self):
        with pytest.raises(WindowTooLarge):
            mass(np.ones(11), np.ones(10))

    def test_flat_window_rules(self):
        series = np.concatenate([np.full(10, 2.0), np.sin(np.arange(10))])
        profile = mass(np.full(4, 7.0), series).distances
        assert profile[0] == 0.0  # flat query vs flat window
        assert profile[12] == pytest.approx(2.0)  # flat query vs varying window


class TestStamp:
    def test_repeated_motif(self):
        rng = np.random.default_rng(4)
        motif = np.array([0.0, 2.0, -1.0, 3.0, 0.5, -2.0, 1.0, 0.0])
        series = rng.normal(0, 0.2, 60)
        series[5:13] += motif * 4
        series[40:48] += motif * 4
        mp = stamp(series, 8)
        assert mp.P[5] < 0.35 and mp.P[40] < 0.35
        assert mp.I[5] == 40 and mp.I[40] == 5

    def test_sine_profile_near_zero(self):
        p = 16
        t = np.arange(8 * p)
        series = np.sin(2 * np.pi * t / p)
        mp = stamp(series, p)
        interior = mp.P[p : -p]
        assert np.max(interior) < 1e-6

    def test_series_too_short(self):
        with pytest.raises(SeriesTooShort):
            stamp(np.ones(8), 8)

    def test_matches_naive_oracle(self):
        rng = np.random.default_rng(5)
        series = np.cumsum(rng.normal(0, 1, 120))
        for L in (3, 8, 20):
            mp = stamp(series, L)
            P, I = naive_matrix_profile(series, L)
            assert np.max(np.abs(mp.P - P)) < 1e-9
            # indices must agree wherever the nearest neighbor is unique by margin
            for j in range(len(P)):
                d_second = sorted(
                    znorm_distance_oracle(series[j : j + L], series[k : k + L])
                    for k in range(len(P))
                    if abs(k - j) > mp.exclusion_radius and k != I[j]
                )
                if d_second and d_second[0] - P[j] > 1e-6:
                    assert mp.I[j] == I[j]

    def test_affine_invariance_of_profile(self):
        rng = np.random.default_rng(6)
        series = np.cumsum(rng.normal(0, 1, 90))
        base = stamp(series, 8)
        scaled = stamp(2.5 * series + 7.0, 8)
        assert np.max(np.abs(base.P - scaled.P)) < 1e-8

    def test_exclusion_radius_respected(self):
        rng = np.random.default_rng(7)
        series = np.cumsum(rng.normal(0, 1, 100))
        mp = stamp(series, 6)
        j = np.arange(len(mp.I))
        assert np.all(np.abs(mp.I - j) > mp.exclusion_radius)

    def test_profile_value_matches_indexed_pair(self):
        rng = np.random.default_rng(8)
        series = np.cumsum(rng.normal(0, 1, 80))
        mp = stamp(series, 5)
        for j in range(len(mp.P)):
            k = mp.I[j]
            d = znorm_distance_oracle(series[j : j + 5], series[k : k + 5])
            assert mp.P[j] == pytest.approx(d, abs=1e-9)

    def test_merge_order_independent(self):
        # fold distance profiles in a shuffled order with the same tie rule;
        # the result must match stamp exactly
        rng = np.random.default_rng(9)
        series = np.cumsum(rng.normal(0, 1, 70))
        L = 4
        mp = stamp(series, L)
        n = len(series) - L + 1
        radius = mp.exclusion_radius
        P = np.full(n, np.inf)
        I = np.full(n, -1, dtype=np.int64)
        order = rng.permutation(n)
        for j in order:
            dist = mass(series[j : j + L], series, query_start=j).distances.copy()
            finite = np.isfinite(dist)
            better = finite & ((dist < P) | ((dist == P) & (j < I)))
            P = np.where(better, dist, P)
            I = np.where(better, j, I)
        capped = np.minimum(P, 2.0 * math.sqrt(L))
        np.testing.assert_array_equal(capped, mp.P)
        np.testing.assert_array_equal(I, mp.I)

    def test_distances_bounded(self):
        rng = np.random.default_rng(10)
        series = rng.normal(0, 1, 200)
        mp = stamp(series, 7)
        assert np.all(mp.P >= 0)
        assert np.all(mp.P <= 2 * math.sqrt(7) + 1e-12)

    @given(
        seed=st.integers(0, 10_000),
        m=st.integers(20, 60),
        L=st.sampled_from([3, 5, 8]),
    )
    @settings(max_examples=25, deadline=None)
    def test_matches_naive_property(self, seed, m, L):
        rng = np.random.default_rng(seed)
        series = np.cumsum(rng.normal(0, 1, m))
        mp = stamp(series, L)
        P, _ = naive_matrix_profile(series, L)
        assert np.max(np.abs(mp.P - P)) < 1e-9


class TestOracleScale:
    def test_index_agreement_at_full_scale(self):
        # where the nearest neighbor is unique by a 1e-6 margin, the index
        # must match the all-pairs oracle even at the largest contract size
        rng = np.random.default_rng(77)
        series = np.cumsum(rng.normal(0, 1, 300))
        for L in (3, 8, 20):
            mp = stamp(series, L)
            D = allpairs_distance_matrix(series, L)
            oracle_P = D.min(axis=1)
            oracle_I = D.argmin(axis=1)
            assert np.max(np.abs(mp.P - oracle_P)) < 1e-9
            two = np.partition(D, 1, axis=1)[:, 1]
            unique = two - oracle_P > 1e-6
            np.testing.assert_array_equal(mp.I[unique], oracle_I[unique])
