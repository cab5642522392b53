import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fedstlf.clustering import (ClusterAssignment, InsufficientHistoryError, barycenter_inertia,
                                client_profile_for_clustering, cluster_purity, dtw_barycenter,
                                dtw_distance, dtw_path, kmeans_dtw, read_assignment_csv,
                                write_assignment_csv, write_centroid_csvs)
from fedstlf.core import ConfigurationError, EmptySequenceError
from fedstlf.data import LoadSeries
from fedstlf.synthetic import generate_fleet

from oracles import dtw_by_enumeration, dtw_table_by_enumeration

small = st.lists(st.integers(0, 4).map(float), min_size=1, max_size=6)
reals = st.lists(st.floats(-10, 10, allow_nan=False), min_size=1, max_size=15)


class TestDTW:
    def test_worked_examples(self):
        assert dtw_distance([0, 1, 2], [0, 1, 2]) == 0.0
        assert dtw_distance([0, 0, 1, 2], [0, 1, 2]) == 0.0  # a repeat warps away
        assert dtw_distance([1, 2, 3], [2, 3, 4]) == 2.0
        assert dtw_distance([5.0], [1.0, 2.0]) == 7.0
        d, ii, jj = dtw_path([0, 0, 1], [0, 1])
        assert d == 0.0 and list(zip(ii, jj)) == [(0, 0), (1, 0), (2, 1)]

    def test_band_limits_warping(self):
        a, b = [0, 0, 0, 1], [0, 1, 1, 1]
        assert dtw_distance(a, b) == 0.0
        assert dtw_distance(a, b, band=0) == 2.0
        with pytest.raises(ConfigurationError):
            dtw_distance([1, 2, 3, 4], [1], band=2)

    def test_errors(self):
        with pytest.raises(EmptySequenceError):
            dtw_distance([], [1.0])
        with pytest.raises(ValueError):
            dtw_distance([np.nan], [1.0])

    @given(small, small)
    def test_matches_exhaustive_enumeration(self, a, b):
        assert dtw_distance(a, b) == dtw_by_enumeration(a, b)

    def test_every_short_pair_matches_enumeration(self):
        for n in (1, 2, 3):
            for m in (1, 2, 3):
                A, B, table = dtw_table_by_enumeration(n, m)
                got = np.array([[dtw_distance(a, b) for b in B] for a in A])
                np.testing.assert_array_equal(got, table)

    @given(reals, reals)
    def test_symmetric_and_full_band(self, a, b):
        d = dtw_distance(a, b)
        assert d == dtw_distance(b, a)
        assert d == dtw_distance(a, b, band=max(len(a), len(b)))
        assert d >= 0
        assert dtw_distance(a, a) == 0.0

    @given(reals, reals, st.integers(0, 5))
    def test_band_never_helps(self, a, b, extra):
        band = abs(len(a) - len(b)) + extra
        assert dtw_distance(a, b, band) >= dtw_distance(a, b)

    @given(reals, reals)
    def test_path_cost_is_distance(self, a, b):
        d, ii, jj = dtw_path(a, b)
        np.testing.assert_allclose(np.abs(np.array(a)[ii] - np.array(b)[jj]).sum(), d,
                                   rtol=1e-12, atol=1e-12)


class TestBarycenter:
    def test_identical_members(self):
        m = [1.0, 3.0, 2.0]
        np.testing.assert_array_equal(dtw_barycenter([m, m, m]), m)

    def test_median_of_aligned_values(self):
        c = dtw_barycenter([[0, 0, 0], [1, 1, 1], [5, 5, 5]], init=[2, 2, 2])
        np.testing.assert_array_equal(c, [1, 1, 1])

    @given(st.lists(st.lists(st.floats(0, 1), min_size=6, max_size=6), min_size=1, max_size=5))
    def test_inertia_never_increases(self, members):
        hist = []
        c = dtw_barycenter(members, iters=6, band=2, history=hist)
        assert all(b <= a + 1e-12 for a, b in zip(hist, hist[1:]))
        assert barycenter_inertia(c, members, 2) == pytest.approx(hist[-1])

    def test_errors(self):
        with pytest.raises(EmptySequenceError):
            dtw_barycenter([])
        with pytest.raises(ConfigurationError):
            dtw_barycenter([[1.0]], iters=0)


def week_series(cid, pattern, weeks=5):
    n = 168 * weeks
    ts = np.datetime64("2024-01-01T00", "h") + np.arange(n).astype("timedelta64[h]")  # a Monday
    return LoadSeries(cid, ts, np.tile(pattern, weeks).astype(float), {})


class TestProfiles:
    def test_profile_is_hour_of_week_mean_normalised(self):
        pattern = np.arange(168.0)
        p = client_profile_for_clustering(week_series("a", pattern), train_hours=168 * 4)
        np.testing.assert_allclose(p, pattern / 167.0, atol=1e-15)

    def test_profile_aligns_on_monday(self):
        pattern = np.zeros(168)
        pattern[24 * 2 + 5] = 1.0
        s = week_series("a", pattern)
        shifted = LoadSeries("b", s.timestamps[24:] , s.load[24:], {})
        pa = client_profile_for_clustering(s, 168 * 4)
        pb = client_profile_for_clustering(shifted, 168 * 4)
        np.testing.assert_array_equal(pa, pb)
        assert pa.argmax() == 24 * 2 + 5

    def test_constant_and_short(self):
        s = week_series("a", np.full(168, 3.0))
        np.testing.assert_array_equal(client_profile_for_clustering(s, 168 * 4), 0.0)
        with pytest.raises(InsufficientHistoryError):
            client_profile_for_clustering(s, 168 * 4 - 1)


class TestKMeans:
    def profiles(self, rng):
        base = [np.sin(np.linspace(0, 2 * np.pi, 30)), np.linspace(0, 1, 30), np.zeros(30)]
        return {f"c{i}": base[i % 3] + rng.normal(0, 0.02, 30) for i in range(9)}, \
            {f"c{i}": str(i % 3) for i in range(9)}

    def test_separable_groups_recovered(self, rng):
        X, labels = self.profiles(rng)
        res = kmeans_dtw(X, 3, seed=1, band=3)
        assert cluster_purity(res, labels) == 1.0
        assert sorted(res.sizes()) == [3, 3, 3]
        assert all(b <= a + 1e-9 for a, b in zip(res.history, res.history[1:]))

    def test_k_equals_n_has_zero_inertia(self, rng):
        X, _ = self.profiles(rng)
        res = kmeans_dtw(X, len(X), seed=0, band=3)
        assert res.inertia == 0.0 and sorted(res.sizes()) == [1] * len(X)

    def test_deterministic_and_order_free(self, rng):
        X, _ = self.profiles(rng)
        a = kmeans_dtw(X, 3, seed=4, band=3)
        b = kmeans_dtw(dict(reversed(list(X.items()))), 3, seed=4, band=3)
        assert a.assignment == b.assignment and a.inertia == b.inertia

    def test_config_errors(self, rng):
        X, _ = self.profiles(rng)
        with pytest.raises(ConfigurationError):
            kmeans_dtw(X, 0)
        with pytest.raises(ConfigurationError):
            kmeans_dtw(X, 10)

    def test_purity_and_csv(self, tmp_path):
        res = ClusterAssignment(2, {"a": 0, "b": 0, "c": 1, "d": 1},
                                [np.zeros(3), np.ones(3)], 0.0)
        assert cluster_purity(res, {"a": "x", "b": "y", "c": "y", "d": "y"}) == 0.75
        write_assignment_csv(res, tmp_path / "a.csv")
        assert (tmp_path / "a.csv").read_text() == "client_id,cluster\na,0\nb,0\nc,1\nd,1\n"
        assert read_assignment_csv(tmp_path / "a.csv") == res.assignment
        paths = write_centroid_csvs(res, tmp_path / "cent")
        assert paths[1].read_text().splitlines()[:2] == ["hour_of_week,value", "0,1.0"]

    def test_synthetic_archetypes_recovered(self):
        fleet, profiles = generate_fleet(9, 24 * 7 * 6, 21, return_profiles=True)
        res = kmeans_dtw({s.client_id: client_profile_for_clustering(s) for s in fleet}, 3, seed=2)
        assert cluster_purity(res, {p.client_id: p.archetype for p in profiles}) >= 0.8
