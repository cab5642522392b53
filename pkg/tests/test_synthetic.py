import numpy as np
import pytest

from fedstlf.data import clean_series
from fedstlf.synthetic import (ARCHETYPES, ClientProfile, fleet_profiles, generate_fleet,
                               inject_gaps_and_outliers, simulate_client, simulate_weather,
                               write_fleet)
from fedstlf.data import load_meter_csv


def flat_profile(**kw):
    base = dict(client_id="c", archetype="workshop", base_load=50.0, daily_amplitude=0.0,
                weekly_amplitude=0.0, noise_std=0.0, temperature_coupling=0.0, seed=4)
    base.update(kw)
    return ClientProfile(**base)


def test_zero_amplitudes_give_constant_load():
    s = simulate_client(flat_profile(), simulate_weather(24 * 30, 1))
    np.testing.assert_array_equal(s.load, 50.0)


def test_profile_validation():
    with pytest.raises(ValueError):
        flat_profile(archetype="bakery")
    with pytest.raises(ValueError):
        flat_profile(base_load=0.0)
    with pytest.raises(ValueError):
        flat_profile(noise_std=-1.0)


def test_fleet_is_deterministic_and_round_robin():
    a, pa = generate_fleet(6, 24 * 7 * 5, 11, return_profiles=True)
    b = generate_fleet(6, 24 * 7 * 5, 11)
    for x, y in zip(a, b):
        np.testing.assert_array_equal(x.load, y.load)
        np.testing.assert_array_equal(x.weather["temp"], y.weather["temp"])
    assert [p.archetype for p in pa] == list(ARCHETYPES) * 2
    assert [s.client_id for s in a] == [f"client{i:02d}" for i in range(6)]
    c = generate_fleet(6, 24 * 7 * 5, 12)
    assert not np.array_equal(a[0].load, c[0].load)


def test_fleet_shape_and_bounds():
    for s in generate_fleet(9, 24 * 7 * 6, 5):
        assert len(s) == 24 * 7 * 6 and s.n_missing == 0
        assert np.all(s.load >= 0)
        assert set(s.weather) >= {"temp", "rhum"}
        assert np.all((s.weather["rhum"] >= 0) & (s.weather["rhum"] <= 100))
    with pytest.raises(ValueError):
        generate_fleet(2, 671, 0)
    with pytest.raises(ValueError):
        generate_fleet(0, 1000, 0)


def test_archetypes_have_distinct_weekly_shape():
    fleet, profiles = generate_fleet(3, 24 * 7 * 8, 2, return_profiles=True)
    ratio = {}
    for s, p in zip(fleet, profiles):
        wd = s.weekdays()
        ratio[p.archetype] = s.load[wd == 6].mean() / s.load[wd < 5].mean()
    assert ratio["administrative"] < 0.8 and ratio["workshop"] < 0.8
    assert ratio["production"] > 0.85


def test_gap_count_is_binomial():
    s = simulate_client(flat_profile(), simulate_weather(10_000, 3))
    out, log = inject_gaps_and_outliers(s, 0.01, 0.0, seed=8)
    n = 10_000 - 4
    sd = np.sqrt(n * 0.01 * 0.99)
    assert abs(len(log.gaps) - n * 0.01) < 4 * sd
    assert np.isnan(out.load).sum() == len(log.gaps)
    assert not np.isnan(s.load).any()


def test_injection_is_cleanable():
    for s in generate_fleet(6, 24 * 7 * 6, 7):
        bad, log = inject_gaps_and_outliers(s, 0.02, 0.01, seed=3)
        fixed = clean_series(bad)
        assert fixed.n_missing == 0 and np.all(fixed.load >= 0)
        assert all(fixed.load[i] >= 0 for i in log.outliers)


def test_injection_rate_bounds():
    s = generate_fleet(1, 700, 0)[0]
    with pytest.raises(ValueError):
        inject_gaps_and_outliers(s, 0.06, 0.0, 1)
    same, log = inject_gaps_and_outliers(s, 0.0, 0.0, 1)
    np.testing.assert_array_equal(same.load, s.load)
    assert not log.gaps and not log.outliers


def test_write_fleet_roundtrip(tmp_path):
    fleet, profiles = generate_fleet(3, 700, 9, return_profiles=True)
    manifest = write_fleet(fleet, profiles, tmp_path)
    assert manifest.read_text().splitlines()[0] == "client_id,archetype,seed"
    back = load_meter_csv(tmp_path / "client01.csv")
    np.testing.assert_allclose(back.load, fleet[1].load, rtol=1e-15)
    assert set(back.weather) == set(fleet[1].weather)


def test_profiles_seeded_per_client():
    a = fleet_profiles(4, 1)
    b = fleet_profiles(6, 1)
    assert a == b[:4]
