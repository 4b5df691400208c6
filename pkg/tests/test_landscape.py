import numpy as np
import pytest
from hypothesis import given, strategies as st

from pyrogrid.landscape import (
    DimensionMismatch, FuelClass, Landscape, LandscapeError, RedFlagThresholds, UnknownFuelClass, WeatherError,
    WeatherSample, WeatherSeries, load_fuel_table, load_landscape, load_moisture_table, load_weather, red_flag,
    save_landscape, save_weather, weather_at, write_ascii_grid,
)


def test_all_grass_grid_counts(tmp_path):
    write_ascii_grid(tmp_path / "g.asc", np.full((100, 100), 1), 30.0)
    land = load_landscape(tmp_path / "g.asc")
    assert land.shape == (100, 100)
    assert int(land.burnable_mask().sum()) == 10_000


def test_unknown_fuel_code(tmp_path):
    grid = np.ones((5, 5), dtype=int)
    grid[2, 2] = 99
    write_ascii_grid(tmp_path / "g.asc", grid, 30.0)
    with pytest.raises(UnknownFuelClass):
        load_landscape(tmp_path / "g.asc")


def test_grid_smaller_than_network(tmp_path, testbed):
    write_ascii_grid(tmp_path / "g.asc", np.ones((10, 10), dtype=int), 100.0)
    with pytest.raises(DimensionMismatch):
        load_landscape(tmp_path / "g.asc", network=testbed)


def test_parse_error(tmp_path):
    (tmp_path / "bad.asc").write_text("ncols x\n")
    with pytest.raises(LandscapeError):
        load_landscape(tmp_path / "bad.asc")


def test_nodata_cells_become_nonburnable(tmp_path):
    grid = np.ones((4, 4), dtype=int)
    grid[0, 0] = -9999
    write_ascii_grid(tmp_path / "g.asc", grid, 10.0)
    land = load_landscape(tmp_path / "g.asc")
    assert land.fuel[0, 0] == FuelClass.NONBURNABLE
    assert not land.burnable_mask()[0, 0]


def test_roundtrip_with_sibling_grids(tmp_path):
    rng = np.random.default_rng(0)
    land = Landscape(rng.integers(0, 5, (6, 7)).astype(np.int8), 25.0, rng.random((6, 7)).round(4),
                     (rng.random((6, 7)) * 100).round(2), (100.0, 200.0))
    save_landscape(land, tmp_path / "l.asc")
    back = load_landscape(tmp_path / "l.asc")
    assert np.array_equal(back.fuel, land.fuel)
    assert np.allclose(back.slope, land.slope)
    assert np.allclose(back.elevation, land.elevation)
    assert back.origin == (100.0, 200.0)


def test_mismatched_slope_grid(tmp_path):
    write_ascii_grid(tmp_path / "g.asc", np.ones((4, 4), dtype=int), 10.0)
    write_ascii_grid(tmp_path / "g_slope.asc", np.zeros((3, 4)), 10.0, fmt="%.2f")
    with pytest.raises(DimensionMismatch):
        load_landscape(tmp_path / "g.asc")


def test_cell_indexing_north_up():
    land = Landscape(np.ones((3, 4), dtype=np.int8), 10.0, origin=(0.0, 0.0))
    assert land.cell_of(1.0, 29.0) == (0, 0)
    assert land.cell_of(39.0, 1.0) == (2, 3)
    assert land.cell_of(-1.0, 5.0) is None
    x, y = land.cell_center(0, 0)
    assert (float(x), float(y)) == (5.0, 25.0)


def test_fuel_table_invariants():
    fuels = load_fuel_table()
    assert fuels[FuelClass.NONBURNABLE].base_ros == 0
    assert not fuels[FuelClass.NONBURNABLE].burnable
    assert all(f.base_ros >= 0 for f in fuels.values())
    assert set(fuels) == set(FuelClass)


def test_moisture_table_in_unit_interval():
    m = load_moisture_table()
    xs = np.linspace(0, 100, 101)
    vals = np.array([m(x) for x in xs])
    assert np.all((vals > 0) & (vals <= 1))
    assert np.all(np.diff(vals) <= 0)
    assert m(0) == 1.0


def _series():
    return WeatherSeries(tuple(WeatherSample(float(k), 0.0, 50.0, 20.0) for k in range(4)), 30.0)


def test_weather_hold_examples():
    s = _series()
    assert weather_at(s, 0).wind_speed == 0.0
    assert weather_at(s, 31).wind_speed == 1.0
    assert weather_at(s, s.horizon).wind_speed == 3.0
    with pytest.raises(WeatherError):
        weather_at(s, s.horizon + 1)
    with pytest.raises(WeatherError):
        weather_at(s, -0.1)


@given(st.floats(0, 119.999))
def test_weather_piecewise_constant(t):
    s = _series()
    assert weather_at(s, t) == s.samples[int(t // 30)]


def test_weather_invariants():
    with pytest.raises(WeatherError):
        WeatherSeries((WeatherSample(-1.0, 0.0, 50.0, 20.0),))
    with pytest.raises(WeatherError):
        WeatherSeries((WeatherSample(1.0, 0.0, 150.0, 20.0),))


def test_weather_csv_roundtrip(tmp_path):
    s = _series()
    save_weather(s, tmp_path / "w.csv")
    assert (tmp_path / "w.csv").read_text().splitlines()[0] == "t_min,wind_ms,dir_deg,rh_pct,temp_c,precip_mm"
    assert load_weather(tmp_path / "w.csv") == s


def test_weather_missing_column(tmp_path):
    (tmp_path / "w.csv").write_text("t_min,wind_ms\n0,1\n")
    with pytest.raises(WeatherError):
        load_weather(tmp_path / "w.csv")


TH = RedFlagThresholds(15.0, 20.0)


def test_red_flag_examples():
    assert red_flag(WeatherSample(20, 0, 10, 30), TH)
    assert not red_flag(WeatherSample(10, 0, 10, 30), TH)
    assert red_flag(WeatherSample(15, 0, 20, 30), TH)


@given(st.floats(0, 40), st.floats(0, 100), st.floats(0, 10), st.floats(0, 30))
def test_red_flag_monotone(u, rh, du, drh):
    if red_flag(WeatherSample(u, 0, rh, 20), TH):
        assert red_flag(WeatherSample(u + du, 0, max(0.0, rh - drh), 20), TH)
