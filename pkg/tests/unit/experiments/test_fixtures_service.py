from datetime import datetime, timedelta, timezone

import numpy as np
import pytest

from windcast.models.mod_series import FieldFlag
from windcast.services.svc_fixtures import FixtureService
from windcast.services.svc_ingest import IngestService


@pytest.fixture(scope="module")
def series():
    return FixtureService.synthetic_series(n_rows=3000, seed=42)


class TestFixtureService:
    def test_grid_and_station(self, series):
        assert len(series) == 3000
        assert series.station_id == "synthetic"
        assert series.first_timestamp == datetime(2021, 7, 25, 22, 30, tzinfo=timezone.utc)
        assert series.cadence == timedelta(minutes=10)
        assert series.repair_log == ()

    def test_seeded(self, series):
        again = FixtureService.synthetic_series(n_rows=3000, seed=42)
        other = FixtureService.synthetic_series(n_rows=3000, seed=43)
        np.testing.assert_array_equal(again.column("wspd"), series.column("wspd"))
        assert not np.array_equal(other.column("wspd"), series.column("wspd"))

    def test_physical_ranges(self, series):
        wspd = series.column("wspd")
        assert np.all(wspd >= 0.0)
        assert np.all(series.column("gst") >= wspd)
        wdir = series.column("wdir")
        assert np.all((wdir >= 0.0) & (wdir < 360.0))
        assert all(flag == FieldFlag.OBSERVED for flag in series.flags("dewp"))

    def test_speed_is_persistent(self, series):
        wspd = series.column("wspd")
        lag_one = np.corrcoef(wspd[:-1], wspd[1:])[0, 1]
        assert lag_one > 0.9

    def test_repair_leaves_fixture_unchanged(self, series):
        assert IngestService.repair(series) == series
