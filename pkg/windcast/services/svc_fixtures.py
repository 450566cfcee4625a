from datetime import datetime, timedelta, timezone

import numpy as np
from scipy import signal, stats

from windcast.configuration.monitor import get_logger
from windcast.models.mod_series import MET_FIELDS, FieldFlag, MetRecord, SeriesDataset

logger = get_logger(__name__)

FIXTURE_START = datetime(2021, 7, 25, 22, 30, tzinfo=timezone.utc)
FIXTURE_CADENCE = timedelta(minutes=10)
GUST_FACTOR = 1.25

# Weibull scale at the anemometer whose hub-height equivalent is about 9 m/s.
ANEMOMETER_WEIBULL_SCALE = 9.0 / 1.33193


class FixtureService:
    @staticmethod
    def synthetic_series(
        n_rows: int = 20000,
        seed: int = 42,
        weibull_k: float = 2.0,
        weibull_scale: float = ANEMOMETER_WEIBULL_SCALE,
        ar: float = 0.995,
        noise_std: float = 0.4,
    ) -> SeriesDataset:
        """
        Seeded buoy-like series at a 10-minute cadence.

        Wind speed is an AR(1) Gaussian process pushed through the normal CDF and
        the Weibull inverse CDF, plus sensor noise. Gusts track the speed, pressure
        and temperatures carry slow and diurnal cycles with a weak wind coupling,
        and the direction is a random walk.
        """
        rng = np.random.default_rng(seed)
        step = np.arange(n_rows)
        hours = step / 6.0

        innovations = rng.standard_normal(n_rows)
        gain = np.sqrt(1.0 - ar ** 2)
        start_state = np.array([ar * rng.standard_normal()])
        latent, _ = signal.lfilter([gain], [1.0, -ar], innovations, zi=start_state)
        speed = stats.weibull_min.ppf(stats.norm.cdf(latent), weibull_k, scale=weibull_scale)
        wspd = np.clip(speed + rng.normal(0.0, noise_std, n_rows), 0.0, None)
        gst = wspd * GUST_FACTOR + np.abs(rng.normal(0.0, 0.3, n_rows))

        anomaly = wspd - wspd.mean()
        pres = (
            1013.0
            - 0.8 * anomaly
            + 3.0 * np.sin(2 * np.pi * hours / 120.0)
            + 0.8 * np.sin(2 * np.pi * hours / 24.0)
            + rng.normal(0.0, 0.2, n_rows)
        )
        shared = 2.0 * np.sin(2 * np.pi * step / n_rows) - 0.15 * anomaly
        atmp = 27.0 + shared + 0.6 * np.sin(2 * np.pi * (hours - 9.0) / 24.0) + rng.normal(0.0, 0.1, n_rows)
        wtmp = 28.5 + 0.8 * shared + rng.normal(0.0, 0.05, n_rows)
        dewp = 23.0 + 0.9 * shared + rng.normal(0.0, 0.3, n_rows)
        wdir = np.mod(120.0 + np.cumsum(rng.normal(0.0, 5.0, n_rows)), 360.0)

        columns = {
            "wdir": np.round(wdir, 0) % 360.0,
            "wspd": np.round(wspd, 2),
            "gst": np.round(gst, 2),
            "pres": np.round(pres, 2),
            "atmp": np.round(atmp, 2),
            "wtmp": np.round(wtmp, 2),
            "dewp": np.round(dewp, 2),
        }
        flags = {name: FieldFlag.OBSERVED for name in MET_FIELDS}
        records = tuple(
            MetRecord(
                timestamp=FIXTURE_START + FIXTURE_CADENCE * i,
                field_flags=flags,
                **{name: float(columns[name][i]) for name in MET_FIELDS},
            )
            for i in range(n_rows)
        )
        logger.info("Generated synthetic series of %d rows (seed %d)", n_rows, seed)
        return SeriesDataset(station_id="synthetic", cadence=FIXTURE_CADENCE, records=records)
