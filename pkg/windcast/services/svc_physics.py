import json
import math
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from pathlib import Path
from typing import Any, Dict, Union

import numpy as np
from pydantic import ValidationError

from windcast.configuration.monitor import get_logger
from windcast.models.mod_turbine import AnemometerBands, ConversionStats, TurbineSpec
from windcast.validators.val_errors import DataError, NumericError, UsageError
from windcast.validators.val_turbine import TurbineValidator

logger = get_logger(__name__)

ArrayLike = Union[float, np.ndarray]

# Operating bands by hub-height speed, in curve order.
BANDS = ("below_cut_in", "partial_load", "rated", "cut_out")


def _scalar_or_array(values: np.ndarray) -> ArrayLike:
    return float(values) if values.ndim == 0 else values


class PhysicsService:
    @staticmethod
    def log_ratio(h1: float, h2: float, z0: float) -> float:
        """ln(h2/z0) / ln(h1/z0); both heights must lie above the roughness length."""
        TurbineValidator.validate_height(h1, z0)
        TurbineValidator.validate_height(h2, z0)
        return math.log(h2 / z0) / math.log(h1 / z0)

    @staticmethod
    def extrapolate_speed(v1: ArrayLike, h1: float, h2: float, z0: float) -> ArrayLike:
        """Logarithmic wind profile: v2 = v1 * ln(h2/z0) / ln(h1/z0)."""
        speeds = np.asarray(v1, dtype=float)
        if np.any(speeds < 0):
            raise NumericError("wind speed must be non-negative", code="domain_error")
        TurbineValidator.validate_height(h1, z0)
        TurbineValidator.validate_height(h2, z0)
        if h1 == h2:
            return _scalar_or_array(speeds.copy())
        return _scalar_or_array(speeds * PhysicsService.log_ratio(h1, h2, z0))

    @staticmethod
    def hub_ratio(spec: TurbineSpec) -> float:
        return PhysicsService.log_ratio(spec.anemometer_height, spec.hub_height, spec.roughness_length)

    @staticmethod
    def to_hub(v_anemometer: ArrayLike, spec: TurbineSpec) -> ArrayLike:
        return PhysicsService.extrapolate_speed(
            v_anemometer, spec.anemometer_height, spec.hub_height, spec.roughness_length
        )

    @staticmethod
    def derive_cp(spec: TurbineSpec) -> float:
        """cp that makes the power curve continuous at rated speed."""
        cp = spec.rated_power / (0.5 * spec.air_density * spec.swept_area * spec.rated_speed ** 3)
        TurbineValidator.validate_cp(cp)
        return cp

    @staticmethod
    def cp_of(spec: TurbineSpec) -> float:
        return spec.cp if spec.cp is not None else PhysicsService.derive_cp(spec)

    @staticmethod
    def unclipped_power(v_hub: ArrayLike, spec: TurbineSpec) -> ArrayLike:
        """Available power 0.5*rho*A*v^3*cp with no operating limits, in W."""
        speeds = np.asarray(v_hub, dtype=float)
        factor = 0.5 * spec.air_density * spec.swept_area * PhysicsService.cp_of(spec)
        return _scalar_or_array(factor * speeds ** 3)

    @staticmethod
    def power_from_speed(v_hub: ArrayLike, spec: TurbineSpec) -> ArrayLike:
        """
        Banded power curve in W:
        0 below cut-in, 0.5*rho*A*v^3*cp up to rated speed, rated power up to
        cut-out, 0 from cut-out on.
        """
        speeds = np.asarray(v_hub, dtype=float)
        if np.any(speeds < 0):
            raise NumericError("wind speed must be non-negative", code="domain_error")
        partial = np.asarray(PhysicsService.unclipped_power(speeds, spec))
        power = np.select(
            [speeds < spec.cut_in, speeds < spec.rated_speed, speeds < spec.cut_out],
            [0.0, np.minimum(partial, spec.rated_power), spec.rated_power],
            default=0.0,
        )
        return _scalar_or_array(power)

    @staticmethod
    def speed_band_at_anemometer(spec: TurbineSpec) -> AnemometerBands:
        """Hub-height cut-in, rated and cut-out speeds mapped down to the anemometer."""
        ratio = PhysicsService.hub_ratio(spec)
        return AnemometerBands(
            start=spec.cut_in / ratio,
            rated=spec.rated_speed / ratio,
            cutoff=spec.cut_out / ratio,
        )

    @staticmethod
    def band_index(v_hub: ArrayLike, spec: TurbineSpec) -> np.ndarray:
        speeds = np.asarray(v_hub, dtype=float)
        return np.searchsorted([spec.cut_in, spec.rated_speed, spec.cut_out], speeds, side="right")

    @staticmethod
    def band_of(v_hub: float, spec: TurbineSpec) -> str:
        return BANDS[int(PhysicsService.band_index(v_hub, spec))]

    @staticmethod
    def conversion_fraction(speeds_at_anemometer: np.ndarray, spec: TurbineSpec) -> ConversionStats:
        """
        Banded energy over unclipped cp energy for a speed series measured at the
        anemometer, with the share of time spent in each operating band.
        """
        speeds = np.asarray(speeds_at_anemometer, dtype=float).reshape(-1)
        if speeds.size == 0:
            raise DataError("conversion fraction needs a non-empty speed series", code="insufficient_data")
        hub = np.asarray(PhysicsService.to_hub(speeds, spec))
        produced = float(np.sum(PhysicsService.power_from_speed(hub, spec)))
        available = float(np.sum(PhysicsService.unclipped_power(hub, spec)))
        counts = np.bincount(PhysicsService.band_index(hub, spec), minlength=len(BANDS))
        band_fractions = {band: float(count) / speeds.size for band, count in zip(BANDS, counts)}
        if available == 0.0:
            logger.warning("All speeds are zero; conversion fraction set to 0")
            return ConversionStats(fraction=0.0, degenerate=True, sample_count=speeds.size, band_fractions=band_fractions)
        return ConversionStats(
            fraction=produced / available,
            sample_count=speeds.size,
            band_fractions=band_fractions,
        )

    @staticmethod
    def convert_reading(speed: float, height: float, spec: TurbineSpec) -> Dict[str, Any]:
        """A single measured speed at some height as hub speed, power and band."""
        hub = PhysicsService.extrapolate_speed(speed, height, spec.hub_height, spec.roughness_length)
        power = PhysicsService.power_from_speed(hub, spec)
        return {
            "speed": speed,
            "height": height,
            "hub_height": spec.hub_height,
            "hub_speed": hub,
            "power_w": power,
            "power_mw": power / 1e6,
            "band": PhysicsService.band_of(hub, spec),
        }

    @staticmethod
    def load_turbine(path: Union[str, Path]) -> TurbineSpec:
        """Read a TurbineSpec from a JSON or TOML file; missing keys keep their defaults."""
        path = Path(path)
        try:
            text = path.read_text(encoding="utf-8")
        except OSError as exc:
            raise UsageError(f"cannot read turbine config {path}: {exc}", code="invalid_config") from exc
        try:
            data = tomllib.loads(text) if path.suffix.lower() == ".toml" else json.loads(text)
        except (tomllib.TOMLDecodeError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot parse turbine config {path}: {exc}", code="invalid_config") from exc
        data = data.get("turbine", data)
        try:
            spec = TurbineSpec.model_validate(data)
        except ValidationError as exc:
            raise UsageError(f"invalid turbine config {path}: {exc.errors()[0]['msg']}", code="invalid_config") from exc
        PhysicsService.cp_of(spec)
        return spec
