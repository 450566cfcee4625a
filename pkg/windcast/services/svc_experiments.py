import hashlib
import json
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple, TypeVar, Union

import numpy as np
import pandas as pd
from pydantic import ValidationError

from windcast.configuration.monitor import get_logger
from windcast.models.mod_experiment import (
    CaseFeature,
    CaseResult,
    CaseSpec,
    ComparisonRow,
    ExperimentConfig,
    ImprovementStat,
    SweepCell,
    SweepResult,
)
from windcast.models.mod_metrics import REPORT_FIELDS, MetricReport
from windcast.models.mod_model import FCNNKind, ModelKind, TrainConfig
from windcast.models.mod_series import SeriesDataset
from windcast.models.mod_turbine import TurbineSpec
from windcast.models.mod_window import STEP_MINUTES, WindowedSplit, WindowSpec
from windcast.services.svc_metrics import MetricsService
from windcast.services.svc_models import ModelService
from windcast.services.svc_physics import PhysicsService
from windcast.services.svc_windowing import WindowingService
from windcast.validators.val_errors import DataError, NumericError, UsageError, WindcastError
from windcast.validators.val_window import WindowValidator

logger = get_logger(__name__)

T = TypeVar("T")

SELECTED_FEATURES = ("WSPD", "GST", "PRES", "ATMP", "WTMP")
SWEEP_PAST_HOURS = (1, 3, 6, 12, 24)
SWEEP_HORIZON_MINUTES = (10, 30, 60, 180, 360)
PERSISTENCE_LABEL = "persistence"

_MET = (CaseFeature.PRES, CaseFeature.ATMP, CaseFeature.WTMP)


def _rounded(value: Optional[float], precision: int = 6) -> Optional[float]:
    return None if value is None else float(f"{value:.{precision}f}")


class ExperimentService:
    @staticmethod
    def build_case_frame(source: Union[SeriesDataset, pd.DataFrame], turbine: TurbineSpec) -> pd.DataFrame:
        """
        Base series plus the derived columns the cases draw on. Speeds and gusts
        at hub height use the same log-profile constant; POWER is the power
        curve applied to the extrapolated anemometer speed.
        """
        frame = source.to_frame() if isinstance(source, SeriesDataset) else source
        frame = frame.reset_index(drop=True)
        for name in ("WSPD", "GST", "PRES", "ATMP", "WTMP"):
            if name not in frame.columns:
                raise DataError(f"column {name} is required to build the case columns", code="missing_columns")
            WindowValidator.validate_finite(frame[name].to_numpy(dtype=float), name)
        wspd = frame["WSPD"].to_numpy(dtype=float)
        gst = frame["GST"].to_numpy(dtype=float)
        hub_wspd = PhysicsService.to_hub(wspd, turbine)
        return pd.DataFrame(
            {
                CaseFeature.WSPD_LOW.value: wspd,
                CaseFeature.WSPD_HUB.value: hub_wspd,
                CaseFeature.GST_LOW.value: gst,
                CaseFeature.GST_HUB.value: PhysicsService.to_hub(gst, turbine),
                CaseFeature.PRES.value: frame["PRES"].to_numpy(dtype=float),
                CaseFeature.ATMP.value: frame["ATMP"].to_numpy(dtype=float),
                CaseFeature.WTMP.value: frame["WTMP"].to_numpy(dtype=float),
                CaseFeature.POWER.value: PhysicsService.power_from_speed(hub_wspd, turbine),
            }
        )

    @staticmethod
    def enumerate_cases() -> List[CaseSpec]:
        """
        The nine feature-combination cases. Mode 1 forecasts a column from its
        own history, mode 2 forecasts power from power and speeds, mode 3 uses
        the selected meteorological features. Cases 1/2, 4/5 and 7/8 differ only
        by the height of the wind columns and share a seed group.
        """
        low, hub, power = CaseFeature.WSPD_LOW, CaseFeature.WSPD_HUB, CaseFeature.POWER
        rows = [
            (1, 1, (low,), low, 1),
            (2, 1, (hub,), hub, 1),
            (3, 1, (power,), power, 2),
            (4, 2, (power, low), power, 3),
            (5, 2, (power, hub), power, 3),
            (6, 2, (power, low, hub), power, 4),
            (7, 3, (low, CaseFeature.GST_LOW, *_MET), low, 5),
            (8, 3, (hub, CaseFeature.GST_HUB, *_MET), hub, 5),
            (9, 3, (low, CaseFeature.GST_LOW, *_MET, power), power, 6),
        ]
        return [
            CaseSpec(id=case_id, mode=mode, input_features=inputs, target=target, seed_group=group)
            for case_id, mode, inputs, target, group in rows
        ]

    @staticmethod
    def case_by_id(case_id: int) -> CaseSpec:
        for case in ExperimentService.enumerate_cases():
            if case.id == case_id:
                return case
        raise UsageError(f"unknown case {case_id}; cases are numbered 1-9", code="unknown_case")

    @staticmethod
    def derive_seed(master_seed: int, kind: str, group: int) -> int:
        """
        Per-cell seed: the first 4 bytes of blake2b("<master>:<kind>:<group>"),
        read big-endian. Stable across processes and platforms.
        """
        digest = hashlib.blake2b(f"{master_seed}:{kind}:{group}".encode("utf-8"), digest_size=8).digest()
        return int.from_bytes(digest[:4], "big")

    @staticmethod
    def _power_space(values: np.ndarray, target: CaseFeature, turbine: TurbineSpec) -> np.ndarray:
        # Forecast speeds can dip below zero; the power curve only takes non-negative speeds.
        speeds = np.clip(values, 0.0, None)
        if target == CaseFeature.WSPD_LOW:
            speeds = PhysicsService.to_hub(speeds, turbine)
        return np.asarray(PhysicsService.power_from_speed(speeds, turbine))

    @staticmethod
    def run_case(
        source: Union[SeriesDataset, pd.DataFrame],
        case: CaseSpec,
        kind: ModelKind,
        config: ExperimentConfig = ExperimentConfig(),
        seed: Optional[int] = None,
    ) -> CaseResult:
        """
        Train one model on one case and report it on the test split, natively
        and in power space. A DataFrame source is taken to be a case frame.
        """
        started = time.perf_counter()
        frame = (
            ExperimentService.build_case_frame(source, config.turbine)
            if isinstance(source, SeriesDataset)
            else source
        )
        if seed is None:
            seed = ExperimentService.derive_seed(config.master_seed, kind.kind, case.seed_group)
        try:
            spec = WindowSpec(
                past_steps=config.past_steps,
                horizon_steps=config.horizon_steps,
                input_features=tuple(f.value for f in case.input_features),
                target_feature=case.target.value,
            )
            windowed = WindowingService.build_windowed_set(frame, spec, allow_constant=True)
            model = ModelService.fit(windowed, kind, config.train_config.model_copy(update={"seed": seed}))
            predicted = ModelService.predict(model, windowed.test.inputs)
            truth = windowed.test.targets
            native = MetricsService.evaluate(truth, predicted)
            if case.predicts_speed:
                power = MetricsService.evaluate(
                    ExperimentService._power_space(truth, case.target, config.turbine),
                    ExperimentService._power_space(predicted, case.target, config.turbine),
                )
            else:
                power = native
        except WindcastError as exc:
            raise exc.with_context(f"case {case.id}, {kind.kind}")
        except ValidationError as exc:
            raise UsageError(
                f"invalid configuration: {exc.errors()[0]['msg']}", code="invalid_config"
            ).with_context(f"case {case.id}, {kind.kind}") from exc
        wall_time = time.perf_counter() - started
        logger.info("%s %s done in %.2fs", case.label, kind.kind, wall_time)
        return CaseResult(
            case_id=case.id,
            mode=case.mode,
            kind=kind.kind,
            seed=seed,
            native=native,
            power=power,
            model=model,
            wall_time=wall_time,
        )

    @staticmethod
    def _map_cells(function: Callable[[Any], T], cells: Sequence[Any], max_workers: int) -> List[T]:
        """Run cells, possibly on a thread pool; results keep the cell order."""
        if max_workers > 1:
            with ThreadPoolExecutor(max_workers=max_workers) as pool:
                return list(pool.map(function, cells))
        return [function(cell) for cell in cells]

    @staticmethod
    def run_matrix(
        source: Union[SeriesDataset, pd.DataFrame],
        kinds: Sequence[ModelKind],
        cases: Optional[Sequence[CaseSpec]] = None,
        config: ExperimentConfig = ExperimentConfig(),
    ) -> List[CaseResult]:
        """Every (case, kind) cell, ordered by case then kind. A failing cell is recorded and skipped."""
        cases = list(cases) if cases is not None else ExperimentService.enumerate_cases()
        frame = (
            ExperimentService.build_case_frame(source, config.turbine)
            if isinstance(source, SeriesDataset)
            else source
        )
        cells = [(case, kind) for case in cases for kind in kinds]
        logger.info("Running %d cells (%d cases x %d kinds)", len(cells), len(cases), len(kinds))

        def run(cell: Tuple[CaseSpec, ModelKind]) -> CaseResult:
            case, kind = cell
            seed = ExperimentService.derive_seed(config.master_seed, kind.kind, case.seed_group)
            try:
                return ExperimentService.run_case(frame, case, kind, config, seed=seed)
            except WindcastError as exc:
                logger.warning("%s %s failed: %s", case.label, kind.kind, exc)
                return CaseResult(
                    case_id=case.id, mode=case.mode, kind=kind.kind, seed=seed, error=f"{exc.code}: {exc}"
                )

        return ExperimentService._map_cells(run, cells, config.max_workers)

    @staticmethod
    def persistence_forecast(split: WindowedSplit, spec: WindowSpec) -> np.ndarray:
        """y_hat(t+H) = y(t): the last input step of the target column."""
        if spec.target_feature not in spec.input_features:
            raise DataError(
                f"persistence needs the target {spec.target_feature} among the inputs", code="missing_columns"
            )
        column = spec.input_features.index(spec.target_feature)
        return split.inputs[:, -1, column].copy()

    @staticmethod
    def window_sweep(
        source: Union[SeriesDataset, pd.DataFrame],
        past_hours: Sequence[float] = SWEEP_PAST_HOURS,
        horizon_minutes: Sequence[int] = SWEEP_HORIZON_MINUTES,
        kind: ModelKind = FCNNKind(),
        config: ExperimentConfig = ExperimentConfig(),
        input_features: Sequence[str] = SELECTED_FEATURES,
        target: str = "WSPD",
    ) -> SweepResult:
        """
        Validation-split metrics over the (past, horizon) grid. Pairs with a
        horizon longer than the past window are not part of the grid; cells the
        series is too short for are kept and marked skipped.
        """
        frame = source.to_frame() if isinstance(source, SeriesDataset) else source
        pairs = [
            (int(round(hours * 60 / STEP_MINUTES)), int(minutes // STEP_MINUTES))
            for hours in past_hours
            for minutes in horizon_minutes
        ]
        pairs = [(past, horizon) for past, horizon in pairs if horizon >= 1 and past >= horizon]
        logger.info("Sweeping %d window cells with %s", len(pairs), kind.kind)

        def run(pair: Tuple[int, int]) -> SweepCell:
            past, horizon = pair
            spec = WindowSpec(
                past_steps=past, horizon_steps=horizon, input_features=tuple(input_features), target_feature=target
            )
            try:
                windowed = WindowingService.build_windowed_set(frame, spec)
            except DataError as exc:
                if exc.code != "series_too_short":
                    raise
                logger.warning("Skipping P=%d H=%d: %s", past, horizon, exc)
                return SweepCell(past_steps=past, horizon_steps=horizon, skipped=True, reason=str(exc))
            seed = ExperimentService.derive_seed(config.master_seed, kind.kind, past * 1000 + horizon)
            model = ModelService.fit(windowed, kind, config.train_config.model_copy(update={"seed": seed}))
            predicted = ModelService.predict(model, windowed.val.inputs)
            return SweepCell(
                past_steps=past,
                horizon_steps=horizon,
                report=MetricsService.evaluate(windowed.val.targets, predicted),
            )

        cells = ExperimentService._map_cells(run, pairs, config.max_workers)
        return SweepResult(kind=kind.kind, target=target, cells=cells)

    @staticmethod
    def compare_models(
        source: Union[SeriesDataset, pd.DataFrame],
        kinds: Sequence[ModelKind],
        spec: Optional[WindowSpec] = None,
        train_config: TrainConfig = TrainConfig(),
    ) -> List[ComparisonRow]:
        """Test-split reports per model kind, with the persistence baseline first."""
        spec = spec or WindowSpec(input_features=SELECTED_FEATURES, target_feature="WSPD")
        windowed = WindowingService.build_windowed_set(source, spec)
        truth = windowed.test.targets
        rows = [
            ComparisonRow(
                label=PERSISTENCE_LABEL,
                report=MetricsService.evaluate(truth, ExperimentService.persistence_forecast(windowed.test, spec)),
            )
        ]
        for kind in kinds:
            model = ModelService.fit(windowed, kind, train_config)
            rows.append(
                ComparisonRow(
                    label=kind.kind, report=MetricsService.evaluate(truth, ModelService.predict(model, windowed.test.inputs))
                )
            )
        return rows

    @staticmethod
    def improvement_stat(results: Sequence[CaseResult]) -> ImprovementStat:
        """
        Percent by which speed-output cases beat power-output cases on mean
        power-space RMSE: 100 * (E_power - E_speed) / E_power, per kind and pooled.
        """
        cases = {case.id: case for case in ExperimentService.enumerate_cases()}
        speed: Dict[str, List[float]] = {}
        power: Dict[str, List[float]] = {}
        for result in results:
            if not result.ok:
                continue
            group = speed if cases[result.case_id].predicts_speed else power
            group.setdefault(result.kind, []).append(result.power.rmse)

        kinds = [kind for kind in speed if kind in power]
        if not kinds:
            raise DataError(
                "improvement needs speed-output and power-output results for the same model kind",
                code="insufficient_data",
            )

        def percent(e_power: float, e_speed: float) -> float:
            if e_power == 0.0:
                raise NumericError("power-output cases have zero RMSE; improvement is undefined", code="zero_baseline")
            return 100.0 * (e_power - e_speed) / e_power

        speed_rmse = {kind: float(np.mean(speed[kind])) for kind in kinds}
        power_rmse = {kind: float(np.mean(power[kind])) for kind in kinds}
        per_kind = {kind: percent(power_rmse[kind], speed_rmse[kind]) for kind in kinds}
        pooled = percent(
            float(np.mean([v for kind in kinds for v in power[kind]])),
            float(np.mean([v for kind in kinds for v in speed[kind]])),
        )
        return ImprovementStat(
            per_kind=per_kind, pooled=pooled, speed_output_rmse=speed_rmse, power_output_rmse=power_rmse
        )

    # emitters

    @staticmethod
    def results_long_frame(results: Sequence[CaseResult], precision: int = 6) -> pd.DataFrame:
        """One row per (case, kind, space, metric); failed cells contribute an error row."""
        rows = []
        for result in results:
            base = {"case": result.case_id, "mode": result.mode, "kind": result.kind}
            if not result.ok:
                rows.append({**base, "space": "", "metric": "error", "value": result.error})
                continue
            for space, report in (("native", result.native), ("power", result.power)):
                for metric in REPORT_FIELDS:
                    value = getattr(report, metric)
                    if isinstance(value, float):
                        value = _rounded(value, precision)
                    rows.append({**base, "space": space, "metric": metric, "value": value})
        return pd.DataFrame(rows, columns=["case", "mode", "kind", "space", "metric", "value"])

    @staticmethod
    def _report_document(report: MetricReport, precision: int) -> Dict[str, Any]:
        return {
            name: (_rounded(value, precision) if isinstance(value, float) else value)
            for name, value in report.as_row().items()
        }

    @staticmethod
    def results_document(
        results: Sequence[CaseResult],
        config: ExperimentConfig,
        improvement: Optional[ImprovementStat] = None,
        precision: int = 6,
    ) -> Dict[str, Any]:
        entries = []
        for result in results:
            entry: Dict[str, Any] = {"case": result.case_id, "mode": result.mode, "kind": result.kind, "seed": result.seed}
            if result.ok:
                entry["native"] = ExperimentService._report_document(result.native, precision)
                entry["power"] = ExperimentService._report_document(result.power, precision)
            else:
                entry["error"] = result.error
            entries.append(entry)
        document: Dict[str, Any] = {
            "master_seed": config.master_seed,
            "past_steps": config.past_steps,
            "horizon_steps": config.horizon_steps,
            "results": entries,
        }
        if improvement is not None:
            document["improvement"] = {
                "per_kind": {k: _rounded(v, precision) for k, v in improvement.per_kind.items()},
                "pooled": _rounded(improvement.pooled, precision),
            }
        return document

    @staticmethod
    def write_results(
        results: Sequence[CaseResult],
        config: ExperimentConfig,
        csv_path: Union[str, Path],
        json_path: Union[str, Path],
        improvement: Optional[ImprovementStat] = None,
        precision: int = 6,
    ) -> None:
        ExperimentService.results_long_frame(results, precision).to_csv(csv_path, index=False, lineterminator="\n")
        document = ExperimentService.results_document(results, config, improvement, precision)
        Path(json_path).write_text(json.dumps(document, indent=2, sort_keys=True) + "\n", encoding="utf-8")

    @staticmethod
    def sweep_frame(sweep: SweepResult, precision: int = 6) -> pd.DataFrame:
        rows = []
        for cell in sweep.cells:
            row: Dict[str, Any] = {
                "past_steps": cell.past_steps,
                "horizon_steps": cell.horizon_steps,
                "past_minutes": cell.past_steps * STEP_MINUTES,
                "horizon_minutes": cell.horizon_steps * STEP_MINUTES,
                "skipped": cell.skipped,
            }
            for metric in REPORT_FIELDS:
                value = getattr(cell.report, metric) if cell.report else None
                row[metric] = _rounded(value, precision) if isinstance(value, float) else value
            rows.append(row)
        return pd.DataFrame(rows)

    @staticmethod
    def comparison_frame(rows: Sequence[ComparisonRow], precision: int = 6) -> pd.DataFrame:
        return pd.DataFrame(
            [{"model": row.label, **ExperimentService._report_document(row.report, precision)} for row in rows]
        )
