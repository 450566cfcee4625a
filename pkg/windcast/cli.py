"""
Command-line surface of the toolkit.

Every subcommand prints its table to stdout and writes its files under the
output directory. Errors go to stderr as `error[<code>]: <message>` and exit
with 1 (usage), 2 (data) or 3 (numeric).
"""
import json
from pathlib import Path
from typing import List, Optional, Tuple

import click
import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, ValidationError

from windcast import __version__
from windcast.configuration.config import Settings, get_settings
from windcast.configuration.monitor import configure_logging, get_logger
from windcast.models.mod_experiment import ExperimentConfig
from windcast.models.mod_features import CANDIDATE_FEATURES, ForestConfig, SelectionPolicy
from windcast.models.mod_model import KIND_NAMES, ModelKind, TrainConfig, kind_from_name
from windcast.models.mod_report import RADAR_AXES
from windcast.models.mod_turbine import TurbineSpec
from windcast.models.mod_window import WindowSpec
from windcast.services.svc_experiments import SELECTED_FEATURES, ExperimentService
from windcast.services.svc_features import FeatureService
from windcast.services.svc_fixtures import FixtureService
from windcast.services.svc_ingest import IngestService
from windcast.services.svc_metrics import MetricsService
from windcast.services.svc_models import ModelService
from windcast.services.svc_physics import PhysicsService
from windcast.services.svc_report import ReportService
from windcast.services.svc_windowing import WindowingService
from windcast.validators.val_errors import UsageError, WindcastError
from windcast.validators.val_window import WindowValidator

logger = get_logger(__name__)

# Distance to a band edge, in m/s at hub height, under which convert prints a note.
BOUNDARY_NOTE_MARGIN = 0.05


class CliError(click.ClickException):
    """A WindcastError on its way out of the process."""

    def __init__(self, error: WindcastError):
        super().__init__(str(error))
        self.error = error
        self.exit_code = error.exit_code

    def show(self, file=None) -> None:
        click.echo(f"error[{self.error.code}]: {self.error}", err=True)


def _as_cli_error(exc: Exception) -> click.ClickException:
    if isinstance(exc, WindcastError):
        return CliError(exc)
    if isinstance(exc, ValidationError):
        first = exc.errors()[0]
        return CliError(UsageError(first["msg"], code="invalid_argument"))
    raise exc


class WindcastCommand(click.Command):
    def make_context(self, info_name, args, parent=None, **extra):
        try:
            return super().make_context(info_name, args, parent=parent, **extra)
        except click.UsageError as e:
            e.exit_code = 1
            raise
        except (WindcastError, ValidationError) as e:
            raise _as_cli_error(e)

    def invoke(self, ctx):
        try:
            return super().invoke(ctx)
        except (WindcastError, ValidationError) as e:
            raise _as_cli_error(e)


class WindcastGroup(click.Group):
    command_class = WindcastCommand
    group_class = type

    def make_context(self, info_name, args, parent=None, **extra):
        try:
            return super().make_context(info_name, args, parent=parent, **extra)
        except click.UsageError as e:
            e.exit_code = 1
            raise
        except (WindcastError, ValidationError) as e:
            raise _as_cli_error(e)

    def resolve_command(self, ctx, args):
        try:
            return super().resolve_command(ctx, args)
        except click.UsageError as e:
            e.exit_code = 1
            raise

    def invoke(self, ctx):
        try:
            return super().invoke(ctx)
        except (WindcastError, ValidationError) as e:
            raise _as_cli_error(e)


class CliState(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    settings: Settings
    turbine: TurbineSpec
    window: Tuple[int, int]
    out_dir: Path
    seed: int
    max_epochs: Optional[int] = None

    def output(self, name: str) -> Path:
        self.out_dir.mkdir(parents=True, exist_ok=True)
        return self.out_dir / name

    def train_config(self, seed: Optional[int] = None) -> TrainConfig:
        update = {"seed": self.seed if seed is None else seed}
        if self.max_epochs is not None:
            update["max_epochs"] = self.max_epochs
        return TrainConfig().model_copy(update=update)

    def experiment_config(self, seed: Optional[int] = None) -> ExperimentConfig:
        return ExperimentConfig(
            master_seed=self.seed if seed is None else seed,
            past_steps=self.window[0],
            horizon_steps=self.window[1],
            train_config=self.train_config(),
            turbine=self.turbine,
            max_workers=self.settings.max_workers,
        )


def _parse_window(ctx, param, value: Optional[str]) -> Optional[Tuple[int, int]]:
    if value is None:
        return None
    try:
        past, horizon = (int(part) for part in value.split(","))
    except ValueError:
        raise UsageError(f"--window expects P,H as two integers, got {value!r}", code="invalid_window")
    WindowValidator.validate_window(past, horizon)
    return past, horizon


def _parse_kinds(value: str) -> List[ModelKind]:
    names = [name.strip().lower() for name in value.split(",") if name.strip()]
    unknown = [name for name in names if name not in KIND_NAMES]
    if unknown or not names:
        raise UsageError(
            f"unknown model kind(s): {', '.join(unknown) or value!r}; choose from {', '.join(KIND_NAMES)}",
            code="unknown_model",
        )
    return [kind_from_name(name) for name in names]


def _parse_names(value: str) -> Tuple[str, ...]:
    return tuple(name.strip().upper() for name in value.split(",") if name.strip())


@click.group(cls=WindcastGroup)
@click.version_option(__version__, prog_name="windcast")
@click.option("--turbine", "turbine_path", type=click.Path(dir_okay=False, path_type=Path), help="Turbine JSON/TOML")
@click.option("--window", callback=_parse_window, help="Past and horizon steps as P,H (default 18,1)")
@click.option("--out-dir", type=click.Path(file_okay=False, path_type=Path), help="Output directory")
@click.option("--seed", type=int, help="Master seed")
@click.option("--log-level", help="DEBUG, INFO, WARNING or ERROR")
@click.option("--max-epochs", type=click.IntRange(min=1), help="Cap on training epochs")
@click.pass_context
def cli(ctx, turbine_path, window, out_dir, seed, log_level, max_epochs):
    """Offshore wind speed and power forecasting toolkit."""
    settings = get_settings()
    configure_logging(log_level or settings.log_level)
    turbine_path = turbine_path or settings.turbine_config
    turbine = PhysicsService.load_turbine(turbine_path) if turbine_path else TurbineSpec()
    ctx.obj = CliState(
        settings=settings,
        turbine=turbine,
        window=window or (18, 1),
        out_dir=out_dir or settings.output_dir,
        seed=settings.master_seed if seed is None else seed,
        max_epochs=max_epochs,
    )


@cli.command()
@click.argument("source", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.option("--out", type=click.Path(dir_okay=False, path_type=Path), help="Repaired series CSV")
@click.pass_obj
def ingest(state: CliState, source: Path, out: Optional[Path]):
    """Parse and repair a station file; print its summary."""
    dataset = IngestService.load_dataset(source)
    out = out or state.output(f"{source.stem}_repaired.csv")
    IngestService.write_series_csv(dataset, out)
    IngestService.write_repair_log(dataset, out.with_suffix(".repair.jsonl"))
    summary = IngestService.summarize(dataset)
    click.echo(f"station: {summary.station_id}")
    click.echo(f"rows: {summary.row_count}")
    click.echo(f"span: {summary.first_timestamp.isoformat()} .. {summary.last_timestamp.isoformat()}")
    click.echo(f"inserted_rows: {summary.inserted_rows}")
    click.echo(f"row_imputed_fraction: {summary.row_imputed_fraction:.6f}")
    click.echo(f"imputed_values: {summary.imputed_values}")
    click.echo(f"duplicates_dropped: {summary.duplicates_dropped}")
    fields = pd.DataFrame(
        [
            {"field": name, "missing": field.missing_fraction, "imputed": field.imputed_fraction}
            for name, field in summary.fields.items()
        ]
    )
    click.echo(ReportService.format_table(fields, state.settings.float_precision))


@cli.command()
@click.argument("source", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.option("--target", default="WSPD", show_default=True)
@click.option("--trees", type=click.IntRange(min=1), default=100, show_default=True)
@click.option("--seed", type=int, help="Forest seed (default: master seed)")
@click.pass_obj
def features(state: CliState, source: Path, target: str, trees: int, seed: Optional[int]):
    """Correlation matrix, forest importances and the resulting feature selection."""
    target = target.upper()
    precision = state.settings.float_precision
    dataset = IngestService.load_dataset(source)
    corr = FeatureService.pearson_matrix(dataset, CANDIDATE_FEATURES)
    X, y = FeatureService.forest_inputs(dataset, CANDIDATE_FEATURES, target=target)
    forest = FeatureService.fit_forest(
        X, y, ForestConfig(tree_count=trees), seed=state.seed if seed is None else seed, feature_names=CANDIDATE_FEATURES
    )
    importances = FeatureService.importance(forest)
    selection = FeatureService.select_features(corr, importances, SelectionPolicy(target=target))

    FeatureService.write_correlation(corr, state.output("correlation.csv"), state.output("correlation.json"))
    FeatureService.write_importance(importances, state.output("importance.csv"), state.output("importance.json"))

    click.echo("correlation")
    click.echo(FeatureService.correlation_frame(corr).to_string(float_format=lambda v: f"{v:.{precision}f}"))
    click.echo("\nimportance" + (" (degenerate: no splits)" if importances.degenerate else ""))
    click.echo(ReportService.format_table(FeatureService.importance_frame(importances), precision))
    click.echo(f"\nkept: {', '.join(selection.kept)}")
    for name, reason in selection.dropped.items():
        click.echo(f"dropped: {name} ({reason.value})")


@cli.command()
@click.argument("source", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.option("--model", "model_name", default="fcnn", show_default=True)
@click.option("--seed", type=int, help="Master seed for this sweep")
@click.pass_obj
def sweep(state: CliState, source: Path, model_name: str, seed: Optional[int]):
    """Validation metrics over the past-window and horizon grid."""
    (kind,) = _parse_kinds(model_name)
    dataset = IngestService.load_dataset(source)
    result = ExperimentService.window_sweep(dataset, kind=kind, config=state.experiment_config(seed))
    frame = ExperimentService.sweep_frame(result, state.settings.float_precision)
    frame.to_csv(state.output(f"sweep_{kind.kind}.csv"), index=False, lineterminator="\n")
    click.echo(ReportService.format_table(frame, state.settings.float_precision))


@cli.command()
@click.argument("source", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.option("--models", default="ridge,fcnn,gru", show_default=True)
@click.option("--cases", "case_ids", default=None, help="Comma-separated case ids (default: all nine)")
@click.option("--seed", type=int, help="Master seed for this run")
@click.pass_obj
def cases(state: CliState, source: Path, models: str, case_ids: Optional[str], seed: Optional[int]):
    """The nine-case matrix with power-space metrics, radar charts and the improvement statistic."""
    kinds = _parse_kinds(models)
    try:
        selected = (
            [ExperimentService.case_by_id(int(part)) for part in case_ids.split(",")]
            if case_ids
            else ExperimentService.enumerate_cases()
        )
    except ValueError:
        raise CliError(UsageError(f"--cases expects integers, got {case_ids!r}", code="invalid_argument"))
    config = state.experiment_config(seed)
    precision = state.settings.float_precision
    dataset = IngestService.load_dataset(source)
    results = ExperimentService.run_matrix(dataset, kinds, selected, config)

    improvement = None
    try:
        improvement = ExperimentService.improvement_stat(results)
    except WindcastError as e:
        logger.warning("Improvement statistic not computed: %s", e)
    ExperimentService.write_results(
        results, config, state.output("cases.csv"), state.output("cases.json"), improvement, precision
    )

    for kind in kinds:
        rows = [(f"Case{r.case_id}", r.power) for r in results if r.kind == kind.kind and r.ok]
        if len(rows) >= 2:
            chart = ReportService.normalize_for_radar(rows, RADAR_AXES, title=f"{kind.kind} power-space")
            ReportService.emit_svg(chart, state.output(f"radar_{kind.kind}.svg"), precision)

    table = pd.DataFrame(
        [
            {
                "case": r.case_id,
                "kind": r.kind,
                "rmse_power_w": r.power.rmse if r.ok else None,
                "r2_power": r.power.r2 if r.ok else None,
                "smape_power": r.power.smape if r.ok else None,
                "error": r.error or "",
            }
            for r in results
        ]
    )
    click.echo(ReportService.format_table(table, precision))
    if improvement is not None:
        for name, value in improvement.per_kind.items():
            click.echo(f"improvement[{name}]: {value:.{precision}f}%")
        click.echo(f"improvement[pooled]: {improvement.pooled:.{precision}f}%")


@cli.command()
@click.argument("source", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.option("--models", default="ridge,fcnn,gru", show_default=True)
@click.option("--features", "feature_list", default=",".join(SELECTED_FEATURES), show_default=True)
@click.option("--target", default="WSPD", show_default=True)
@click.pass_obj
def compare(state: CliState, source: Path, models: str, feature_list: str, target: str):
    """Test-split comparison of model kinds against persistence, with a radar chart."""
    kinds = _parse_kinds(models)
    precision = state.settings.float_precision
    spec = WindowSpec(
        past_steps=state.window[0],
        horizon_steps=state.window[1],
        input_features=_parse_names(feature_list),
        target_feature=target.upper(),
    )
    dataset = IngestService.load_dataset(source)
    rows = ExperimentService.compare_models(dataset, kinds, spec, state.train_config())
    frame = ExperimentService.comparison_frame(rows, precision)
    frame.to_csv(state.output("comparison.csv"), index=False, lineterminator="\n")
    chart = ReportService.normalize_for_radar([(row.label, row.report) for row in rows], RADAR_AXES, title="models")
    ReportService.emit_svg(chart, state.output("comparison.svg"), precision)
    click.echo(ReportService.format_table(frame, precision))


@cli.group(cls=WindcastGroup)
def physics():
    """Log-profile extrapolation and the turbine power curve."""


@physics.command()
@click.option("--speed", type=float, required=True, help="Measured speed in m/s")
@click.option("--height", type=float, default=3.8, show_default=True, help="Measurement height in m")
@click.pass_obj
def convert(state: CliState, speed: float, height: float):
    """Hub-height speed and power for one measured speed."""
    turbine = state.turbine
    reading = PhysicsService.convert_reading(speed, height, turbine)
    click.echo(f"hub_speed: {reading['hub_speed']:.6f} m/s at {turbine.hub_height:g} m")
    click.echo(f"power: {reading['power_w']:.6f} W ({reading['power_mw']:.6f} MW)")
    click.echo(f"band: {reading['band']}")
    for edge_name, edge in (("cut-in", turbine.cut_in), ("rated", turbine.rated_speed), ("cut-out", turbine.cut_out)):
        if abs(reading["hub_speed"] - edge) < BOUNDARY_NOTE_MARGIN:
            side = "below" if reading["hub_speed"] < edge else "at or above"
            click.echo(
                f"note: {side} the {edge_name} speed {edge:g} m/s "
                f"(rated power {turbine.rated_power / 1e6:g} MW)"
            )


@physics.command()
@click.pass_obj
def bands(state: CliState):
    """Cut-in, rated and cut-out speeds at the anemometer height."""
    turbine = state.turbine
    thresholds = PhysicsService.speed_band_at_anemometer(turbine)
    click.echo(f"ratio: {PhysicsService.hub_ratio(turbine):.6f}")
    click.echo(f"cp: {PhysicsService.cp_of(turbine):.6f}")
    for name, hub, low in (
        ("cut_in", turbine.cut_in, thresholds.start),
        ("rated", turbine.rated_speed, thresholds.rated),
        ("cut_out", turbine.cut_out, thresholds.cutoff),
    ):
        click.echo(f"{name}: {low:.6f} m/s at {turbine.anemometer_height:g} m <-> {hub:g} m/s at {turbine.hub_height:g} m")


@cli.command()
@click.argument("source", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.option("--model", "model_name", default="fcnn", show_default=True)
@click.option("--features", "feature_list", default=",".join(SELECTED_FEATURES), show_default=True)
@click.option("--target", default="WSPD", show_default=True)
@click.option("--model-file", type=click.Path(dir_okay=False, path_type=Path), help="Where to save the model")
@click.option("--seed", type=int, help="Training seed")
@click.pass_obj
def train(
    state: CliState,
    source: Path,
    model_name: str,
    feature_list: str,
    target: str,
    model_file: Optional[Path],
    seed: Optional[int],
):
    """Train one model, save it and print its test metrics."""
    (kind,) = _parse_kinds(model_name)
    spec = WindowSpec(
        past_steps=state.window[0],
        horizon_steps=state.window[1],
        input_features=_parse_names(feature_list),
        target_feature=target.upper(),
    )
    dataset = IngestService.load_dataset(source)
    windowed = WindowingService.build_windowed_set(dataset, spec)
    model = ModelService.fit(windowed, kind, state.train_config(seed))
    model_file = model_file or state.output(f"model_{kind.kind}.json")
    ModelService.save(model, model_file)
    report = MetricsService.evaluate(windowed.test.targets, ModelService.predict(model, windowed.test.inputs))
    click.echo(f"model: {model_file}")
    click.echo(f"best_epoch: {model.best_epoch}")
    click.echo(ReportService.format_table(MetricsService.report_frame([report]), state.settings.float_precision))


@cli.command()
@click.argument("source", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.option("--model-file", type=click.Path(exists=True, dir_okay=False, path_type=Path), required=True)
@click.option("--out", type=click.Path(dir_okay=False, path_type=Path), help="Predictions CSV")
@click.pass_obj
def predict(state: CliState, source: Path, model_file: Path, out: Optional[Path]):
    """Run a saved model over every window of a series."""
    model = ModelService.load(model_file)
    dataset = IngestService.load_dataset(source)
    frame = dataset.to_frame()
    windows = WindowingService.make_windows(frame.reset_index(drop=True), model.spec)
    predictions = ModelService.predict(model, windows.inputs) if len(windows) else np.empty(0)
    result = pd.DataFrame(
        {
            "timestamp": [frame.index[i].isoformat() for i in windows.t_index],
            "t_index": windows.t_index,
            "actual": windows.targets,
            "prediction": predictions,
        }
    )
    out = out or state.output(f"predictions_{model.kind_name}.csv")
    result.to_csv(out, index=False, lineterminator="\n", float_format=f"%.{state.settings.float_precision}f")
    click.echo(f"predictions: {out} ({len(result)} rows)")
    if len(result):
        report = MetricsService.evaluate(windows.targets, predictions)
        click.echo(ReportService.format_table(MetricsService.report_frame([report]), state.settings.float_precision))


@cli.command()
@click.option("--rows", type=click.IntRange(min=2), default=20000, show_default=True)
@click.option("--seed", type=int, help="Generator seed (default: master seed)")
@click.option("--out", type=click.Path(dir_okay=False, path_type=Path), help="Series CSV")
@click.pass_obj
def fixture(state: CliState, rows: int, seed: Optional[int], out: Optional[Path]):
    """Write a seeded synthetic buoy series."""
    seed = state.seed if seed is None else seed
    dataset = FixtureService.synthetic_series(rows, seed)
    out = out or state.output(f"synthetic_{rows}_{seed}.csv")
    IngestService.write_series_csv(dataset, out)
    click.echo(json.dumps({"rows": rows, "seed": seed, "path": str(out)}))


def main() -> None:
    cli(prog_name="windcast")
