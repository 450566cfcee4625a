import json
from pathlib import Path
from typing import Sequence, Union

import numpy as np
import pandas as pd

from windcast.configuration.monitor import get_logger
from windcast.models.mod_metrics import REPORT_FIELDS, MetricReport
from windcast.validators.val_errors import DataError

logger = get_logger(__name__)

# Targets at or below this magnitude are left out of MAPE.
MAPE_ZERO_TOLERANCE = 1e-9


class MetricsService:
    @staticmethod
    def evaluate(y_true: Sequence[float], y_pred: Sequence[float]) -> MetricReport:
        """
        MAE, RMSE, MAPE, SMAPE and R2 of a forecast.

        MAPE skips near-zero targets and reports how many it skipped. SMAPE uses
        the mean of |y| and |y_hat| as denominator, with 0/0 taken as 0. R2 is
        None when the targets are constant.
        """
        y_true = np.asarray(y_true, dtype=float).reshape(-1)
        y_pred = np.asarray(y_pred, dtype=float).reshape(-1)
        if y_true.size != y_pred.size:
            raise DataError(
                f"length mismatch: {y_true.size} targets vs {y_pred.size} predictions", code="length_mismatch"
            )
        if y_true.size == 0:
            raise DataError("cannot evaluate an empty forecast", code="insufficient_data")
        if not (np.all(np.isfinite(y_true)) and np.all(np.isfinite(y_pred))):
            raise DataError("targets and predictions must be finite", code="non_finite")

        error = y_pred - y_true
        abs_error = np.abs(error)
        mae = float(abs_error.mean())
        rmse = float(np.sqrt(np.mean(error ** 2)))

        usable = np.abs(y_true) > MAPE_ZERO_TOLERANCE
        excluded = int(y_true.size - usable.sum())
        mape = float(np.mean(abs_error[usable] / np.abs(y_true[usable])) * 100.0) if usable.any() else None

        denominator = (np.abs(y_true) + np.abs(y_pred)) / 2.0
        ratio = np.divide(abs_error, denominator, out=np.zeros_like(abs_error), where=denominator > 0)
        smape = float(ratio.mean() * 100.0)

        ss_tot = float(np.sum((y_true - y_true.mean()) ** 2))
        if ss_tot == 0.0:
            logger.warning("Constant targets; R2 is undefined")
            r2 = None
        else:
            r2 = 1.0 - float(np.sum(error ** 2)) / ss_tot

        return MetricReport(
            n=int(y_true.size), mae=mae, rmse=rmse, mape=mape, mape_excluded=excluded, smape=smape, r2=r2
        )

    @staticmethod
    def report_frame(reports: Sequence[MetricReport]) -> pd.DataFrame:
        return pd.DataFrame([report.as_row() for report in reports], columns=list(REPORT_FIELDS))

    @staticmethod
    def write_report(report: MetricReport, path: Union[str, Path]) -> None:
        row = {key: (round(value, 6) if isinstance(value, float) else value) for key, value in report.as_row().items()}
        Path(path).write_text(json.dumps(row, indent=2) + "\n", encoding="utf-8")
