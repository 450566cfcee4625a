import io
import json
from datetime import timedelta
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, TextIO, Tuple, Union

import numpy as np
import pandas as pd

from windcast.configuration.monitor import get_logger
from windcast.models.mod_series import (
    MET_FIELDS,
    VALUE_ACTIONS,
    FieldFlag,
    FieldSummary,
    IngestSummary,
    MetRecord,
    RepairEntry,
    SeriesDataset,
)
from windcast.validators.val_errors import DataError
from windcast.validators.val_ingest import IngestValidator

logger = get_logger(__name__)

DEFAULT_CADENCE = timedelta(minutes=10)

# Gaps up to this many consecutive slots are interpolated; longer ones are forward-filled.
MAX_INTERPOLATION_GAP = 6

# Standard meteorological layout used when a file carries no header line.
NDBC_COLUMNS = (
    "YY", "MM", "DD", "hh", "mm", "WDIR", "WSPD", "GST", "WVHT", "DPD",
    "APD", "MWD", "PRES", "ATMP", "WTMP", "DEWP", "VIS", "TIDE",
)

# Older archive files use different names for the same quantities.
COLUMN_ALIASES = {"WD": "WDIR", "SPD": "WSPD", "BAR": "PRES", "YYYY": "YY", "#YY": "YY"}

# Missing-value codes per field; the code width depends on the column.
SENTINELS: Dict[str, Tuple[float, ...]] = {
    "wdir": (999.0, 9999.0),
    "wspd": (99.0, 999.0),
    "gst": (99.0, 999.0),
    "pres": (9999.0,),
    "atmp": (99.0, 999.0),
    "wtmp": (99.0, 999.0),
    "dewp": (99.0, 999.0),
}

MISSING_TOKENS = ("MM", "", "N/A", "NaN", "nan")


class IngestService:
    @staticmethod
    def parse_ndbc(text_stream: Union[TextIO, str]) -> List[MetRecord]:
        """
        Parse NDBC standard-met text or an equivalent named-column CSV.

        Header lines start with '#' and are skipped; the first of them names the
        columns. Sentinel codes and 'MM' are flagged missing, unknown columns are
        ignored and a malformed line raises a DataError carrying its line number.
        """
        text = text_stream if isinstance(text_stream, str) else text_stream.read()
        lines = text.splitlines()
        content = [line for line in lines if line.strip() and not line.lstrip().startswith("#")]
        if not content:
            return []
        if "," in content[0]:
            return IngestService._parse_csv(text)
        return IngestService._parse_whitespace(lines)

    @staticmethod
    def _parse_whitespace(lines: Sequence[str]) -> List[MetRecord]:
        header: Optional[List[str]] = None
        rows: List[List[str]] = []
        line_numbers: List[int] = []
        for number, line in enumerate(lines, start=1):
            stripped = line.strip()
            if not stripped:
                continue
            tokens = stripped.split()
            if stripped.startswith("#"):
                if header is None and tokens[0].lstrip("#").upper() in ("YY", "YYYY"):
                    header = [tokens[0].lstrip("#")] + tokens[1:]
                continue
            if header is None and not rows and tokens[0].upper() in ("YY", "YYYY"):
                header = tokens
                continue
            columns = header or list(NDBC_COLUMNS)
            IngestValidator.validate_token_count(tokens, len(columns), number)
            rows.append(tokens)
            line_numbers.append(number)

        columns = [COLUMN_ALIASES.get(c, c) for c in (header or list(NDBC_COLUMNS))]
        frame = pd.DataFrame(rows, columns=columns, dtype=str)
        has_minutes = len(columns) > 4 and columns[4] == "mm"
        years = pd.to_numeric(frame["YY"], errors="coerce")
        years = years.where(years >= 100, years + 1900)
        parts = pd.DataFrame({
            "year": years,
            "month": pd.to_numeric(frame["MM"], errors="coerce"),
            "day": pd.to_numeric(frame["DD"], errors="coerce"),
            "hour": pd.to_numeric(frame["hh"], errors="coerce"),
            "minute": pd.to_numeric(frame["mm"], errors="coerce") if has_minutes else 0,
        })
        timestamps = pd.to_datetime(parts, errors="coerce", utc=True)
        value_columns = {c.upper(): c for c in columns[5 if has_minutes else 4:]}
        return IngestService._build_records(frame, value_columns, timestamps, line_numbers)

    @staticmethod
    def _parse_csv(text: str) -> List[MetRecord]:
        lines = text.splitlines()
        # The header is the first line with commas and may carry a leading '#',
        # as NDBC headers do. Later '#' lines (units) and blank lines are skipped.
        header_at = next(i for i, line in enumerate(lines) if "," in line)
        kept = [lines[header_at].strip().lstrip("#")]
        line_numbers: List[int] = []
        for number, line in enumerate(lines[header_at + 1:], start=header_at + 2):
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            kept.append(line)
            line_numbers.append(number)
        frame = pd.read_csv(io.StringIO("\n".join(kept)), dtype=str, keep_default_na=False)
        frame.columns = [c.strip() for c in frame.columns]
        by_upper = {c.upper(): c for c in frame.columns}
        if "TIMESTAMP" in by_upper:
            timestamps = pd.to_datetime(frame[by_upper["TIMESTAMP"]], errors="coerce", utc=True, format="ISO8601")
        else:
            # Month and minute differ only by case (MM vs mm), so match these names exactly.
            names = {
                "year": next((c for c in ("YY", "YYYY", "#YY") if c in frame.columns), None),
                "month": "MM" if "MM" in frame.columns else None,
                "day": "DD" if "DD" in frame.columns else None,
                "hour": next((c for c in ("hh", "HH") if c in frame.columns), None),
            }
            if any(column is None for column in names.values()):
                raise DataError("CSV input needs a timestamp column or YY, MM, DD, hh[, mm] columns", code="parse_error")
            parts = pd.DataFrame({k: pd.to_numeric(frame[c], errors="coerce") for k, c in names.items()})
            parts["year"] = parts["year"].where(parts["year"] >= 100, parts["year"] + 1900)
            parts["minute"] = pd.to_numeric(frame["mm"], errors="coerce") if "mm" in frame.columns else 0
            timestamps = pd.to_datetime(parts, errors="coerce", utc=True)
        value_columns = {COLUMN_ALIASES.get(c.upper(), c.upper()): c for c in frame.columns}
        return IngestService._build_records(frame, value_columns, timestamps, line_numbers)

    @staticmethod
    def _build_records(
        frame: pd.DataFrame,
        value_columns: Dict[str, str],
        timestamps: pd.Series,
        line_numbers: Sequence[int],
    ) -> List[MetRecord]:
        bad_time = np.flatnonzero(pd.isna(timestamps).to_numpy())
        if bad_time.size:
            number = line_numbers[bad_time[0]]
            raise DataError(f"line {number}: invalid timestamp", code="parse_error", details={"line": number})

        values: Dict[str, np.ndarray] = {}
        flags: Dict[str, np.ndarray] = {}
        for field in MET_FIELDS:
            column = value_columns.get(field.upper())
            if column is None:
                values[field] = np.full(len(frame), np.nan)
                flags[field] = np.full(len(frame), FieldFlag.MISSING, dtype=object)
                continue
            raw = frame[column].astype(str).str.strip()
            numeric = pd.to_numeric(raw, errors="coerce")
            malformed = numeric.isna() & ~raw.isin(MISSING_TOKENS)
            if malformed.any():
                number = line_numbers[int(np.flatnonzero(malformed.to_numpy())[0])]
                raise DataError(
                    f"line {number}: non-numeric value in {field.upper()}",
                    code="parse_error",
                    details={"line": number, "field": field.upper()},
                )
            v = numeric.to_numpy(dtype=float)
            v[np.isin(v, SENTINELS[field])] = np.nan
            if field == "wdir":
                v[v == 360.0] = 0.0
                v[(v < 0) | (v >= 360)] = np.nan
            elif field in ("wspd", "gst"):
                v[v < 0] = np.nan
            flag = np.where(np.isnan(v), FieldFlag.MISSING, FieldFlag.OBSERVED).astype(object)
            flag_column = value_columns.get(f"{field.upper()}_FLAG")
            if flag_column is not None:
                stored = frame[flag_column].astype(str).str.strip().to_numpy()
                flag = np.where(
                    np.isnan(v), FieldFlag.MISSING,
                    np.where(stored == FieldFlag.IMPUTED.value, FieldFlag.IMPUTED, FieldFlag.OBSERVED),
                ).astype(object)
            values[field] = v
            flags[field] = flag

        records = []
        stamps = timestamps.dt.to_pydatetime()
        for i, stamp in enumerate(stamps):
            row = {f: (None if np.isnan(values[f][i]) else float(values[f][i])) for f in MET_FIELDS}
            records.append(MetRecord(timestamp=stamp, field_flags={f: flags[f][i] for f in MET_FIELDS}, **row))
        logger.info("Parsed %d records", len(records))
        return records

    @staticmethod
    def repair(
        raw_records: Union[SeriesDataset, Iterable[MetRecord]],
        cadence: timedelta = DEFAULT_CADENCE,
        station_id: Optional[str] = None,
    ) -> SeriesDataset:
        """
        Produce a complete, continuous series at the given cadence.

        Missing slots are inserted; gaps of up to MAX_INTERPOLATION_GAP slots are
        linearly interpolated per field, longer gaps are forward-filled (leading
        gaps back-filled). Every synthetic row and value is logged. Repairing an
        already repaired dataset returns it unchanged.
        """
        prior_log: Tuple[RepairEntry, ...] = ()
        if isinstance(raw_records, SeriesDataset):
            prior_log = raw_records.repair_log
            station_id = station_id or raw_records.station_id
            records = list(raw_records.records)
        else:
            records = list(raw_records)
        IngestValidator.validate_enough_records(records)

        log: List[RepairEntry] = []
        ordered = sorted(records, key=lambda r: r.timestamp)
        origin = ordered[0].timestamp
        unique: List[MetRecord] = []
        for record in ordered:
            if unique and record.timestamp == unique[-1].timestamp:
                slot = (record.timestamp - origin) // cadence
                log.append(RepairEntry(index=slot, timestamp=record.timestamp, field="*", action="duplicate_dropped"))
                continue
            unique.append(record)
        IngestValidator.validate_enough_records(unique)
        IngestValidator.validate_on_grid(unique, cadence)

        slot_count = (unique[-1].timestamp - origin) // cadence + 1
        positions = np.array([(r.timestamp - origin) // cadence for r in unique], dtype=int)
        present = np.zeros(slot_count, dtype=bool)
        present[positions] = True
        stamps = [origin + cadence * i for i in range(slot_count)]
        for slot in np.flatnonzero(~present):
            log.append(RepairEntry(index=int(slot), timestamp=stamps[slot], field="*", action="inserted"))

        values: Dict[str, np.ndarray] = {}
        flags: Dict[str, np.ndarray] = {}
        for field in MET_FIELDS:
            v = np.full(slot_count, np.nan)
            f = np.full(slot_count, FieldFlag.MISSING, dtype=object)
            v[positions] = [np.nan if getattr(r, field) is None else getattr(r, field) for r in unique]
            f[positions] = [r.field_flags[field] for r in unique]
            for start, stop in IngestService._missing_runs(np.isnan(v)):
                inside = start > 0 and stop < slot_count
                if inside and stop - start <= MAX_INTERPOLATION_GAP:
                    v[start:stop] = np.interp(np.arange(start, stop), [start - 1, stop], [v[start - 1], v[stop]])
                    action = "interpolated"
                elif start > 0:
                    v[start:stop] = v[start - 1]
                    action = "forward_filled"
                elif stop < slot_count:
                    v[start:stop] = v[stop]
                    action = "back_filled"
                else:
                    continue
                f[start:stop] = FieldFlag.IMPUTED
                log.extend(
                    RepairEntry(index=i, timestamp=stamps[i], field=field, action=action)
                    for i in range(start, stop)
                )
            values[field] = v
            flags[field] = f

        repaired = [
            MetRecord(
                timestamp=stamps[i],
                field_flags={field: flags[field][i] for field in MET_FIELDS},
                **{field: (None if np.isnan(values[field][i]) else float(values[field][i])) for field in MET_FIELDS},
            )
            for i in range(slot_count)
        ]
        logger.info(
            "Repaired %d raw records into %d rows (%d log entries)", len(records), slot_count, len(log)
        )
        return SeriesDataset(
            station_id=station_id or "unknown",
            cadence=cadence,
            records=tuple(repaired),
            repair_log=prior_log + tuple(log),
        )

    @staticmethod
    def _missing_runs(mask: np.ndarray) -> List[Tuple[int, int]]:
        """Half-open [start, stop) runs of True in a boolean mask."""
        padded = np.concatenate(([False], mask, [False])).astype(int)
        edges = np.diff(padded)
        return list(zip(np.flatnonzero(edges == 1).tolist(), np.flatnonzero(edges == -1).tolist()))

    @staticmethod
    def summarize(dataset: SeriesDataset) -> IngestSummary:
        row_count = len(dataset)
        inserted = sum(1 for e in dataset.repair_log if e.action == "inserted")
        duplicates = sum(1 for e in dataset.repair_log if e.action == "duplicate_dropped")
        fields = {}
        imputed_total = 0
        for field in MET_FIELDS:
            flags = dataset.flags(field)
            imputed = sum(1 for f in flags if f == FieldFlag.IMPUTED)
            missing = sum(1 for f in flags if f == FieldFlag.MISSING)
            imputed_total += imputed
            fields[field.upper()] = FieldSummary(
                missing_fraction=missing / row_count, imputed_fraction=imputed / row_count
            )
        return IngestSummary(
            station_id=dataset.station_id,
            row_count=row_count,
            first_timestamp=dataset.first_timestamp,
            last_timestamp=dataset.last_timestamp,
            span=dataset.last_timestamp - dataset.first_timestamp,
            inserted_rows=inserted,
            row_imputed_fraction=inserted / row_count,
            imputed_values=imputed_total,
            duplicates_dropped=duplicates,
            fields=fields,
        )

    @staticmethod
    def logged_value_count(dataset: SeriesDataset) -> int:
        return sum(1 for e in dataset.repair_log if e.action in VALUE_ACTIONS)

    @staticmethod
    def series_frame(dataset: SeriesDataset) -> pd.DataFrame:
        """Repaired series as written to CSV: timestamp, values and *_flag columns."""
        data = {"timestamp": [r.timestamp.isoformat() for r in dataset.records]}
        for field in MET_FIELDS:
            data[field.upper()] = dataset.column(field)
        for field in MET_FIELDS:
            data[f"{field.upper()}_flag"] = [f.value for f in dataset.flags(field)]
        return pd.DataFrame(data)

    @staticmethod
    def write_series_csv(dataset: SeriesDataset, target: Union[str, Path, TextIO]) -> None:
        IngestService.series_frame(dataset).to_csv(target, index=False, lineterminator="\n")

    @staticmethod
    def write_repair_log(dataset: SeriesDataset, target: Union[str, Path]) -> None:
        with open(target, "w", encoding="utf-8") as handle:
            for entry in dataset.repair_log:
                handle.write(json.dumps(entry.model_dump(mode="json"), sort_keys=True) + "\n")

    @staticmethod
    def load_dataset(path: Union[str, Path], cadence: timedelta = DEFAULT_CADENCE) -> SeriesDataset:
        """Read a station file or a previously written series CSV and repair it."""
        path = Path(path)
        try:
            text = path.read_text(encoding="utf-8")
        except OSError as exc:
            raise DataError(f"cannot read {path}: {exc.strerror}", code="unreadable_input") from exc
        records = IngestService.parse_ndbc(text)
        station_id = path.stem.split("h")[0] if path.suffix == ".txt" else path.stem
        return IngestService.repair(records, cadence=cadence, station_id=station_id)
