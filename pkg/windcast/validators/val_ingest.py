from datetime import timedelta
from typing import Sequence

from windcast.models.mod_series import MetRecord
from windcast.validators.val_errors import DataError


class IngestValidator:
    @staticmethod
    def validate_token_count(tokens: Sequence[str], expected: int, line_number: int):
        """Validate that a data line has as many tokens as the header declares"""
        if len(tokens) != expected:
            raise DataError(
                f"line {line_number}: expected {expected} fields, found {len(tokens)}",
                code="parse_error",
                details={"line": line_number},
            )

    @staticmethod
    def validate_enough_records(records: Sequence[MetRecord]):
        """Validate that a repair has at least two records to span"""
        if len(records) < 2:
            raise DataError("insufficient data: at least 2 records are required", code="insufficient_data")

    @staticmethod
    def validate_on_grid(records: Sequence[MetRecord], cadence: timedelta):
        """Validate that every timestamp lies on the cadence grid anchored at the first record"""
        origin = records[0].timestamp
        for record in records:
            if (record.timestamp - origin) % cadence:
                raise DataError(
                    f"timestamp {record.timestamp.isoformat()} is off the {cadence} grid",
                    code="non_monotone_timestamps",
                    details={"timestamp": record.timestamp.isoformat()},
                )
