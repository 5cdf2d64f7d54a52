"""
Record formatting module for writing sweep records and figure tables as CSV or JSON.
"""

import csv
import io
import json
import logging
import math
import os
from typing import Dict, Iterable, List, Optional, Sequence, TextIO

from src.analysis import NEG_INF_DB, FigureTable, SweepRecord

logger = logging.getLogger(__name__)

RECORD_COLUMNS = (
    "theta", "mu1", "mu2", "mu3bar", "mu4bar", "dmu1", "dmu2",
    "beta_star", "s_value", "f_exact", "f_input", "loss_db", "case",
)
FORMATS = ("csv", "json")


class RecordFormatter:
    """Serializes analysis results; every number is written with 17 significant digits."""

    def __init__(self, output_format: str = "csv"):
        if output_format not in FORMATS:
            raise ValueError(f"unknown output format {output_format!r}, expected one of {FORMATS}")
        self.output_format = output_format

    @staticmethod
    def format_number(value: Optional[float]) -> str:
        """
        Format a value for CSV.

        Args:
            value: Number to format; None becomes an empty field
        """
        if value is None:
            return ""
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return format(value, ".17g")

    @staticmethod
    def format_loss(loss_db: float) -> str:
        if loss_db == NEG_INF_DB:
            return "-inf"
        return RecordFormatter.format_number(loss_db)

    @staticmethod
    def _json_number(value: Optional[float]):
        # JSON has no infinities; they travel as strings.
        if value is None or math.isfinite(value):
            return value
        return "inf" if value > 0 else "-inf"

    def record_row(self, record: SweepRecord) -> List[str]:
        point = record.moments
        numbers = (point.theta, point.mu1, point.mu2, point.mu3bar, point.mu4bar, point.dmu1, point.dmu2,
                   record.beta_star, record.s_value, record.f_exact, record.f_input)
        return [self.format_number(v) for v in numbers] + [self.format_loss(record.loss_db), record.case.value]

    def record_dict(self, record: SweepRecord) -> Dict[str, object]:
        point = record.moments
        row = {
            "theta": point.theta,
            "mu1": point.mu1,
            "mu2": point.mu2,
            "mu3bar": point.mu3bar,
            "mu4bar": point.mu4bar,
            "dmu1": point.dmu1,
            "dmu2": point.dmu2,
            "beta_star": record.beta_star,
            "s_value": record.s_value,
            "f_exact": record.f_exact,
            "f_input": record.f_input,
        }
        row = {key: self._json_number(value) for key, value in row.items()}
        row["loss_db"] = "-inf" if record.loss_db == NEG_INF_DB else record.loss_db
        row["case"] = record.case.value
        return row

    def render_records(self, records: Iterable[SweepRecord]) -> str:
        if self.output_format == "json":
            return json.dumps([self.record_dict(r) for r in records], indent=2) + "\n"
        return self._render_csv(RECORD_COLUMNS, (self.record_row(r) for r in records))

    def render_table(self, table: FigureTable) -> str:
        if self.output_format == "json":
            rows = [{name: self._json_number(v) for name, v in zip(table.columns, row)} for row in table.rows]
            return json.dumps({"figure": table.name, "rows": rows}, indent=2) + "\n"
        rows = ([self._table_cell(name, v) for name, v in zip(table.columns, row)] for row in table.rows)
        return self._render_csv(table.columns, rows)

    def _table_cell(self, column: str, value: float) -> str:
        if column.endswith("loss_db"):
            return self.format_loss(value)
        return self.format_number(value)

    @staticmethod
    def _render_csv(header: Sequence[str], rows: Iterable[Sequence[str]]) -> str:
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)
        return buffer.getvalue()

    def write(self, text: str, output_path: Optional[str] = None, stream: Optional[TextIO] = None) -> Optional[str]:
        """
        Write rendered text to a file, or to `stream` when no path is given.

        Returns:
            The path written, or None for stream output
        """
        if output_path is None:
            stream.write(text)
            stream.flush()
            return None

        directory = os.path.dirname(output_path)
        if directory:
            os.makedirs(directory, exist_ok=True)
        with open(output_path, "w", encoding="utf-8", newline="\n") as f:
            f.write(text)
        logger.info("wrote %d bytes to %s", len(text.encode("utf-8")), output_path)
        return output_path

    def default_filename(self, stem: str) -> str:
        return f"{stem}.{self.output_format}"
