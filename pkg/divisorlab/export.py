"""Report writers: CSV, JSON, gnuplot-data and XLSX."""
import csv
import json
import re
import sys
from io import BytesIO, StringIO
from typing import Any, NamedTuple, Optional, Sequence, Union

from openpyxl import Workbook
from pydantic import BaseModel

from .errors import DomainError
from .utils import format_number

CSV_SEPARATOR = ", "


class Table(NamedTuple):
    """Columns and rows for the tabular formats; payload is what the JSON format dumps."""

    title: str
    columns: Sequence[str]
    rows: Sequence[Sequence[Any]]
    payload: Union[BaseModel, dict]


def model_table(title: str, models: Sequence[BaseModel], payload: Union[BaseModel, dict]) -> Table:
    """One row per model, columns taken from the first model's fields."""
    if not models:
        return Table(title, [], [], payload)
    columns = list(type(models[0]).model_fields)
    rows = [[getattr(m, c) for c in columns] for m in models]
    return Table(title, columns, rows, payload)


def _csv_cell(value) -> str:
    text = format_number(value)
    if not text:
        return text
    buffer = StringIO()
    csv.writer(buffer, lineterminator="").writerow([text])
    return buffer.getvalue()


def to_csv(table: Table) -> str:
    """Cells holding commas or quotes are quoted, so csv.reader with skipinitialspace reads rows back."""
    lines = [CSV_SEPARATOR.join(_csv_cell(c) for c in table.columns)] if table.columns else []
    lines += [CSV_SEPARATOR.join(_csv_cell(v) for v in row) for row in table.rows]
    return "\n".join(lines) + "\n"


def to_json(table: Table) -> str:
    if isinstance(table.payload, BaseModel):
        return table.payload.model_dump_json(indent=2) + "\n"
    return json.dumps(table.payload, indent=2) + "\n"


def _gnuplot_cell(value) -> str:
    if value is None:
        return "nan"
    # gnuplot splits columns on whitespace
    return re.sub(r"\s+", "_", format_number(value))


def to_gnuplot(table: Table) -> str:
    lines = [f"# {table.title}"]
    if table.columns:
        lines.append("# " + " ".join(re.sub(r"\s+", "_", c) for c in table.columns))
    lines += [" ".join(_gnuplot_cell(v) for v in row) for row in table.rows]
    return "\n".join(lines) + "\n"


def to_xlsx(table: Table) -> bytes:
    workbook = Workbook()
    sheet = workbook.active
    sheet.title = table.title[:31] or "report"
    sheet.append(list(table.columns))
    for row in table.rows:
        sheet.append([v if isinstance(v, (int, float, str)) or v is None else str(v) for v in row])
    output = BytesIO()
    workbook.save(output)
    return output.getvalue()


def render(table: Table, fmt: str) -> Union[str, bytes]:
    if fmt == "csv":
        return to_csv(table)
    if fmt == "json":
        return to_json(table)
    if fmt == "gnuplot-data":
        return to_gnuplot(table)
    if fmt == "xlsx":
        return to_xlsx(table)
    raise DomainError(f"unknown output format {fmt!r}")


def write(table: Table, fmt: str, output: Optional[str] = None) -> None:
    """Write to the output path, or to standard output for the text formats."""
    content = render(table, fmt)
    if output is None:
        if isinstance(content, bytes):
            raise DomainError("xlsx output needs --output")
        sys.stdout.write(content)
        return
    mode = "wb" if isinstance(content, bytes) else "w"
    with open(output, mode, **({} if mode == "wb" else {"encoding": "utf-8", "newline": ""})) as handle:
        handle.write(content)
