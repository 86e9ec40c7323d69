# encode and decode one convergence-table row (CSV line)
# Functions: encode_row(), decode_row(), encode_header()
# Must handle: integer columns, float columns at full precision, missing values (nan)

import math
from typing import Dict, Optional, Sequence

from common.constants import CSV_HEADER, CSV_DIGITS, INT_COLUMNS

Row = Dict[str, float]


def format_value(value: float) -> str:
    """17 significant digits round-trips any float64; nan for missing metrics."""
    if value is None:
        return "nan"
    value = float(value)
    if math.isnan(value):
        return "nan"
    return f"{value:.{CSV_DIGITS}g}"


def encode_header(header: Sequence[str] = CSV_HEADER) -> str:
    return ",".join(header)


def encode_row(row: Row, header: Sequence[str] = CSV_HEADER) -> str:
    """
    encode a row dict as one CSV line (no line terminator)

    Algorithm:
    1. validate that every header column is present
    2. integer columns written with %d
    3. everything else written at CSV_DIGITS significant digits
    """
    missing = [name for name in header if name not in row]
    if missing:
        raise ValueError(f"Row is missing columns {missing}.")

    cells = []
    for name in header:
        if name in INT_COLUMNS:
            cells.append(str(int(row[name])))
        else:
            cells.append(format_value(row[name]))
    return ",".join(cells)


def decode_row(line: str, header: Sequence[str] = CSV_HEADER) -> Optional[Row]:
    """
    decode one CSV line back into a row dict

    Algorithm:
    1. strip the line terminator, split on commas
    2. reject lines whose cell count differs from the header
    3. parse integer and float columns; reject unparsable cells
    """
    cells = line.rstrip("\r\n").split(",")
    if len(cells) != len(header):
        return None

    row: Row = {}
    try:
        for name, cell in zip(header, cells):
            row[name] = int(cell) if name in INT_COLUMNS else float(cell)
    except ValueError:
        return None
    return row
