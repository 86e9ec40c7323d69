"""
Unit tests for records.py
Tests convergence-table row encoding and decoding
"""

import math

import pytest
from common.records import encode_header, encode_row, decode_row, format_value
from common.constants import CSV_HEADER


def make_row(**overrides):
    row = {name: 0.1 * (i + 1) for i, name in enumerate(CSV_HEADER)}
    row.update(level=3, dofs=1234, nodes=321)
    row.update(overrides)
    return row


class TestFormatValue:
    """Test float formatting"""

    def test_nan(self):
        assert format_value(float("nan")) == "nan"

    def test_none_is_missing(self):
        assert format_value(None) == "nan"

    def test_full_precision(self):
        """17 significant digits reproduce the float exactly"""
        value = 1.0 / 3.0
        assert float(format_value(value)) == value


class TestEncodeRow:
    """Test row encoding"""

    def test_header(self):
        assert encode_header() == ",".join(CSV_HEADER)
        assert encode_header().startswith("level,dofs,nodes,hmax,ls,eta")

    def test_cell_count(self):
        line = encode_row(make_row())
        assert len(line.split(",")) == len(CSV_HEADER)

    def test_integer_columns(self):
        cells = encode_row(make_row()).split(",")
        assert cells[:3] == ["3", "1234", "321"]

    def test_missing_metric_written_as_nan(self):
        cells = encode_row(make_row(wbh2=float("nan"))).split(",")
        assert cells[CSV_HEADER.index("wbh2")] == "nan"

    def test_missing_column_rejected(self):
        row = make_row()
        del row["eta"]
        with pytest.raises(ValueError):
            encode_row(row)


class TestDecodeRow:
    """Test row decoding"""

    def test_decode_restores_values(self):
        row = make_row(ls=0.012345678901234567, hmax=2.0 ** -7)
        decoded = decode_row(encode_row(row) + "\n")

        assert decoded["ls"] == row["ls"]
        assert decoded["hmax"] == row["hmax"]
        assert decoded["dofs"] == 1234
        assert isinstance(decoded["level"], int)

    def test_decode_nan(self):
        decoded = decode_row(encode_row(make_row(rate_ls=float("nan"))))
        assert math.isnan(decoded["rate_ls"])

    def test_wrong_cell_count(self):
        assert decode_row("1,2,3") is None

    def test_garbage_cell(self):
        cells = encode_row(make_row()).split(",")
        cells[5] = "abc"
        assert decode_row(",".join(cells)) is None
