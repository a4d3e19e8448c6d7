import io

import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra import numpy as hnp

from haarstein.errors import DimensionError
from haarstein.matrix_io import dumps_matrix, format_entry, loads_matrix, parse_entry, read_matrix_csv, write_matrix_csv

finite = st.floats(allow_nan=False, allow_infinity=False, width=64)


def test_parse_complex_forms():
    assert parse_entry("1.5+2i") == 1.5 + 2j
    assert parse_entry(" -0.5-1e-3i ") == -0.5 - 1e-3j
    assert parse_entry("3") == 3
    with pytest.raises(ValueError):
        parse_entry("abc")


def test_format_entry():
    assert format_entry(1 - 2j, True) == "1.0-2.0i"
    assert format_entry(0.25) == "0.25"


@given(hnp.arrays(float, (3, 3), elements=finite))
def test_real_roundtrip(M):
    assert np.array_equal(loads_matrix(dumps_matrix(M)), M)


@given(hnp.arrays(float, (2, 2), elements=finite), hnp.arrays(float, (2, 2), elements=finite))
def test_complex_roundtrip(re, im):
    M = re + 1j * im
    back = loads_matrix(dumps_matrix(M))
    if np.all(im == 0):
        assert np.array_equal(back, re)
    else:
        assert np.array_equal(back, M)


def test_file_roundtrip(tmp_path):
    M = np.array([[1.0, 2.0], [3.0, 4.5]])
    p = tmp_path / "a.csv"
    write_matrix_csv(M, p)
    assert p.read_text() == "1.0,2.0\n3.0,4.5\n"
    assert np.array_equal(read_matrix_csv(p), M)
    buf = io.StringIO()
    write_matrix_csv(M, buf)
    assert np.array_equal(read_matrix_csv(io.StringIO(buf.getvalue())), M)


def test_non_square_rejected():
    with pytest.raises(DimensionError):
        loads_matrix("1,2\n3\n")
    with pytest.raises(DimensionError):
        loads_matrix("")
