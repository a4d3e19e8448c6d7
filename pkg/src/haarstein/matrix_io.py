"""Plain-text matrix CSV format.

One matrix row per line, entries separated by commas.  Complex entries are
written ``a+bi`` / ``a-bi`` with decimal literals; real files hold plain
decimals.
"""

from __future__ import annotations

import io
import os
from typing import TextIO

import numpy as np

from .errors import DimensionError

__all__ = ["parse_entry", "format_entry", "read_matrix_csv", "write_matrix_csv", "dumps_matrix", "loads_matrix"]


def parse_entry(token: str) -> complex:
    t = token.strip().replace(" ", "")
    if not t:
        raise ValueError("empty matrix entry")
    if t.endswith("i"):
        t = t[:-1] + "j"
    try:
        return complex(t)
    except ValueError:
        raise ValueError(f"cannot parse matrix entry {token!r}") from None


def format_entry(x, force_complex: bool = False) -> str:
    z = complex(x)
    if not force_complex:
        return repr(float(z.real))
    re, im = float(z.real), float(z.imag)
    sign = "-" if np.signbit(im) else "+"
    return f"{re!r}{sign}{abs(im)!r}i"


def loads_matrix(text: str) -> np.ndarray:
    rows = [line for line in text.splitlines() if line.strip() and not line.lstrip().startswith("#")]
    data = [[parse_entry(tok) for tok in line.split(",")] for line in rows]
    if not data:
        raise DimensionError("matrix file is empty")
    n = len(data)
    if any(len(r) != n for r in data):
        raise DimensionError("matrix CSV must be square")
    M = np.array(data, dtype=complex)
    if not np.all(np.isfinite(M)):
        raise ValueError("matrix entries must be finite")
    if np.all(M.imag == 0):
        return M.real.copy()
    return M


def dumps_matrix(M: np.ndarray) -> str:
    M = np.asarray(M)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {M.shape}")
    cplx = np.iscomplexobj(M)
    buf = io.StringIO()
    for row in M:
        buf.write(",".join(format_entry(x, cplx) for x in row))
        buf.write("\n")
    return buf.getvalue()


def read_matrix_csv(source: str | os.PathLike | TextIO) -> np.ndarray:
    if hasattr(source, "read"):
        return loads_matrix(source.read())
    with open(source) as fh:
        return loads_matrix(fh.read())


def write_matrix_csv(M: np.ndarray, dest: str | os.PathLike | TextIO) -> None:
    text = dumps_matrix(M)
    if hasattr(dest, "write"):
        dest.write(text)
        return
    with open(dest, "w") as fh:
        fh.write(text)
