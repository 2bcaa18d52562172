"""Dense matrix files.

Two formats are understood:

* Matrix Market (``%%MatrixMarket`` header, array or coordinate), read
  and written through :mod:`scipy.io`.  Written with 17 significant
  digits so a round trip is exact.
* A plain format: a header line ``rows cols`` followed by one
  whitespace-separated row per line.  Blank lines and lines starting
  with ``%`` or ``#`` are ignored.

:func:`write_matrix` picks Matrix Market for ``.mtx`` paths and the plain
format otherwise.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
import scipy.io
import scipy.sparse

from .errors import BadDimension, ConfigError


def format_float(x: float) -> str:
    return format(float(x), ".17g")


def write_matrix(path, M) -> None:
    M = np.atleast_2d(np.asarray(M, dtype=float))
    path = Path(path)
    if path.suffix.lower() == ".mtx":
        scipy.io.mmwrite(str(path), M, precision=17)
        return
    lines = [f"{M.shape[0]} {M.shape[1]}"]
    lines += [" ".join(format_float(v) for v in row) for row in M]
    path.write_text("\n".join(lines) + "\n")


def _read_plain(path, text) -> np.ndarray:
    rows = [ln.split() for ln in text.splitlines()
            if ln.strip() and not ln.lstrip().startswith(("%", "#"))]
    if not rows:
        raise BadDimension(f"{path}: empty matrix file")
    try:
        r, c = (int(v) for v in rows[0])
        data = np.array([[float(v) for v in row] for row in rows[1:]], dtype=float)
    except ValueError as exc:
        raise BadDimension(f"{path}: malformed matrix file ({exc})") from exc
    if r < 1 or c < 1 or data.shape != (r, c):
        raise BadDimension(f"{path}: header says {r}x{c}, body is {data.shape}")
    return data


def read_matrix(path) -> np.ndarray:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read matrix file {path}: {exc}") from exc
    if text.lstrip().startswith("%%MatrixMarket"):
        try:
            data = scipy.io.mmread(str(path))
        except (ValueError, IndexError) as exc:
            raise BadDimension(f"{path}: malformed Matrix Market file ({exc})") from exc
        if scipy.sparse.issparse(data):
            data = data.toarray()
        data = np.atleast_2d(np.asarray(data, dtype=float))
    else:
        data = _read_plain(path, text)
    if not np.all(np.isfinite(data)):
        raise BadDimension(f"{path}: non-finite entries")
    return data
