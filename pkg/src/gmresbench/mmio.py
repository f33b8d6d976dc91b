"""Matrix Market text I/O for dense matrices and vectors.

Supports the ``matrix coordinate real general`` and ``matrix array
real general`` flavors. Coordinate files materialize dense with unset
entries zero; array files are stored column-major in the file per the
format's convention. Floats are written with 17 significant digits so a
write/read round trip is bit exact.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .linalg import DenseMatrix, Vector


class MatrixMarketParseError(ValueError):
    """Malformed Matrix Market content; carries the offending line number."""

    def __init__(self, line: int, message: str):
        self.line = line
        super().__init__(f"line {line}: {message}")


def _tokens(path: Path):
    """Yield (line_number, tokens) for non-blank, non-comment lines."""
    with open(path, "r", encoding="ascii") as fh:
        for lineno, raw in enumerate(fh, start=1):
            stripped = raw.strip()
            if lineno == 1:
                yield lineno, stripped.split()
                continue
            if not stripped or stripped.startswith("%"):
                continue
            yield lineno, stripped.split()


def _parse_real(token: str, lineno: int) -> float:
    try:
        return float(token)
    except ValueError:
        raise MatrixMarketParseError(lineno, f"expected a real number, got {token!r}") from None


def _parse_index(token: str, lineno: int, what: str) -> int:
    try:
        return int(token)
    except ValueError:
        raise MatrixMarketParseError(lineno, f"expected an integer {what}, got {token!r}") from None


def read_matrix_market(path, want: str = "matrix"):
    """Read a Matrix Market file as a DenseMatrix or, for ``want="vector"``,
    as a Vector (the file must then hold an n-by-1 matrix)."""
    if want not in ("matrix", "vector"):
        raise ValueError(f"want must be 'matrix' or 'vector', got {want!r}")
    path = Path(path)
    stream = _tokens(path)
    try:
        lineno, header = next(stream)
    except StopIteration:
        raise MatrixMarketParseError(0, "empty file") from None
    if len(header) != 5 or header[0].lower() != "%%matrixmarket":
        raise MatrixMarketParseError(lineno, "malformed header, expected '%%MatrixMarket matrix <coordinate|array> real general'")
    obj, fmt, fieldkind, symmetry = (t.lower() for t in header[1:])
    if obj != "matrix":
        raise MatrixMarketParseError(lineno, f"unsupported object {obj!r}")
    if fmt not in ("coordinate", "array"):
        raise MatrixMarketParseError(lineno, f"unsupported format {fmt!r}")
    if fieldkind != "real":
        raise MatrixMarketParseError(lineno, f"unsupported field {fieldkind!r}, only 'real' is handled")
    if symmetry != "general":
        raise MatrixMarketParseError(lineno, f"unsupported symmetry {symmetry!r}")

    try:
        lineno, size = next(stream)
    except StopIteration:
        raise MatrixMarketParseError(lineno, "missing size line") from None

    if fmt == "coordinate":
        if len(size) != 3:
            raise MatrixMarketParseError(lineno, "coordinate size line needs 'rows cols nnz'")
        rows = _parse_index(size[0], lineno, "row count")
        cols = _parse_index(size[1], lineno, "column count")
        nnz = _parse_index(size[2], lineno, "entry count")
        if rows < 1 or cols < 1 or nnz < 0:
            raise MatrixMarketParseError(lineno, "invalid sizes")
        data = np.zeros((rows, cols))
        seen: set[tuple[int, int]] = set()
        count = 0
        for lineno, toks in stream:
            if count == nnz:
                raise MatrixMarketParseError(lineno, f"more than the declared {nnz} entries")
            if len(toks) != 3:
                raise MatrixMarketParseError(lineno, "coordinate entry needs 'i j value'")
            i = _parse_index(toks[0], lineno, "row index")
            j = _parse_index(toks[1], lineno, "column index")
            if not (1 <= i <= rows) or not (1 <= j <= cols):
                raise MatrixMarketParseError(lineno, f"index ({i}, {j}) outside {rows}x{cols}")
            if (i, j) in seen:
                raise MatrixMarketParseError(lineno, f"duplicate entry for ({i}, {j})")
            seen.add((i, j))
            data[i - 1, j - 1] = _parse_real(toks[2], lineno)
            count += 1
        if count != nnz:
            raise MatrixMarketParseError(lineno, f"expected {nnz} entries, file has {count}")
    else:
        if len(size) != 2:
            raise MatrixMarketParseError(lineno, "array size line needs 'rows cols'")
        rows = _parse_index(size[0], lineno, "row count")
        cols = _parse_index(size[1], lineno, "column count")
        if rows < 1 or cols < 1:
            raise MatrixMarketParseError(lineno, "invalid sizes")
        values = np.empty(rows * cols)
        count = 0
        for lineno, toks in stream:
            for tok in toks:
                if count == rows * cols:
                    raise MatrixMarketParseError(lineno, f"more than the declared {rows * cols} values")
                values[count] = _parse_real(tok, lineno)
                count += 1
        if count != rows * cols:
            raise MatrixMarketParseError(lineno, f"expected {rows * cols} values, file has {count}")
        # File order is column-major.
        data = values.reshape((cols, rows)).T

    if want == "vector":
        if cols != 1:
            raise MatrixMarketParseError(lineno, f"expected an n-by-1 matrix for a vector, got {rows}x{cols}")
        return Vector(data[:, 0])
    return DenseMatrix(data)


def read_vector(path) -> Vector:
    return read_matrix_market(path, want="vector")


def write_matrix_market(path, value, fmt: str = "array") -> None:
    """Write a DenseMatrix or Vector; vectors are stored as n-by-1."""
    if fmt not in ("array", "coordinate"):
        raise ValueError(f"fmt must be 'array' or 'coordinate', got {fmt!r}")
    if isinstance(value, Vector):
        data = value.data.reshape((-1, 1))
    elif isinstance(value, DenseMatrix):
        data = value.data
    else:
        raise TypeError(f"cannot write {type(value).__name__} as Matrix Market")
    rows, cols = data.shape
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write(f"%%MatrixMarket matrix {fmt} real general\n")
        if fmt == "array":
            fh.write(f"{rows} {cols}\n")
            for j in range(cols):
                for i in range(rows):
                    fh.write(f"{data[i, j]:.17g}\n")
        else:
            nonzero = [(i, j) for j in range(cols) for i in range(rows) if data[i, j] != 0.0]
            fh.write(f"{rows} {cols} {len(nonzero)}\n")
            for i, j in nonzero:
                fh.write(f"{i + 1} {j + 1} {data[i, j]:.17g}\n")
