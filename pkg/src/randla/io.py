"""Matrix I/O: Matrix Market array format and headerless CSV.

Writers emit 17 significant digits so a round trip is bit exact.
"""

from __future__ import annotations

import numpy as np

from .dense import as_matrix
from .errors import InvalidMatrix

__all__ = ["write_matrix_market", "read_matrix_market", "write_csv", "read_csv"]

MM_HEADER = "%%MatrixMarket matrix array real general"


def write_matrix_market(path, A) -> None:
    """Write a dense real matrix; entries are listed column by column."""
    A = as_matrix(A)
    m, n = A.shape
    with open(path, "w", newline="\n") as fh:
        fh.write(MM_HEADER + "\n")
        fh.write(f"{m} {n}\n")
        for v in A.ravel(order="F"):
            fh.write(f"{v:.17g}\n")


def read_matrix_market(path) -> np.ndarray:
    with open(path) as fh:
        header = fh.readline().split()
        if len(header) < 5 or header[0].lower() != "%%matrixmarket":
            raise InvalidMatrix("missing %%MatrixMarket banner")
        obj, fmt, field, sym = (h.lower() for h in header[1:5])
        if (obj, fmt, field, sym) != ("matrix", "array", "real", "general"):
            raise InvalidMatrix(f"unsupported Matrix Market type: {' '.join(header[1:5])}")
        line = fh.readline()
        while line.startswith("%") or not line.strip():
            line = fh.readline()
            if not line:
                raise InvalidMatrix("missing size line")
        m, n = (int(x) for x in line.split()[:2])
        vals = [float(tok) for ln in fh if not ln.startswith("%") for tok in ln.split()]
    if len(vals) != m * n:
        raise InvalidMatrix(f"expected {m * n} entries, found {len(vals)}")
    return as_matrix(np.array(vals).reshape((m, n), order="F"))


def write_csv(path, A) -> None:
    A = as_matrix(A)
    with open(path, "w", newline="\n") as fh:
        for row in A:
            fh.write(",".join(f"{v:.17g}" for v in row) + "\n")


def read_csv(path) -> np.ndarray:
    with open(path) as fh:
        rows = [[float(x) for x in line.split(",")] for line in fh if line.strip()]
    if not rows or len({len(r) for r in rows}) != 1:
        raise InvalidMatrix("CSV rows are empty or ragged")
    return as_matrix(np.array(rows))
