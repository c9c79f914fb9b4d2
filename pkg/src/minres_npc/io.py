"""Text formats for matrices, vectors and datasets.

* Matrix Market ``coordinate real|integer symmetric|general`` (general must be
  symmetric). The writer emits ``symmetric`` with the lower triangle.
* Dense whitespace-delimited matrices, one row per line, ``#`` comments.
* Vectors, one value per line.
* Label-first CSV datasets without header.

All readers raise :class:`~minres_npc.errors.ParseError` carrying the path and
line number.
"""

import numpy as np

from .errors import ParseError
from .operators import DenseSymmetric


def _float(token, path, lineno):
    try:
        return float(token)
    except ValueError:
        raise ParseError(f"not a number: {token!r}", path, lineno) from None


def read_matrix_market(path):
    with open(path) as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise ParseError("empty file", path, 1)
    header = lines[0].split()
    if len(header) != 5 or header[0].lower() != "%%matrixmarket":
        raise ParseError("missing %%MatrixMarket banner", path, 1)
    obj, fmt, field, sym = (h.lower() for h in header[1:])
    if obj != "matrix" or fmt != "coordinate":
        raise ParseError(f"only 'matrix coordinate' is supported, got '{obj} {fmt}'", path, 1)
    if field not in ("real", "integer", "double"):
        raise ParseError(f"unsupported field '{field}'", path, 1)
    if sym not in ("symmetric", "general"):
        raise ParseError(f"unsupported symmetry '{sym}'", path, 1)

    i = 1
    while i < len(lines) and (not lines[i].strip() or lines[i].lstrip().startswith("%")):
        i += 1
    if i == len(lines):
        raise ParseError("missing size line", path, i)
    size = lines[i].split()
    if len(size) != 3:
        raise ParseError("size line must be 'rows cols nnz'", path, i + 1)
    try:
        nrows, ncols, nnz = (int(t) for t in size)
    except ValueError:
        raise ParseError("size line must hold integers", path, i + 1) from None
    if nrows != ncols:
        raise ParseError(f"matrix must be square, got {nrows}x{ncols}", path, i + 1)

    M = np.zeros((nrows, ncols))
    seen = 0
    for lineno in range(i + 2, len(lines) + 1):
        text = lines[lineno - 1].strip()
        if not text or text.startswith("%"):
            continue
        parts = text.split()
        if len(parts) != 3:
            raise ParseError("entry must be 'row col value'", path, lineno)
        try:
            r, c = int(parts[0]) - 1, int(parts[1]) - 1
        except ValueError:
            raise ParseError("row/col must be integers", path, lineno) from None
        if not (0 <= r < nrows and 0 <= c < ncols):
            raise ParseError(f"index ({r + 1}, {c + 1}) out of range", path, lineno)
        val = _float(parts[2], path, lineno)
        if sym == "symmetric":
            if r < c:
                raise ParseError("symmetric files store the lower triangle only", path, lineno)
            M[r, c] = val
            M[c, r] = val
        else:
            M[r, c] = val
        seen += 1
    if seen != nnz:
        raise ParseError(f"expected {nnz} entries, found {seen}", path, len(lines))
    if sym == "general" and not np.array_equal(M, M.T):
        raise ParseError("general matrix is not symmetric", path, None)
    return DenseSymmetric(M)


def write_matrix_market(path, A):
    M = A.dense()
    d = M.shape[0]
    rows, cols = np.nonzero(np.tril(M))
    with open(path, "w") as fh:
        fh.write("%%MatrixMarket matrix coordinate real symmetric\n")
        fh.write(f"{d} {d} {len(rows)}\n")
        for r, c in zip(rows, cols):
            fh.write(f"{r + 1} {c + 1} {float(M[r, c])!r}\n")


def read_dense_matrix(path):
    rows = []
    first = None
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            text = line.split("#", 1)[0].strip()
            if not text:
                continue
            row = [_float(t, path, lineno) for t in text.split()]
            if first is None:
                first = len(row)
            elif len(row) != first:
                raise ParseError(f"row has {len(row)} entries, expected {first}", path, lineno)
            rows.append(row)
    if not rows:
        raise ParseError("no matrix rows found", path, None)
    M = np.array(rows)
    if M.shape[0] != M.shape[1]:
        raise ParseError(f"matrix must be square, got {M.shape[0]}x{M.shape[1]}", path, None)
    if not np.array_equal(M, M.T):
        raise ParseError("matrix is not symmetric", path, None)
    return DenseSymmetric(M)


def read_matrix(path):
    """Dispatch on content: Matrix Market if the banner is present, else dense text."""
    with open(path) as fh:
        head = fh.readline()
    if head.lower().startswith("%%matrixmarket"):
        return read_matrix_market(path)
    return read_dense_matrix(path)


def read_vector(path):
    values = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            text = line.split("#", 1)[0].strip()
            if not text:
                continue
            if len(text.split()) != 1:
                raise ParseError("expected one value per line", path, lineno)
            values.append(_float(text, path, lineno))
    if not values:
        raise ParseError("no values found", path, None)
    return np.array(values)


def write_vector(path, v):
    with open(path, "w") as fh:
        for x in np.asarray(v, dtype=np.float64):
            fh.write(f"{float(x)!r}\n")


def read_dataset_csv(path):
    """Read ``label,f1,f2,...`` rows; labels must be 0 or 1.

    Returns ``(features, labels)`` with ``labels`` as float64.
    """
    feats, labels = [], []
    width = None
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            text = line.strip()
            if not text:
                continue
            parts = [p.strip() for p in text.split(",")]
            if len(parts) < 2:
                raise ParseError("need a label and at least one feature", path, lineno)
            if width is None:
                width = len(parts)
            elif len(parts) != width:
                raise ParseError(f"row has {len(parts)} columns, expected {width}", path, lineno)
            label = _float(parts[0], path, lineno)
            if label not in (0.0, 1.0):
                raise ParseError(f"label must be 0 or 1, got {parts[0]}", path, lineno)
            labels.append(label)
            feats.append([_float(p, path, lineno) for p in parts[1:]])
    if not labels:
        raise ParseError("no rows found", path, None)
    return np.array(feats), np.array(labels)


def write_dataset_csv(path, features, labels):
    with open(path, "w") as fh:
        for y, row in zip(labels, features):
            fh.write(",".join([str(int(y))] + [repr(float(v)) for v in row]) + "\n")
