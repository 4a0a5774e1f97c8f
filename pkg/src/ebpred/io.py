"""CSV ingestion/emission, key=value config files and run manifests."""

import csv
import hashlib
import json
import math
from importlib import resources
from pathlib import Path

import numpy as np

from .errors import ConfigError, NonNumericCell, ParseError, RaggedRows
from .linalg import Dataset


def _is_number(cell):
    try:
        float(cell)
    except ValueError:
        return False
    return True


def load_csv(path):
    """Read a rectangular numeric CSV.

    A first row containing any non-numeric cell is taken as a header.

    Returns
    -------
    (ndarray, list of str or None)
        The 2-d matrix and the header, if present.
    """
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except UnicodeDecodeError as exc:
        raise ParseError(f"{path}: not valid UTF-8") from exc
    rows = []
    header = None
    width = None
    reader = csv.reader(text.splitlines())
    for lineno, row in enumerate(reader, start=1):
        cells = [c.strip() for c in row]
        if not cells or cells == [""]:
            continue
        if header is None and not rows and not all(_is_number(c) for c in cells):
            header = cells
            width = len(cells)
            continue
        if width is None:
            width = len(cells)
        elif len(cells) != width:
            raise RaggedRows(f"{path}: expected {width} fields, found {len(cells)}", line=lineno)
        values = []
        for col, c in enumerate(cells, start=1):
            try:
                values.append(float(c))
            except ValueError:
                raise NonNumericCell(f"{path}: non-numeric cell {c!r}", line=lineno, column=col) from None
        rows.append(values)
    if not rows:
        raise ParseError(f"{path}: no data rows")
    return np.asarray(rows, dtype=float), header


def load_dataset(x_path, y_path, y_col=0):
    X, _ = load_csv(x_path)
    Y, header = load_csv(y_path)
    if isinstance(y_col, str) and not y_col.lstrip("-").isdigit():
        if header is None or y_col not in header:
            raise ConfigError(f"response column {y_col!r} not found in {y_path}")
        y_col = header.index(y_col)
    y_col = int(y_col)
    if not -Y.shape[1] <= y_col < Y.shape[1]:
        raise ConfigError(f"response column {y_col} out of range for {Y.shape[1]} columns")
    return Dataset(X, Y[:, y_col])


def toy_dataset():
    """The bundled 8 x 5 example (last column of the file is the response)."""
    with resources.as_file(resources.files("ebpred") / "data" / "toy.csv") as path:
        M, _ = load_csv(path)
    return Dataset(M[:, :-1], M[:, -1])


def fmt(value):
    """Shortest round-trip text for a number."""
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        v = float(value)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return repr(v)
    return str(value)


def write_csv(path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        if header:
            w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])


def write_json(path, obj):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True, default=_json_default)
        fh.write("\n")


def _json_default(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, tuple):
        return list(obj)
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def git_blob_hash(path):
    """SHA-1 of the file content framed as a git blob object."""
    data = Path(path).read_bytes()
    return hashlib.sha1(b"blob %d\0" % len(data) + data).hexdigest()


def read_config(path):
    """Parse flat ``key=value`` lines; ``#`` starts a comment line."""
    cfg = {}
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ParseError(f"{path}: expected key=value", line=lineno)
        key, value = line.split("=", 1)
        cfg[key.strip()] = value.strip()
    return cfg


def write_config(path, cfg):
    lines = []
    for key in sorted(cfg):
        value = cfg[key]
        if value is None:
            continue
        if isinstance(value, (list, tuple)):
            value = " ".join(fmt(v) for v in value)
        else:
            value = fmt(value)
        if "\n" in value:
            raise ConfigError(f"config value for {key} contains a newline")
        lines.append(f"{key}={value}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
