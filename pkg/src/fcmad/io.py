"""CSV reading and writing, plus the run manifest emitted next to score files.

Every number is written with 17 significant digits so a file read back
yields bit-identical floats.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .errors import FcmadError, ParseError
from .series import MultiSeries


def fmt(x) -> str:
    return format(float(x), ".17g")


def _open_error(path, exc):
    err = FcmadError(f"cannot access {path}: {exc.strerror or exc}")
    err.kind = "io-error"
    return err


def read_text(path) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise _open_error(path, exc) from exc
    except UnicodeDecodeError as exc:
        raise ParseError(f"{path} is not valid UTF-8") from exc


def write_text(path, text: str) -> None:
    try:
        Path(path).write_text(text, encoding="utf-8", newline="")
    except OSError as exc:
        raise _open_error(path, exc) from exc


def parse_rows(text: str, source="<input>"):
    """Header and numeric rows of a comma-separated table.

    Row and column positions in errors are 1-based and count the header.
    """
    rows = [r for r in csv.reader(io.StringIO(text))]
    while rows and not any(cell.strip() for cell in rows[-1]):
        rows.pop()
    if not rows:
        raise ParseError(f"{source}: empty file", row=1)
    header = [h.strip() for h in rows[0]]
    if not all(header):
        raise ParseError(f"{source}: blank column name in header", row=1)
    data = []
    for r, row in enumerate(rows[1:], start=2):
        if len(row) != len(header):
            raise ParseError(f"{source}: expected {len(header)} fields, got {len(row)}", row=r)
        vals = []
        for c, cell in enumerate(row, start=1):
            try:
                v = float(cell.strip())
            except ValueError:
                raise ParseError(f"{source}: non-numeric value {cell!r}", row=r, column=c) from None
            if not math.isfinite(v):
                raise ParseError(f"{source}: non-finite value {cell!r}", row=r, column=c)
            vals.append(v)
        data.append(vals)
    return header, data


def parse_csv(path) -> MultiSeries:
    """Read a series: header of variable names, then one timestamp per row."""
    header, data = parse_rows(read_text(path), str(path))
    if len(data) < 2:
        raise ParseError(f"{path}: need at least two data rows, got {len(data)}", row=len(data) + 2)
    return MultiSeries(np.array(data), tuple(header))


def serialize_series(series: MultiSeries) -> str:
    lines = [",".join(series.variable_names)]
    lines.extend(",".join(fmt(v) for v in row) for row in series.values)
    return "\n".join(lines) + "\n"


def write_series(series: MultiSeries, path) -> None:
    write_text(path, serialize_series(series))


def _write_columns(path, names, columns, formats):
    lines = [",".join(names)]
    for row in zip(*columns):
        lines.append(",".join(f(v) for f, v in zip(formats, row)))
    write_text(path, "\n".join(lines) + "\n")


def write_scores(scores, path) -> None:
    """Per-timestamp scores as ``t,point_score``."""
    pp = np.asarray(getattr(scores, "per_point", scores))
    _write_columns(path, ("t", "point_score"), (range(pp.size), pp), (str, fmt))


def write_subsequence_scores(scores, path) -> None:
    """Per-window scores as ``start_index,score``."""
    _write_columns(
        path,
        ("start_index", "score"),
        (scores.starts, scores.per_subsequence),
        (lambda v: str(int(v)), fmt),
    )


def write_labels(labels, path) -> None:
    lab = np.asarray(labels, dtype=bool)
    _write_columns(path, ("t", "label"), (range(lab.size), lab), (str, lambda v: str(int(v))))


def _read_columns(path, expected):
    header, data = parse_rows(read_text(path), str(path))
    if header != list(expected):
        raise ParseError(f"{path}: expected header {','.join(expected)}, got {','.join(header)}", row=1)
    arr = np.array(data, dtype=float).reshape(len(data), len(expected))
    return arr


def read_scores(path) -> np.ndarray:
    arr = _read_columns(path, ("t", "point_score"))
    return arr[:, 1]


def read_subsequence_scores(path) -> tuple[np.ndarray, np.ndarray]:
    arr = _read_columns(path, ("start_index", "score"))
    return arr[:, 0].astype(np.int64), arr[:, 1]


def read_labels(path) -> np.ndarray:
    arr = _read_columns(path, ("t", "label"))
    lab = arr[:, 1]
    bad = np.flatnonzero((lab != 0) & (lab != 1))
    if bad.size:
        raise ParseError(f"{path}: label must be 0 or 1", row=int(bad[0]) + 2, column=2)
    return lab.astype(bool)


def write_fgrid(rows, path) -> None:
    """Confidence-index grid as ``clusters,window,confidence_index``."""
    rows = list(rows)
    _write_columns(
        path,
        ("clusters", "window", "confidence_index"),
        tuple(zip(*rows)) if rows else ((), (), ()),
        (str, str, fmt),
    )


def file_digest(path) -> str:
    h = hashlib.sha256()
    try:
        with open(path, "rb") as fh:
            for chunk in iter(lambda: fh.read(1 << 16), b""):
                h.update(chunk)
    except OSError as exc:
        raise _open_error(path, exc) from exc
    return h.hexdigest()


@dataclass
class RunManifest:
    command: str
    config: dict
    input_sha256: str | None = None
    input_path: str | None = None
    outputs: dict = field(default_factory=dict)
    results: dict = field(default_factory=dict)
    version: str = __version__
    duration_s: float = 0.0

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True) + "\n"

    def write(self, path) -> None:
        write_text(path, self.to_json())

    @classmethod
    def read(cls, path) -> "RunManifest":
        try:
            return cls(**json.loads(read_text(path)))
        except (json.JSONDecodeError, TypeError) as exc:
            raise ParseError(f"{path}: not a run manifest ({exc})") from exc
