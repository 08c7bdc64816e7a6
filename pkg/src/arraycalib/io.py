"""File formats for TOA matrices, ground truth and side information.

TOA matrices
    CSV: one row per receiver, comma-separated arrival times in seconds.  An
    empty cell (or ``nan``) marks an unobserved entry.  A sibling file
    ``<stem>.mask.csv`` of 0/1 values, if present, also masks entries
    (1 = observed).
    JSON: ``{"toa": [[...], ...], "mask": [[true, ...], ...], "speed": 343}``
    where ``mask`` and ``speed`` are optional and ``null`` marks an
    unobserved entry.

Ground truth (JSON): ``{"receivers": [[x...], [y...], [z...]], "sources":
[...], "sigma": [...], "tau": [...]}``, coordinates as ``d x M`` / ``d x K``
nested lists.  Timings are optional.

Distances (JSON list or CSV rows): ``i, j, distance`` for equalities and
``i, j, lower, upper`` for bounds, indices into receivers-then-sources.
Constant offsets: a JSON list or a CSV with one delay per source.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .errors import InvalidInputError, ParseError
from .geometry import PointSet
from .toa import DEFAULT_SPEED, Timing, ToaMatrix

__all__ = [
    "read_toa",
    "write_toa",
    "read_truth",
    "write_truth",
    "read_distances",
    "read_bounds",
    "read_vector",
    "mask_path_for",
]

_MISSING_TOKENS = {"", "nan", "NaN", "NAN", "null", "NA"}


def mask_path_for(path) -> Path:
    path = Path(path)
    return path.with_name(path.stem + ".mask" + path.suffix)


def _infer_format(path, fmt):
    if fmt:
        fmt = fmt.lower()
    else:
        fmt = Path(path).suffix.lstrip(".").lower()
    if fmt not in ("csv", "json"):
        raise ParseError(f"unknown TOA format {fmt!r} for {path}")
    return fmt


def _read_csv_rows(path) -> list[list[str]]:
    with open(path, newline="") as fh:
        rows = [row for row in csv.reader(fh) if row and not (len(row) == 1 and not row[0].strip())]
    if not rows:
        raise ParseError(f"{path} is empty")
    width = len(rows[0])
    for r, row in enumerate(rows):
        if len(row) != width:
            raise ParseError(f"ragged row in {path}: expected {width} cells, got {len(row)}", row=r)
    return rows


def _parse_float_cells(rows, path, allow_missing=True):
    out = np.full((len(rows), len(rows[0])), np.nan)
    for r, row in enumerate(rows):
        for c, cell in enumerate(row):
            token = cell.strip()
            if allow_missing and token in _MISSING_TOKENS:
                continue
            try:
                out[r, c] = float(token)
            except ValueError:
                raise ParseError(f"non-numeric cell {cell!r} in {path}", row=r, column=c) from None
            if not np.isfinite(out[r, c]):
                raise ParseError(f"non-finite cell {cell!r} in {path}", row=r, column=c)
    return out


def _validate_coverage(t, mask, path):
    rows = np.flatnonzero(~mask.any(axis=1))
    cols = np.flatnonzero(~mask.any(axis=0))
    if rows.size:
        raise ParseError(f"receiver has no observed entry after masking in {path}", row=int(rows[0]))
    if cols.size:
        raise ParseError(f"source has no observed entry after masking in {path}", column=int(cols[0]))


def read_toa(path, format: str | None = None, speed: float | None = None, mask_path=None) -> ToaMatrix:
    """Read a TOA matrix from CSV or JSON (see module docstring)."""
    path = Path(path)
    fmt = _infer_format(path, format)
    if not path.exists():
        raise ParseError(f"TOA file {path} does not exist")
    if fmt == "csv":
        t = _parse_float_cells(_read_csv_rows(path), path)
        mask = np.isfinite(t)
        mpath = Path(mask_path) if mask_path is not None else mask_path_for(path)
        if mpath.exists():
            raw = _parse_float_cells(_read_csv_rows(mpath), mpath, allow_missing=False)
            if raw.shape != t.shape:
                raise ParseError(f"mask {mpath} has shape {raw.shape}, TOA has {t.shape}")
            bad = np.argwhere((raw != 0) & (raw != 1))
            if bad.size:
                raise ParseError(f"mask {mpath} must contain 0/1", row=int(bad[0][0]), column=int(bad[0][1]))
            mask &= raw.astype(bool)
        file_speed = DEFAULT_SPEED
    else:
        try:
            data = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise ParseError(f"invalid JSON in {path}: {exc.msg}", row=exc.lineno, column=exc.colno) from None
        if not isinstance(data, dict) or "toa" not in data:
            raise ParseError(f"{path} must be an object with a 'toa' field")
        rows = data["toa"]
        if not isinstance(rows, list) or not rows or not all(isinstance(r, list) for r in rows):
            raise ParseError(f"'toa' in {path} must be a non-empty array of arrays")
        width = len(rows[0])
        t = np.full((len(rows), width), np.nan)
        for r, row in enumerate(rows):
            if len(row) != width:
                raise ParseError(f"ragged row in {path}: expected {width} cells, got {len(row)}", row=r)
            for c, cell in enumerate(row):
                if cell is None:
                    continue
                if isinstance(cell, bool) or not isinstance(cell, (int, float)):
                    raise ParseError(f"non-numeric cell {cell!r} in {path}", row=r, column=c)
                t[r, c] = float(cell)
        mask = np.isfinite(t)
        if data.get("mask") is not None:
            given = np.asarray(data["mask"])
            if given.shape != t.shape:
                raise ParseError(f"'mask' in {path} has shape {given.shape}, TOA has {t.shape}")
            mask &= given.astype(bool)
        file_speed = float(data.get("speed", DEFAULT_SPEED))
    _validate_coverage(t, mask, path)
    try:
        return ToaMatrix(t, mask, speed if speed is not None else file_speed)
    except InvalidInputError as exc:
        raise ParseError(f"{path}: {exc}") from None


def _fmt(x: float) -> str:
    return repr(float(x))


def write_toa(t: ToaMatrix, path, format: str | None = None) -> list[Path]:
    """Write a TOA matrix; returns the written paths (CSV adds a mask file when needed).

    Values are written with ``repr`` so reading them back is bit-exact.
    """
    path = Path(path)
    fmt = _infer_format(path, format)
    written = [path]
    if fmt == "csv":
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            for r in range(t.m):
                writer.writerow([_fmt(v) if ok else "" for v, ok in zip(t.t[r], t.mask[r])])
        mpath = mask_path_for(path)
        if not t.full:
            with open(mpath, "w", newline="") as fh:
                writer = csv.writer(fh, lineterminator="\n")
                for r in range(t.m):
                    writer.writerow([int(v) for v in t.mask[r]])
            written.append(mpath)
        elif mpath.exists():
            mpath.unlink()
    else:
        payload = {
            "toa": [[float(v) if ok else None for v, ok in zip(t.t[r], t.mask[r])] for r in range(t.m)],
            "mask": t.mask.tolist(),
            "speed": t.speed,
        }
        path.write_text(json.dumps(payload, indent=1))
    return written


def write_truth(path, points: PointSet, timing: Timing | None = None, extra: dict | None = None) -> Path:
    path = Path(path)
    payload = {"receivers": points.receivers.tolist(), "sources": points.sources.tolist()}
    if timing is not None:
        payload["sigma"] = timing.sigma.tolist()
        payload["tau"] = timing.tau.tolist()
    if extra:
        payload.update(extra)
    path.write_text(json.dumps(payload, indent=1))
    return path


def read_truth(path) -> tuple[PointSet | None, np.ndarray | None, Timing | None]:
    """Return ``(points or None, receivers, timing or None)``.

    Real recordings often only survey the receivers; then ``points`` is
    ``None`` and only the ``d x M`` receiver array is returned.
    """
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ParseError(f"cannot read truth file {path}: {exc}") from None
    if "receivers" not in data:
        raise ParseError(f"truth file {path} needs a 'receivers' field")
    receivers = np.asarray(data["receivers"], dtype=float)
    points = None
    if data.get("sources") is not None:
        points = PointSet.from_parts(receivers, np.asarray(data["sources"], dtype=float))
    timing = None
    if data.get("sigma") is not None and data.get("tau") is not None:
        timing = Timing(data["sigma"], data["tau"])
    return points, receivers, timing


def _read_table(path, width):
    path = Path(path)
    if path.suffix.lower() == ".json":
        try:
            rows = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise ParseError(f"invalid JSON in {path}: {exc.msg}", row=exc.lineno) from None
    else:
        rows = [[c.strip() for c in row] for row in _read_csv_rows(path)]
    out = []
    for r, row in enumerate(rows):
        if len(row) != width:
            raise ParseError(f"{path}: expected {width} values per row", row=r)
        try:
            out.append(tuple(float(v) for v in row))
        except (TypeError, ValueError):
            raise ParseError(f"{path}: non-numeric value", row=r) from None
    return out


def read_distances(path) -> list[tuple[int, int, float]]:
    return [(int(i), int(j), v) for i, j, v in _read_table(path, 3)]


def read_bounds(path) -> list[tuple[int, int, float, float]]:
    return [(int(i), int(j), lo, hi) for i, j, lo, hi in _read_table(path, 4)]


def read_vector(path) -> np.ndarray:
    path = Path(path)
    if path.suffix.lower() == ".json":
        try:
            values = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise ParseError(f"invalid JSON in {path}: {exc.msg}") from None
        return np.asarray(values, dtype=float).reshape(-1)
    return _parse_float_cells(_read_csv_rows(path), path, allow_missing=False).reshape(-1)
