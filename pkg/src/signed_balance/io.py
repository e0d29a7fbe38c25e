"""Matrix text/CSV formats, result emission and PGM heatmaps.

Matrix text format: first line ``n``, then ``n`` whitespace-separated rows.
CSV matrices are ``n`` comma-separated rows with no header.  Floats are
written with 17 significant digits so values round-trip exactly.
"""
from __future__ import annotations

import csv
import io as _io
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .core import DEFAULT_TOL, ToleranceConfig, sign_pattern

SCHEMA_VERSION = 1

# stable CSV column orders
TRAJECTORY_COLUMNS = ("t", "max_norm", "min_abs", "balanced", "sign_changed")
MC_TRIAL_COLUMNS = ("trial", "seed", "Z", "balance_time")
MC_SUMMARY_COLUMNS = ("trials", "successes", "p_hat", "std_err")
SWEEP_COLUMNS = (
    "n", "ave", "x_min", "x_max", "samples", "one_faction", "two_factions",
    "indeterminate", "two_faction_fraction", "classification",
)
FACTION_COLUMNS = ("node", "component", "faction")


def fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if x is None:
        return ""
    if isinstance(x, (float, np.floating)):
        return f"{float(x):.17g}"
    return str(x)


def format_matrix(X, csv_format: bool = False) -> str:
    X = np.asarray(X, dtype=np.float64)
    sep = "," if csv_format else " "
    rows = [sep.join(f"{v:.17g}" for v in row) for row in X]
    head = [] if csv_format else [str(X.shape[0])]
    return "\n".join(head + rows) + "\n"


def parse_matrix(text: str, csv_format: bool | None = None) -> np.ndarray:
    lines = [ln.strip() for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
    if not lines:
        raise ValueError("empty matrix file")
    if csv_format is None:
        csv_format = "," in lines[-1]
    if csv_format:
        rows = [[float(v) for v in ln.split(",")] for ln in lines]
        # tolerate an optional size line
        if len(rows[0]) == 1 and len(rows) == int(rows[0][0]) + 1:
            rows = rows[1:]
    else:
        n = int(lines[0])
        rows = [[float(v) for v in ln.split()] for ln in lines[1:]]
        if len(rows) != n or any(len(r) != n for r in rows):
            raise ValueError(f"expected {n} rows of {n} values")
    X = np.array(rows, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] != X.shape[1]:
        raise ValueError(f"matrix is not square: shape {X.shape}")
    return X


def read_matrix(path) -> np.ndarray:
    path = Path(path)
    return parse_matrix(path.read_text(), csv_format=path.suffix.lower() == ".csv" or None)


def write_matrix(X, path) -> None:
    path = Path(path)
    path.write_text(format_matrix(X, csv_format=path.suffix.lower() == ".csv"))


def rows_to_csv(columns, rows) -> str:
    """CSV text with a header row; ``rows`` are dicts keyed by column or plain sequences."""
    buf = _io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        values = [row[c] for c in columns] if isinstance(row, dict) else list(row)
        writer.writerow([fmt(v) for v in values])
    return buf.getvalue()


def trajectory_csv(traj) -> str:
    return rows_to_csv(TRAJECTORY_COLUMNS, [
        (s.t, s.max_norm, s.min_abs, s.balanced, s.sign_changed) for s in traj.summaries
    ])


def mc_csv(result) -> str:
    if result.per_trial:
        return rows_to_csv(MC_TRIAL_COLUMNS, result.per_trial)
    return rows_to_csv(MC_SUMMARY_COLUMNS, [(result.trials, result.successes, result.p_hat, result.std_err)])


def sweep_csv(records) -> str:
    return rows_to_csv(SWEEP_COLUMNS, records)


def factions_csv(partition) -> str:
    faction = partition.faction_of if partition.faction_of is not None else [None] * len(partition.component_of)
    return rows_to_csv(FACTION_COLUMNS, [
        (i, int(c), None if f is None else int(f)) for i, (c, f) in enumerate(zip(partition.component_of, faction))
    ])


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if hasattr(obj, "value") and not isinstance(obj, (int, float, str)):
        return obj.value
    return obj


def to_json(payload: dict) -> str:
    body = {"schema_version": SCHEMA_VERSION}
    body.update(_jsonable(payload))
    return json.dumps(body, indent=2, sort_keys=True) + "\n"


def format_record(record: dict, prefix: str = "") -> str:
    """Key-value text, one ``key: value`` per line, nested keys dotted."""
    lines = []
    for key, value in record.items():
        name = f"{prefix}{key}"
        if isinstance(value, dict):
            lines.append(format_record(value, name + ".").rstrip("\n"))
        else:
            lines.append(f"{name}: {json.dumps(_jsonable(value)) if isinstance(value, (list, tuple, np.ndarray)) else fmt(value)}")
    return "\n".join(lines) + "\n"


# ------------------------------------------------------------------ heatmaps

NEGATIVE_GRAY = 96
POSITIVE_GRAY = 192
ZERO_GRAY = 255


@dataclass(frozen=True)
class HeatmapSpec:
    cell_pixels: int = 8
    frames: tuple = (0,)

    def __post_init__(self):
        if self.cell_pixels < 1:
            raise ValueError("cell_pixels must be positive")


def heatmap_pixels(X, spec: HeatmapSpec = HeatmapSpec(), tol: ToleranceConfig = DEFAULT_TOL) -> np.ndarray:
    S = sign_pattern(X, tol)
    levels = np.full(S.shape, ZERO_GRAY, dtype=np.int64)
    levels[S < 0] = NEGATIVE_GRAY
    levels[S > 0] = POSITIVE_GRAY
    k = spec.cell_pixels
    return np.kron(levels, np.ones((k, k), dtype=np.int64))


def format_pgm(pixels: np.ndarray) -> str:
    h, w = pixels.shape
    body = "\n".join(" ".join(str(int(v)) for v in row) for row in pixels)
    return f"P2\n{w} {h}\n255\n{body}\n"


def emit_heatmap(X, spec: HeatmapSpec, path, tol: ToleranceConfig = DEFAULT_TOL) -> None:
    """Write a plain (P2) PGM: negative dark gray, positive light gray, zero white."""
    Path(path).write_text(format_pgm(heatmap_pixels(X, spec, tol)))


def read_pgm(path) -> np.ndarray:
    tokens = Path(path).read_text().split()
    if tokens[0] != "P2":
        raise ValueError("not a plain PGM file")
    w, h = int(tokens[1]), int(tokens[2])
    return np.array([int(t) for t in tokens[4:4 + w * h]], dtype=np.int64).reshape(h, w)
