"""Plain-text file formats: grids, hard data, run configuration, PGM images and CSV metrics.

Grid files (``.grid``)::

    ccwsim-grid v1
    <ncols> <nrows> <ncats>
    <nrows lines of ncols whitespace-separated codes, top row first>

Hard data files hold one ``row,col,facies`` triple per line (0-based);
blank lines and lines starting with ``#`` are ignored.

Configuration files hold ``key = value`` lines, also with ``#`` comments.
"""
from __future__ import annotations

import csv
import math
import os
from pathlib import Path
from typing import Dict, Iterable, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from .errors import ConfigError, ParseError
from .grid import CategoricalGrid, HardDataSet
from .metrics import AnodiResult, ConnectivitySeries, VariogramSeries
from .simulator import FACIES_MODES, SimConfig
from .matcher import SCORING_MODES

PathLike = Union[str, os.PathLike]

GRID_MAGIC = "ccwsim-grid v1"

REQUIRED_KEYS = ("ti", "sg_size", "template", "overlap", "dwt_level", "candidates",
                 "realizations", "seed")
OPTIONAL_KEYS = ("hard_data", "scoring", "facies_mode", "min_cut", "out_dir", "lookahead")
CONFIG_KEYS = REQUIRED_KEYS + OPTIONAL_KEYS


def _open_text(path: PathLike, mode: str):
    try:
        return open(path, mode, encoding="ascii", newline="\n" if "w" in mode else None)
    except OSError as exc:
        raise OSError(f"{path}: {exc.strerror or exc}") from exc


def read_grid(path: PathLike) -> CategoricalGrid:
    with _open_text(path, "r") as fh:
        lines = fh.read().splitlines()
    if not lines or lines[0].strip() != GRID_MAGIC:
        raise ParseError(f"expected magic line {GRID_MAGIC!r}", path, 1)
    if len(lines) < 2:
        raise ParseError("missing dimension line", path, 2)
    header = lines[1].split()
    try:
        ncols, nrows, ncats = (int(v) for v in header)
    except ValueError:
        raise ParseError(f"expected '<ncols> <nrows> <ncats>', got {lines[1]!r}", path, 2) from None
    if ncols < 1 or nrows < 1 or ncats < 1:
        raise ParseError("dimensions and category count must be positive", path, 2)
    body = lines[2:]
    while body and not body[-1].strip():
        body.pop()
    if len(body) != nrows:
        raise ParseError(f"declared {nrows} rows, found {len(body)}", path, 2 + len(body))
    cells = np.empty((nrows, ncols), dtype=np.int16)
    for i, line in enumerate(body):
        lineno = i + 3
        tokens = line.split()
        if len(tokens) != ncols:
            raise ParseError(f"expected {ncols} values, found {len(tokens)}", path, lineno)
        for j, tok in enumerate(tokens):
            try:
                v = int(tok)
            except ValueError:
                raise ParseError(f"column {j + 1}: {tok!r} is not an integer", path, lineno) from None
            if not 0 <= v < ncats:
                raise ParseError(f"column {j + 1}: code {v} outside [0, {ncats})", path, lineno)
            cells[i, j] = v
    return CategoricalGrid(cells, ncats)


def write_grid(grid: CategoricalGrid, path: PathLike) -> None:
    lines = [GRID_MAGIC, f"{grid.width} {grid.height} {grid.num_facies}"]
    lines += [" ".join(map(str, row)) for row in grid.cells.tolist()]
    with _open_text(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def read_hard_data(path: PathLike, sg_shape: Tuple[int, int],
                   num_facies: Optional[int] = None) -> HardDataSet:
    """Parse and validate a hard-data file against the SG shape (and facies count, if known)."""
    rows, cols = sg_shape
    points = []
    seen: Dict[Tuple[int, int], int] = {}
    with _open_text(path, "r") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = [p.strip() for p in line.split(",")]
            if len(parts) != 3:
                raise ParseError(f"expected 'row,col,facies', got {line!r}", path, lineno)
            try:
                r, c, f = (int(p) for p in parts)
            except ValueError:
                raise ParseError(f"non-integer field in {line!r}", path, lineno) from None
            if not (0 <= r < rows and 0 <= c < cols):
                raise ParseError(f"coordinate ({r}, {c}) outside {rows}x{cols} grid", path, lineno)
            if f < 0 or (num_facies is not None and f >= num_facies):
                bound = f"[0, {num_facies})" if num_facies is not None else ">= 0"
                raise ParseError(f"facies {f} not in {bound}", path, lineno)
            if (r, c) in seen:
                raise ParseError(
                    f"duplicate coordinate ({r}, {c}), first given on line {seen[(r, c)]}",
                    path, lineno,
                )
            seen[(r, c)] = lineno
            points.append((r, c, f))
    return HardDataSet(tuple(points))


def write_hard_data(hard_data: HardDataSet, path: PathLike) -> None:
    with _open_text(path, "w") as fh:
        fh.write("# row,col,facies\n")
        for r, c, f in hard_data:
            fh.write(f"{r},{c},{f}\n")


def _write_pgm_values(values: np.ndarray, path: PathLike) -> None:
    h, w = values.shape
    lines = ["P2", f"{w} {h}", "255"]
    lines += [" ".join(map(str, row)) for row in values.tolist()]
    with _open_text(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def write_pgm(grid: CategoricalGrid, path: PathLike) -> None:
    """ASCII PGM with codes spread evenly over 0..255."""
    scale = 255 / (grid.num_facies - 1) if grid.num_facies > 1 else 0.0
    _write_pgm_values(np.rint(grid.cells * scale).astype(np.int64), path)


def write_pgm_plane(plane: np.ndarray, path: PathLike) -> None:
    """ASCII PGM of a plane with values in [0, 1] (e.g. an ensemble average)."""
    vals = np.rint(np.clip(np.asarray(plane, dtype=np.float64), 0.0, 1.0) * 255).astype(np.int64)
    _write_pgm_values(vals, path)


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (float, np.floating)):
        return "" if math.isnan(v) else repr(float(v))
    if isinstance(v, np.integer):
        return str(int(v))
    return str(v)


def write_csv(path: PathLike, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    with _open_text(path, "w") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def write_metrics_csv(result, path: PathLike) -> None:
    """Serialize a variogram, connectivity series or ANODI result."""
    if isinstance(result, VariogramSeries):
        write_csv(path, ["lag", "gamma"], zip(result.lags.tolist(), result.gamma.tolist()))
    elif isinstance(result, ConnectivitySeries):
        write_csv(path, ["lag", "probability"],
                  zip(result.lags.tolist(), result.probability.tolist()))
    elif isinstance(result, AnodiResult):
        header = ["level", "weight", "between_a", "between_b", "within_a", "within_b",
                  "between_ratio", "within_ratio", "ratio"]
        rows = [[lv.level, w, lv.between_a, lv.between_b, lv.within_a, lv.within_b,
                 lv.between_ratio, lv.within_ratio, lv.ratio]
                for lv, w in zip(result.levels, result.weights)]
        rows.append(["aggregate", sum(result.weights), None, None, None, None, None, None, result.r])
        write_csv(path, header, rows)
    else:
        raise TypeError(f"no CSV layout for {type(result).__name__}")


def read_config_entries(path: PathLike) -> Dict[str, str]:
    """Raw ``key = value`` pairs of a config file, keys lower-cased."""
    entries: Dict[str, str] = {}
    with _open_text(path, "r") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ParseError(f"expected 'key = value', got {line!r}", path, lineno)
            key, value = (s.strip() for s in line.split("=", 1))
            key = key.lower()
            if key not in CONFIG_KEYS:
                raise ConfigError(f"{path}:{lineno}: unknown key {key!r}", key)
            if key in entries:
                raise ConfigError(f"{path}:{lineno}: key {key!r} given twice", key)
            entries[key] = value
    return entries


def _int(entries: Mapping[str, str], key: str, lo: int | None = None) -> int:
    try:
        v = int(entries[key])
    except ValueError:
        raise ConfigError(f"{key}: expected an integer, got {entries[key]!r}", key) from None
    if lo is not None and v < lo:
        raise ConfigError(f"{key}: must be >= {lo}, got {v}", key)
    return v


def parse_sg_size(text: str) -> Tuple[int, int]:
    """``"512"``, ``"512x256"`` or ``"512 256"`` as ``(rows, cols)``."""
    parts = text.lower().replace("x", " ").replace(",", " ").split()
    try:
        dims = [int(p) for p in parts]
    except ValueError:
        raise ConfigError(f"sg_size: cannot parse {text!r}", "sg_size") from None
    if len(dims) == 1:
        dims = dims * 2
    if len(dims) != 2 or min(dims) < 1:
        raise ConfigError(f"sg_size: expected one or two positive integers, got {text!r}", "sg_size")
    return dims[0], dims[1]


def _bool(entries, key) -> bool:
    v = entries[key].strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"{key}: expected a boolean, got {entries[key]!r}", key)


def build_config(entries: Mapping[str, str], base_dir: PathLike = ".",
                 require_seed: bool = True) -> SimConfig:
    """Validate raw entries and assemble a :class:`SimConfig`.

    Relative ``ti``, ``hard_data`` and ``out_dir`` paths are resolved against
    ``base_dir``.
    """
    for key in entries:
        if key not in CONFIG_KEYS:
            raise ConfigError(f"unknown key {key!r}", key)
    for key in REQUIRED_KEYS:
        if key == "seed" and not require_seed:
            continue
        if key not in entries or entries[key] == "":
            raise ConfigError(f"missing required key {key!r}", key)
    base = Path(base_dir)

    def resolve(p: str) -> str:
        q = Path(p).expanduser()
        return str(q if q.is_absolute() else base / q)

    height, width = parse_sg_size(entries["sg_size"])
    seed = _int(entries, "seed", 0) if "seed" in entries else 0
    if seed >= 1 << 64:
        raise ConfigError("seed: must fit in 64 bits", "seed")
    scoring = entries.get("scoring", "raw")
    if scoring not in SCORING_MODES:
        raise ConfigError(f"scoring: expected one of {SCORING_MODES}, got {scoring!r}", "scoring")
    facies_mode = entries.get("facies_mode", "indicator")
    if facies_mode not in FACIES_MODES:
        raise ConfigError(f"facies_mode: expected one of {FACIES_MODES}, got {facies_mode!r}",
                          "facies_mode")
    cfg = SimConfig(
        sg_height=height,
        sg_width=width,
        template=_int(entries, "template", 1),
        overlap=_int(entries, "overlap", 1),
        dwt_level=_int(entries, "dwt_level", 0),
        candidates=_int(entries, "candidates", 1),
        n_realizations=_int(entries, "realizations", 1),
        master_seed=seed,
        scoring=scoring,
        facies_mode=facies_mode,
        min_cut=_bool(entries, "min_cut") if "min_cut" in entries else False,
        lookahead=_int(entries, "lookahead", 0) if "lookahead" in entries else None,
        ti_path=resolve(entries["ti"]),
        out_dir=resolve(entries["out_dir"]) if entries.get("out_dir") else None,
    )
    cfg.validate()
    if entries.get("hard_data"):
        try:
            cfg.hard_data = read_hard_data(resolve(entries["hard_data"]), (height, width))
        except (ParseError, OSError) as exc:
            raise ConfigError(f"hard_data: {exc}", "hard_data") from exc
    return cfg


def parse_config(path: PathLike) -> SimConfig:
    entries = read_config_entries(path)
    return build_config(entries, Path(path).parent)
