"""Command-line frontend: ``ccwsim {simulate,validate,anodi,bench}``."""
from __future__ import annotations

import argparse
import json
import logging
import os
import re
import secrets
import sys
import time
import warnings
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import numpy as np

from . import __version__
from .errors import CCWSimError, ConfigError
from .grid import CategoricalGrid, facies_proportions
from .metrics import (
    anodi as anodi_metric,
    classical_mds,
    connectivity_function,
    ensemble_average,
    indicator_variogram,
    js_distance_matrix,
)
from .simulator import SimConfig, mix64, sample_hard_data, simulate_ensemble, simulate_one
from .storage import (
    build_config,
    read_config_entries,
    read_grid,
    write_csv,
    write_grid,
    write_metrics_csv,
    write_pgm,
    write_pgm_plane,
)

log = logging.getLogger("ccwsim")

OUT_DIR_ENV = "CCWSIM_OUT_DIR"

# config key -> (flag, argparse kwargs)
CONFIG_FLAGS = {
    "ti": ("--ti", {"help": "training image (.grid)"}),
    "sg_size": ("--sg-size", {"help": "simulation grid size, e.g. 512 or 512x256 (rows x cols)"}),
    "template": ("--template", {"type": int, "help": "template size T in cells"}),
    "overlap": ("--overlap", {"type": int, "help": "overlap width OV in cells"}),
    "dwt_level": ("--dwt-level", {"type": int, "help": "Haar decomposition level J"}),
    "candidates": ("--candidates", {"type": int, "help": "number of best candidates K"}),
    "realizations": ("--realizations", {"type": int, "help": "number of realizations"}),
    "seed": ("--seed", {"type": int, "help": "master seed (64-bit)"}),
    "hard_data": ("--hard-data", {"help": "hard data file (row,col,facies lines)"}),
    "scoring": ("--scoring", {"choices": ["raw", "normalized"]}),
    "facies_mode": ("--facies-mode", {"choices": ["indicator", "raw-codes"]}),
    "min_cut": ("--min-cut", {"action": argparse.BooleanOptionalAction, "default": None,
                              "help": "stitch patches along minimum-error seams"}),
    "out_dir": ("--out-dir", {"help": f"output directory (fallback: ${OUT_DIR_ENV})"}),
    "lookahead": ("--lookahead", {"type": int,
                                  "help": "cells past the template checked against hard data"}),
}
PATH_KEYS = ("ti", "hard_data", "out_dir")


def _add_config_flags(p: argparse.ArgumentParser, skip: Sequence[str] = ()):
    p.add_argument("--config", "-c", help="key = value configuration file")
    for key, (flag, kwargs) in CONFIG_FLAGS.items():
        if key in skip:
            continue
        p.add_argument(flag, dest=f"cfg_{key}", **kwargs)


def _merged_entries(args) -> Dict[str, str]:
    """Config-file entries overlaid with command-line flags (flags win)."""
    entries: Dict[str, str] = {}
    base = Path(".")
    if args.config:
        entries = read_config_entries(args.config)
        base = Path(args.config).parent
        for key in PATH_KEYS:
            if key in entries and entries[key]:
                q = Path(entries[key]).expanduser()
                entries[key] = str(q if q.is_absolute() else base / q)
    args.overrides = {}
    for key in CONFIG_FLAGS:
        value = getattr(args, f"cfg_{key}", None)
        if value is None:
            continue
        text = str(value).lower() if isinstance(value, bool) else str(value)
        if key in PATH_KEYS:
            text = str(Path(text).expanduser().absolute())
        if key in entries and entries[key] != text:
            log.info("override %s: config=%r flag=%r (flag wins)", key, entries[key], text)
            args.overrides[key] = {"config": entries[key], "flag": text}
        entries[key] = text
    return entries


def _out_dir(cfg: SimConfig, args) -> Path:
    out = cfg.out_dir or os.environ.get(OUT_DIR_ENV)
    if not out:
        raise ConfigError(f"no out_dir given (config key, --out-dir or ${OUT_DIR_ENV})", "out_dir")
    path = Path(out)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _config_record(cfg: SimConfig) -> dict:
    return {
        "ti": cfg.ti_path,
        "sg_size": [cfg.sg_height, cfg.sg_width],
        "template": cfg.template,
        "overlap": cfg.overlap,
        "dwt_level": cfg.dwt_level,
        "candidates": cfg.candidates,
        "realizations": cfg.n_realizations,
        "seed": cfg.master_seed,
        "scoring": cfg.scoring,
        "facies_mode": cfg.facies_mode,
        "min_cut": cfg.min_cut,
        "lookahead": cfg.overlap if cfg.lookahead is None else cfg.lookahead,
        "hard_data": len(cfg.hard_data) if cfg.hard_data is not None else 0,
    }


def cmd_simulate(args) -> int:
    entries = _merged_entries(args)
    entropy_seed = False
    if "seed" not in entries:
        if not args.entropy:
            raise ConfigError("missing required key 'seed' (pass --entropy to draw one)", "seed")
        entries["seed"] = str(secrets.randbits(63))
        entropy_seed = True
        log.info("seed drawn from system entropy: %s", entries["seed"])
    cfg = build_config(entries, ".")
    ti = read_grid(cfg.ti_path)
    cfg.validate(ti)
    out = _out_dir(cfg, args)
    log.info("simulating %d realization(s) of %dx%d with %d worker(s)",
             cfg.n_realizations, cfg.sg_height, cfg.sg_width, args.workers)
    results = simulate_ensemble(ti, cfg, workers=args.workers)

    records = []
    total_mismatch = total_hd = 0
    for r, (grid, diag) in enumerate(results, start=1):
        write_grid(grid, out / f"real_{r}.grid")
        write_pgm(grid, out / f"real_{r}.pgm")
        total_mismatch += diag["pre_overwrite_mismatches"]
        total_hd += diag["hard_data"]
        records.append({
            "index": r,
            "file": f"real_{r}.grid",
            "seed": diag["seed"],
            "origin": diag["origin"],
            "direction": diag["direction"],
            "placements": diag["placements"],
            "hard_data_mismatch_rate": diag["mismatch_rate"],
            "pre_overwrite_mismatches": diag["pre_overwrite_mismatches"],
            "reconstruction_failures": diag["reconstruction_failures"],
            "wall_time_s": diag["wall_time_s"],
        })
    manifest = {
        "ccwsim_version": __version__,
        "parameters": _config_record(cfg),
        "seed_from_entropy": entropy_seed,
        "overrides": args.overrides,
        "hard_data_mismatch_rate": total_mismatch / total_hd if total_hd else 0.0,
        "realizations": records,
    }
    with open(out / "manifest.json", "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    log.info("wrote %d realization(s) to %s", len(results), out)
    return 0


_REAL_RE = re.compile(r"^real_(\d+)\.grid$")


def load_realizations(directory) -> List[CategoricalGrid]:
    """All ``real_<r>.grid`` files of a directory, ordered by ``r``."""
    d = Path(directory)
    if not d.is_dir():
        raise ConfigError(f"{d}: not a directory")
    found = []
    for p in d.iterdir():
        m = _REAL_RE.match(p.name)
        if m:
            found.append((int(m.group(1)), p))
    if not found:
        raise ConfigError(f"{d}: no real_<r>.grid files found")
    return [read_grid(p) for _, p in sorted(found)]


def _envelope_rows(lags, ti_vals, ens_vals):
    ens = np.asarray(ens_vals, dtype=np.float64)
    with warnings.catch_warnings():
        # lags undefined in every realization stay NaN
        warnings.simplefilter("ignore", RuntimeWarning)
        mean, lo, hi = np.nanmean(ens, axis=0), np.nanmin(ens, axis=0), np.nanmax(ens, axis=0)
    return [[int(l), t, m, a, b] for l, t, m, a, b in zip(lags, ti_vals, mean, lo, hi)]


def cmd_validate(args) -> int:
    reals = load_realizations(args.realizations_dir)
    ti = read_grid(args.ti)
    out = Path(args.out_dir or os.environ.get(OUT_DIR_ENV) or args.realizations_dir)
    out.mkdir(parents=True, exist_ok=True)
    shape = reals[0].shape
    if any(g.shape != shape for g in reals):
        raise ConfigError("realizations differ in shape")
    nf = max([ti.num_facies] + [g.num_facies for g in reals])
    facies = args.facies if args.facies is not None else min(1, nf - 1)
    limit = min(min(shape), min(ti.shape)) - 1
    max_lag = min(args.max_lag, limit) if args.max_lag else min(64, limit)
    header = ["lag", "ti", "mean", "min", "max"]

    for direction, tag in (("E-W", "ew"), ("N-S", "ns")):
        ti_v = indicator_variogram(ti, facies, direction, max_lag)
        ens = [indicator_variogram(g, facies, direction, max_lag).gamma for g in reals]
        write_csv(out / f"variogram_{tag}.csv", header, _envelope_rows(ti_v.lags, ti_v.gamma, ens))

    directions = ("E-W", "N-S") if args.connectivity_direction == "both" else (args.connectivity_direction,)
    for direction in directions:
        tag = direction.replace("-", "").lower()
        ti_c = connectivity_function(ti, facies, direction, max_lag)
        ens = [connectivity_function(g, facies, direction, max_lag).probability for g in reals]
        write_csv(out / f"connectivity_{tag}.csv", header,
                  _envelope_rows(ti_c.lags, ti_c.probability, ens))

    ti_p = facies_proportions(ti)
    props = [facies_proportions(g) for g in reals]
    rows = []
    for f in range(nf):
        vals = np.array([p.get(f, 0.0) for p in props])
        rows.append([f, ti_p.get(f, 0.0), vals.mean(), vals.min(), vals.max()])
    write_csv(out / "facies_proportions.csv", ["facies", "ti", "mean", "min", "max"], rows)
    write_pgm_plane(ensemble_average(reals, facies), out / "ensemble_average.pgm")
    log.info("validated %d realization(s); metrics in %s", len(reals), out)
    return 0


def cmd_anodi(args) -> int:
    ens_a = load_realizations(args.dir_a)
    ens_b = load_realizations(args.dir_b)
    ti = read_grid(args.ti)
    weights = [float(w) for w in args.weights.split(",")] if args.weights else None
    result = anodi_metric(ens_a, ens_b, ti, levels=args.levels, window=args.window, weights=weights)
    out = Path(args.out_dir or os.environ.get(OUT_DIR_ENV) or ".")
    out.mkdir(parents=True, exist_ok=True)
    write_metrics_csv(result, out / "anodi.csv")
    grids = [ti] + ens_a + ens_b
    labels = ["ti"] + [f"a_{i}" for i in range(1, len(ens_a) + 1)] + \
             [f"b_{i}" for i in range(1, len(ens_b) + 1)]
    coords = classical_mds(js_distance_matrix(grids, args.window))
    write_csv(out / "mds.csv", ["label", "x", "y"],
              [[lab, x, y] for lab, (x, y) in zip(labels, coords.tolist())])
    print(f"r = {result.r:.6f}")
    return 0


def _int_list(text: str) -> List[int]:
    try:
        return [int(v) for v in text.replace(" ", "").split(",") if v]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


BENCH_DEFAULTS = {"template": "32", "overlap": "8", "candidates": "10", "seed": "0",
                  "realizations": "1"}


def run_bench(ti: CategoricalGrid, base: SimConfig, levels: Sequence[int], sizes: Sequence[int],
              repetitions: int, hard_data_count: int = 0) -> List[dict]:
    """Mean and spread of single-realization wall time per (level, SG size).

    Level 1 is always measured since it is the speedup reference.
    """
    levels = sorted(set(levels) | {1})
    rows = []
    for size in sizes:
        hd = None
        if hard_data_count:
            ref_cfg = SimConfig(size, size, base.template, base.overlap, min(levels),
                                base.candidates, scoring=base.scoring, facies_mode=base.facies_mode)
            ref, _ = simulate_one(ti, ref_cfg, mix64(base.master_seed, 0))
            hd = sample_hard_data(ref, hard_data_count, mix64(base.master_seed, 1 << 32))
        times = {}
        for level in levels:
            cfg = SimConfig(size, size, base.template, base.overlap, level, base.candidates,
                            master_seed=base.master_seed, scoring=base.scoring,
                            facies_mode=base.facies_mode, min_cut=base.min_cut, hard_data=hd,
                            lookahead=base.lookahead, verify_reconstruction=0)
            cfg.validate(ti)
            runs = []
            for rep in range(1, repetitions + 1):
                t0 = time.perf_counter()
                simulate_one(ti, cfg, mix64(base.master_seed, rep))
                runs.append(time.perf_counter() - t0)
            times[level] = np.array(runs)
            log.info("level %d, sg %d: mean %.3fs", level, size, times[level].mean())
        for level in levels:
            mean = float(times[level].mean())
            rows.append({
                "level": level,
                "sg": size,
                "mean_s": mean,
                "std_s": float(times[level].std(ddof=1)) if repetitions > 1 else 0.0,
                "speedup_vs_level1": float(times[1].mean()) / mean,
            })
    return rows


def cmd_bench(args) -> int:
    entries = _merged_entries(args)
    for key, value in BENCH_DEFAULTS.items():
        entries.setdefault(key, value)
    entries.setdefault("sg_size", str(max(args.sizes)))
    entries.setdefault("dwt_level", "1")
    if "ti" not in entries:
        raise ConfigError("missing required key 'ti'", "ti")
    base = build_config(entries, ".")
    ti = read_grid(base.ti_path)
    rows = run_bench(ti, base, args.levels, args.sizes, args.repetitions, args.hard_data_count)
    out = Path(args.output) if args.output else _out_dir(base, args) / "bench.csv"
    out.parent.mkdir(parents=True, exist_ok=True)
    cols = ["level", "sg", "mean_s", "std_s", "speedup_vs_level1"]
    write_csv(out, cols, [[r[c] for c in cols] for r in rows])
    for r in rows:
        print(f"level {r['level']} sg {r['sg']}: {r['mean_s']:.3f}s "
              f"(sd {r['std_s']:.3f}) speedup {r['speedup_vs_level1']:.2f}x")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ccwsim", description=__doc__)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="generate realizations")
    _add_config_flags(p)
    p.add_argument("--workers", type=int, default=1, help="parallel realizations")
    p.add_argument("--entropy", action="store_true",
                   help="draw the master seed from system entropy when none is configured")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("validate", help="variogram, connectivity and proportion checks")
    p.add_argument("realizations_dir")
    p.add_argument("--ti", required=True)
    p.add_argument("--facies", type=int, help="facies code analysed (default 1)")
    p.add_argument("--max-lag", type=int, default=0, help="largest lag (default min(64, size-1))")
    p.add_argument("--connectivity-direction", choices=["E-W", "N-S", "both"], default="E-W")
    p.add_argument("--out-dir")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("anodi", help="compare two ensembles by analysis of distance")
    p.add_argument("dir_a")
    p.add_argument("dir_b")
    p.add_argument("--ti", required=True)
    p.add_argument("--levels", type=int, default=3)
    p.add_argument("--window", type=int, default=8)
    p.add_argument("--weights", help="comma-separated per-level weights (default uniform)")
    p.add_argument("--out-dir")
    p.set_defaults(func=cmd_anodi)

    p = sub.add_parser("bench", help="wall time versus Haar level and grid size")
    _add_config_flags(p, skip=("sg_size", "dwt_level", "realizations"))
    p.add_argument("--levels", type=_int_list, default=[1, 2, 3])
    p.add_argument("--sizes", type=_int_list, default=[512])
    p.add_argument("--repetitions", type=int, default=5)
    p.add_argument("--hard-data-count", type=int, default=0,
                   help="condition on this many points sampled from a reference realization")
    p.add_argument("--output", "-o", help="CSV path (default <out_dir>/bench.csv)")
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        return args.func(args)
    except (CCWSimError, OSError) as exc:
        print(f"ccwsim {args.command}: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
