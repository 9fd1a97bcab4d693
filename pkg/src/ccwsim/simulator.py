"""Patch-based raster-path simulation driven by wavelet-space cross-correlation.

A realization is built by sweeping a square template over the simulation
grid (SG). At each stop the already simulated overlap region (OR) is
transformed to the chosen Haar level, correlated against the training image
(TI) coefficients, and one of the ``K`` best TI patterns is pasted.

Candidate locations are block-aligned in the fine grid, so the TI crop at
``coarse_to_fine(location)`` is exactly the inverse transform of the cropped
coefficient pyramid. The simulator pastes the crop directly and spot-checks
that equivalence on a few placements per realization.
"""
from __future__ import annotations

import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .errors import ConfigError, SequencingError, StructureError
from .grid import CategoricalGrid, HardDataSet, to_indicator_planes
from .matcher import (
    SCORING_MODES,
    CandidateSet,
    multichannel_score_map,
    select_conditional,
    select_unconditional,
    top_k,
)
from .wavelet import approximation, coarse_to_fine, crop_pyramid, dwt2, idwt2

log = logging.getLogger(__name__)

FACIES_MODES = ("indicator", "raw-codes")
CORNERS = ("top-left", "top-right", "bottom-left", "bottom-right")
DIRECTIONS = ("row-major", "column-major")
OR_SHAPES = ("none", "vertical-strip", "horizontal-strip", "L-shaped")

UNSIMULATED = -1
MASK64 = (1 << 64) - 1


def mix64(master_seed: int, index: int) -> int:
    """Derive the seed of stream ``index`` from ``master_seed``.

    SplitMix64: advance the master state by ``index`` golden-ratio increments,
    then apply the SplitMix64 finalizer. Streams are independent of how they
    are scheduled.
    """
    z = (master_seed + index * 0x9E3779B97F4A7C15) & MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


@dataclass
class SimConfig:
    """User parameters of a simulation run.

    ``lookahead`` sets how far past the template (away from the path origin)
    hard data are checked during conditional candidate search; ``None`` means
    one overlap width. ``verify_reconstruction`` is the number of placements per
    realization on which the crop-versus-inverse-transform equivalence is
    re-checked.
    """

    sg_height: int
    sg_width: int
    template: int
    overlap: int
    dwt_level: int
    candidates: int
    n_realizations: int = 1
    master_seed: int = 0
    scoring: str = "raw"
    facies_mode: str = "indicator"
    min_cut: bool = False
    hard_data: Optional[HardDataSet] = None
    lookahead: Optional[int] = None
    verify_reconstruction: int = 10
    ti_path: Optional[str] = None
    out_dir: Optional[str] = None

    @property
    def step(self) -> int:
        return self.template - self.overlap

    @property
    def block(self) -> int:
        return 1 << self.dwt_level

    def validate(self, ti: CategoricalGrid | None = None) -> "SimConfig":
        T, OV, J = self.template, self.overlap, self.dwt_level
        if J < 0:
            raise ConfigError("dwt_level must be >= 0", "dwt_level")
        if T < 1:
            raise ConfigError("template must be positive", "template")
        if not 0 < OV < T:
            raise ConfigError(f"overlap must satisfy 0 < overlap < template, got {OV}", "overlap")
        b = self.block
        if T % b:
            raise ConfigError(f"template {T} is not divisible by 2**dwt_level = {b}", "template")
        if OV % b:
            raise ConfigError(f"overlap {OV} is not divisible by 2**dwt_level = {b}", "overlap")
        if self.candidates < 1:
            raise ConfigError("candidates must be >= 1", "candidates")
        if self.n_realizations < 1:
            raise ConfigError("realizations must be >= 1", "realizations")
        if T > min(self.sg_height, self.sg_width):
            raise ConfigError(
                f"template {T} exceeds simulation grid {self.sg_height}x{self.sg_width}", "template"
            )
        if self.scoring not in SCORING_MODES:
            raise ConfigError(f"scoring must be one of {SCORING_MODES}", "scoring")
        if self.facies_mode not in FACIES_MODES:
            raise ConfigError(f"facies_mode must be one of {FACIES_MODES}", "facies_mode")
        if self.lookahead is not None and self.lookahead < 0:
            raise ConfigError("lookahead must be >= 0", "lookahead")
        if ti is not None:
            if T > min(ti.shape):
                raise ConfigError(f"template {T} exceeds training image {ti.height}x{ti.width}",
                                  "template")
            if ti.height % b or ti.width % b:
                raise ConfigError(
                    f"training image {ti.height}x{ti.width} is not divisible by 2**dwt_level = {b}",
                    "dwt_level",
                )
        if self.hard_data is not None:
            nf = ti.num_facies if ti is not None else np.iinfo(np.int16).max
            try:
                self.hard_data.validate((self.sg_height, self.sg_width), nf)
            except (IndexError, ValueError) as exc:
                raise ConfigError(str(exc), "hard_data") from exc
        return self


@dataclass(frozen=True)
class Placement:
    top: int
    left: int
    or_shape: str
    index: Tuple[int, int] = (0, 0)


@dataclass
class PlacementPlan:
    """Ordered template placements over the (possibly enlarged) working grid.

    The working grid is the SG enlarged on the side away from the origin so
    that every placement lies on the ``template - overlap`` stride;
    ``sg_offset`` locates the SG inside it.
    """

    placements: List[Placement]
    origin: str
    direction: str
    step: int
    template: int
    overlap: int
    working_shape: Tuple[int, int]
    sg_offset: Tuple[int, int]

    def __len__(self):
        return len(self.placements)

    def __iter__(self):
        return iter(self.placements)

    @property
    def or_sides(self) -> Tuple[str, str]:
        """Sides of a template facing earlier placements: (vertical strip, horizontal strip)."""
        vertical = "left" if self.origin.endswith("left") else "right"
        horizontal = "top" if self.origin.startswith("top") else "bottom"
        return vertical, horizontal

    def sides_of(self, p: Placement) -> Tuple[str, ...]:
        vertical, horizontal = self.or_sides
        return {
            "none": (),
            "vertical-strip": (vertical,),
            "horizontal-strip": (horizontal,),
            "L-shaped": (vertical, horizontal),
        }[p.or_shape]


def _axis_count(size: int, template: int, step: int) -> int:
    return -(-(size - template) // step) + 1


def plan_raster_path(cfg: SimConfig, rng: np.random.Generator) -> PlacementPlan:
    """Draw an origin corner and scan direction, then lay out placements."""
    T, step = cfg.template, cfg.step
    if T > cfg.sg_height or T > cfg.sg_width:
        raise ConfigError(
            f"template {T} exceeds simulation grid {cfg.sg_height}x{cfg.sg_width}", "template"
        )
    origin = CORNERS[int(rng.integers(4))]
    direction = DIRECTIONS[int(rng.integers(2))]
    n_rows = _axis_count(cfg.sg_height, T, step)
    n_cols = _axis_count(cfg.sg_width, T, step)
    hp, wp = T + (n_rows - 1) * step, T + (n_cols - 1) * step
    from_top = origin.startswith("top")
    from_left = origin.endswith("left")
    sg_offset = (0 if from_top else hp - cfg.sg_height, 0 if from_left else wp - cfg.sg_width)

    if direction == "row-major":
        order = [(i, j) for i in range(n_rows) for j in range(n_cols)]
    else:
        order = [(i, j) for j in range(n_cols) for i in range(n_rows)]
    placements = []
    for i, j in order:
        top = i * step if from_top else hp - T - i * step
        left = j * step if from_left else wp - T - j * step
        if i == 0 and j == 0:
            shape = "none"
        elif i == 0:
            shape = "vertical-strip"
        elif j == 0:
            shape = "horizontal-strip"
        else:
            shape = "L-shaped"
        placements.append(Placement(top, left, shape, (i, j)))
    return PlacementPlan(placements, origin, direction, step, T, cfg.overlap, (hp, wp), sg_offset)


def or_mask(template: int, overlap: int, sides: Sequence[str]) -> np.ndarray:
    """0/1 mask of the overlap strips on the given template sides."""
    mask = np.zeros((template, template))
    for side in sides:
        if side == "left":
            mask[:, :overlap] = 1.0
        elif side == "right":
            mask[:, template - overlap:] = 1.0
        elif side == "top":
            mask[:overlap, :] = 1.0
        elif side == "bottom":
            mask[template - overlap:, :] = 1.0
        else:
            raise ValueError(f"unknown side {side!r}")
    return mask


def _channels(cells: np.ndarray, num_facies: int, facies_mode: str) -> List[np.ndarray]:
    if facies_mode == "indicator":
        return [(cells == f).astype(np.float64) for f in range(num_facies)]
    return [cells.astype(np.float64)]


def extract_or(work: np.ndarray, placement: Placement, plan: PlacementPlan, num_facies: int,
               facies_mode: str = "indicator") -> Tuple[List[np.ndarray], np.ndarray]:
    """Overlap-region planes and fine mask for one placement.

    ``work`` is the working grid with ``-1`` marking unsimulated cells. Returns
    one ``T x T`` plane per scoring channel, holding the simulated values on
    the OR support and 0 elsewhere.
    """
    T = plan.template
    mask = or_mask(T, plan.overlap, plan.sides_of(placement))
    window = work[placement.top:placement.top + T, placement.left:placement.left + T]
    if window.shape != (T, T):
        raise SequencingError(f"placement {placement} leaves the working grid")
    support = mask > 0
    if np.any(window[support] == UNSIMULATED):
        raise SequencingError(f"overlap region of placement {placement} is not fully simulated")
    masked = np.where(support, window, 0)
    planes = [c * mask for c in _channels(masked, num_facies, facies_mode)]
    return planes, mask


def _seam_vertical(cost: np.ndarray) -> Tuple[np.ndarray, float]:
    """Minimum-cost top-to-bottom path with unit sideways moves; returns column per row."""
    h, w = cost.shape
    acc = cost.astype(np.float64).copy()
    for i in range(1, h):
        prev = acc[i - 1]
        left = np.concatenate(([np.inf], prev[:-1]))
        right = np.concatenate((prev[1:], [np.inf]))
        acc[i] += np.minimum(np.minimum(left, prev), right)
    seam = np.empty(h, dtype=np.int64)
    seam[-1] = int(np.argmin(acc[-1]))
    for i in range(h - 2, -1, -1):
        j = seam[i + 1]
        lo, hi = max(j - 1, 0), min(j + 2, w)
        seam[i] = lo + int(np.argmin(acc[i, lo:hi]))
    return seam, float(acc[-1, seam[-1]])


_TO_LEFT = {
    "left": (lambda a: a, lambda a: a),
    "right": (lambda a: a[:, ::-1], lambda a: a[:, ::-1]),
    "top": (lambda a: a.T, lambda a: a.T),
    "bottom": (lambda a: a[::-1, :].T, lambda a: a.T[::-1, :]),
}


def min_cut_stitch(existing, incoming, sides: Sequence[str], overlap: int) -> Tuple[np.ndarray, float]:
    """Blend an incoming patch into existing content along minimum-error seams.

    For each OR side (vertical strips first, then horizontal), a seam through the
    band of width ``overlap`` minimizes the number of cells where existing and
    incoming disagree. Cells between the seam and the template edge on that side
    keep their existing values. Returns the stitched patch and the summed seam cost.
    """
    ex = np.asarray(existing.cells if isinstance(existing, CategoricalGrid) else existing)
    out = np.array(incoming.cells if isinstance(incoming, CategoricalGrid) else incoming)
    if ex.shape != out.shape:
        raise StructureError(f"existing {ex.shape} and incoming {out.shape} differ in shape")
    ordered = [s for s in sides if s in ("left", "right")] + [s for s in sides if s in ("top", "bottom")]
    total = 0.0
    for side in ordered:
        fwd, back = _TO_LEFT[side]
        e, o = fwd(ex), fwd(out).copy()
        band_e, band_o = e[:, :overlap], o[:, :overlap]
        seam, cost = _seam_vertical(band_e != band_o)
        total += cost
        keep = np.arange(overlap)[None, :] < seam[:, None]
        band_o[keep] = band_e[keep]
        o[:, :overlap] = band_o
        out = np.ascontiguousarray(back(o))
    return out, total


@dataclass
class _Prepared:
    ti: CategoricalGrid
    pyramids: list
    approx: List[np.ndarray]
    energy: Optional[np.ndarray]


def _prepare(ti: CategoricalGrid, cfg: SimConfig) -> _Prepared:
    pyramids = [dwt2(c, cfg.dwt_level) for c in _channels(ti.cells, ti.num_facies, cfg.facies_mode)]
    approx = [p.approx for p in pyramids]
    energy = sum(a * a for a in approx) if cfg.scoring == "normalized" else None
    return _Prepared(ti, pyramids, approx, energy)


def reconstruct_pattern(pyramids, location: Tuple[int, int], size: int, facies_mode: str) -> np.ndarray:
    """Inverse transform of the TI pyramids cropped at a coarse location.

    Indicator channels are collapsed by argmax; raw codes are rounded.
    """
    planes = [idwt2(crop_pyramid(p, location[0], location[1], size, size)) for p in pyramids]
    if facies_mode == "indicator":
        return np.argmax(np.stack(planes), axis=0)
    return np.rint(planes[0]).astype(np.int64)


def _footprint_data(hd: Optional[Tuple[np.ndarray, np.ndarray, np.ndarray]], top: int, left: int,
                    T: int, extend: Dict[str, int]) -> HardDataSet:
    if hd is None:
        return HardDataSet()
    rows, cols, fac = hd
    r0, r1 = top - extend["top"], top + T + extend["bottom"]
    c0, c1 = left - extend["left"], left + T + extend["right"]
    sel = (rows >= r0) & (rows < r1) & (cols >= c0) & (cols < c1)
    if not sel.any():
        return HardDataSet()
    return HardDataSet(tuple(zip((rows[sel] - top).tolist(), (cols[sel] - left).tolist(),
                                 fac[sel].tolist())))


def simulate_one(ti: CategoricalGrid, cfg: SimConfig, seed: int,
                 prepared: _Prepared | None = None,
                 trace: list | None = None) -> Tuple[CategoricalGrid, dict]:
    """Simulate a single realization; returns the grid and a diagnostics dict.

    If ``trace`` is a list, one ``(placement, fine TI location, pasted patch)``
    tuple per placement is appended to it, with placements in working-grid
    coordinates (see ``diagnostics["sg_offset"]``).
    """
    t0 = time.perf_counter()
    cfg.validate(ti)
    rng = np.random.default_rng(seed)
    prep = prepared if prepared is not None else _prepare(ti, cfg)
    T, J, K = cfg.template, cfg.dwt_level, cfg.candidates
    b = cfg.block
    tc = T // b
    plan = plan_raster_path(cfg, rng)
    hp, wp = plan.working_shape
    off_r, off_c = plan.sg_offset

    n_pos_r = ti.height // b - tc + 1
    n_pos_c = ti.width // b - tc + 1
    n_pos = n_pos_r * n_pos_c

    hd = None
    if cfg.hard_data is not None and len(cfg.hard_data):
        hd = (cfg.hard_data.rows + off_r, cfg.hard_data.cols + off_c, cfg.hard_data.facies)
    lookahead = cfg.overlap if cfg.lookahead is None else cfg.lookahead
    vertical, horizontal = plan.or_sides
    extend = {"left": 0, "right": 0, "top": 0, "bottom": 0}
    extend["right" if vertical == "left" else "left"] = lookahead
    extend["bottom" if horizontal == "top" else "top"] = lookahead

    check_rng = np.random.default_rng([seed & MASK64, 1])
    n_check = min(cfg.verify_reconstruction, len(plan))
    check_at = set(check_rng.choice(len(plan), size=n_check, replace=False).tolist()) if n_check else set()
    recon_failures = 0

    work = np.full((hp, wp), UNSIMULATED, dtype=np.int16)
    search_mismatches = 0
    seam_cost = 0.0
    for k, p in enumerate(plan):
        local_hd = _footprint_data(hd, p.top, p.left, T, extend)
        if p.or_shape == "none":
            if len(local_hd):
                flat = rng.choice(n_pos, size=min(K, n_pos), replace=False)
                cands = CandidateSet([(int(f // n_pos_c), int(f % n_pos_c)) for f in flat],
                                     [0.0] * len(flat))
                loc, mism = select_conditional(cands, local_hd, ti, J)
                search_mismatches += mism
            else:
                f = int(rng.integers(n_pos))
                loc = (f // n_pos_c, f % n_pos_c)
        else:
            planes, mask = extract_or(work, p, plan, ti.num_facies, cfg.facies_mode)
            or_approx = [approximation(pl, J) for pl in planes]
            coarse_mask = mask[::b, ::b]
            scores = multichannel_score_map(prep.approx, or_approx, coarse_mask,
                                            scoring=cfg.scoring, ti_energy=prep.energy)
            cands = top_k(scores, K)
            if len(local_hd):
                loc, mism = select_conditional(cands, local_hd, ti, J)
                search_mismatches += mism
            else:
                loc = select_unconditional(cands, rng)
        r, c = coarse_to_fine(loc, J)
        patch = ti.cells[r:r + T, c:c + T]
        if k in check_at:
            rebuilt = reconstruct_pattern(prep.pyramids, loc, tc, cfg.facies_mode)
            if not np.array_equal(rebuilt, patch):
                recon_failures += 1
        window = work[p.top:p.top + T, p.left:p.left + T]
        if cfg.min_cut and p.or_shape != "none":
            patch, cost = min_cut_stitch(window, patch, plan.sides_of(p), cfg.overlap)
            seam_cost += cost
        window[...] = patch
        if trace is not None:
            trace.append((p, (r, c), np.array(patch)))

    sg = work[off_r:off_r + cfg.sg_height, off_c:off_c + cfg.sg_width].copy()
    if np.any(sg == UNSIMULATED):
        raise SequencingError("simulation grid not fully covered by the raster path")

    pre_mismatch = 0
    n_hd = 0
    if cfg.hard_data is not None and len(cfg.hard_data):
        rows, cols, fac = cfg.hard_data.rows, cfg.hard_data.cols, cfg.hard_data.facies
        n_hd = len(rows)
        pre_mismatch = int(np.sum(sg[rows, cols] != fac))
        sg[rows, cols] = fac

    diagnostics = {
        "seed": int(seed),
        "origin": plan.origin,
        "direction": plan.direction,
        "placements": len(plan),
        "working_shape": list(plan.working_shape),
        "sg_offset": list(plan.sg_offset),
        "hard_data": n_hd,
        "pre_overwrite_mismatches": pre_mismatch,
        "mismatch_rate": pre_mismatch / n_hd if n_hd else 0.0,
        "search_mismatches": search_mismatches,
        "reconstruction_checks": n_check,
        "reconstruction_failures": recon_failures,
        "seam_cost": seam_cost,
        "wall_time_s": time.perf_counter() - t0,
    }
    return CategoricalGrid(sg, ti.num_facies), diagnostics


def realization_seed(cfg: SimConfig, r: int) -> int:
    """Seed of realization ``r`` (1-based)."""
    return mix64(cfg.master_seed, r)


def _run_one(args):
    ti, cfg, r = args
    return simulate_one(ti, cfg, realization_seed(cfg, r))


def simulate_ensemble(ti: CategoricalGrid, cfg: SimConfig, workers: int = 1
                      ) -> List[Tuple[CategoricalGrid, dict]]:
    """All ``cfg.n_realizations`` realizations, ordered by index.

    Each realization depends only on its own derived seed, so the result is
    identical for any ``workers`` count.
    """
    cfg.validate(ti)
    jobs = [(ti, cfg, r) for r in range(1, cfg.n_realizations + 1)]
    if workers <= 1 or len(jobs) == 1:
        prep = _prepare(ti, cfg)
        return [simulate_one(ti, cfg, realization_seed(cfg, r), prep) for _, _, r in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_run_one, jobs))


def sample_hard_data(reference: CategoricalGrid, n: int, seed: int) -> HardDataSet:
    """Hard data drawn from a reference realization, as done for conditioning tests."""
    return HardDataSet.sample_from(reference, n, np.random.default_rng(seed))


def with_hard_data(cfg: SimConfig, hard_data: Optional[HardDataSet]) -> SimConfig:
    return replace(cfg, hard_data=hard_data)
