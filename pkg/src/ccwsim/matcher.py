"""Cross-correlation scoring in wavelet-approximation space and candidate selection."""
from __future__ import annotations

from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np
from scipy.signal import fftconvolve

from .errors import DimensionError, EmptyInputError, StructureError
from .grid import CategoricalGrid, HardDataSet
from .wavelet import coarse_to_fine

SCORING_MODES = ("raw", "normalized")


@dataclass
class ScoreMap:
    """Similarity value for every valid template placement in coefficient space."""

    scores: np.ndarray

    @property
    def shape(self):
        return self.scores.shape


@dataclass
class CandidateSet:
    """Best placements, ordered by descending score."""

    locations: List[Tuple[int, int]]
    scores: List[float]

    def __len__(self):
        return len(self.locations)

    def __iter__(self):
        return iter(zip(self.locations, self.scores))

    @property
    def entries(self):
        return list(zip(self.locations, self.scores))


def _check_template(ti_approx: np.ndarray, tpl: np.ndarray, mask: np.ndarray | None):
    if ti_approx.ndim != 2 or tpl.ndim != 2:
        raise DimensionError("score maps need 2D inputs")
    if tpl.shape[0] > ti_approx.shape[0] or tpl.shape[1] > ti_approx.shape[1]:
        raise DimensionError(
            f"template {tpl.shape} larger than training image coefficients {ti_approx.shape}"
        )
    if mask is not None and mask.shape != tpl.shape:
        raise StructureError(f"mask shape {mask.shape} != template shape {tpl.shape}")


def _correlate_direct(image: np.ndarray, tpl: np.ndarray) -> np.ndarray:
    """Sliding product-sum, accumulated one template cell at a time.

    Only nonzero template cells are visited, which is what makes sparse
    L-shaped overlap templates cheap.
    """
    th, tw = tpl.shape
    oh = image.shape[0] - th + 1
    ow = image.shape[1] - tw + 1
    out = np.zeros((oh, ow))
    rows, cols = np.nonzero(tpl)
    for s, t in zip(rows.tolist(), cols.tolist()):
        out += tpl[s, t] * image[s:s + oh, t:t + ow]
    return out


def _correlate_fft(image: np.ndarray, tpl: np.ndarray) -> np.ndarray:
    return fftconvolve(image, tpl[::-1, ::-1], mode="valid")


_METHODS = {"direct": _correlate_direct, "fft": _correlate_fft}


def ccw_score_map(ti_approx, or_approx, or_mask=None, method: str = "direct") -> ScoreMap:
    """Cross-correlate TI approximation coefficients with an overlap template.

    ``score[x, y] = sum_{s,t} ti_approx[x + s, y + t] * or_approx[s, t]`` over the
    cells where ``or_mask`` is 1. ``or_approx`` is expected to be zero outside the
    mask already; the mask is applied anyway so the contract holds regardless.
    """
    ti_approx = np.asarray(ti_approx, dtype=np.float64)
    tpl = np.asarray(or_approx, dtype=np.float64)
    mask = None if or_mask is None else np.asarray(or_mask, dtype=np.float64)
    _check_template(ti_approx, tpl, mask)
    if mask is not None:
        tpl = tpl * mask
    try:
        correlate = _METHODS[method]
    except KeyError:
        raise ValueError(f"unknown correlation method {method!r}") from None
    return ScoreMap(correlate(ti_approx, tpl))


def multichannel_score_map(ti_channels: Sequence[np.ndarray], or_channels: Sequence[np.ndarray],
                           or_mask, scoring: str = "raw", method: str = "direct",
                           ti_energy: np.ndarray | None = None) -> ScoreMap:
    """Sum of per-channel scores, optionally normalized by local TI energy.

    With ``scoring="normalized"`` the summed product-sum is divided by the square
    root of the TI coefficient energy under the mask at each placement.
    ``ti_energy`` may be passed in as ``sum_f ti_channels[f] ** 2`` to avoid
    recomputing it per call.
    """
    if len(ti_channels) != len(or_channels):
        raise StructureError(f"{len(ti_channels)} TI channels vs {len(or_channels)} OR channels")
    if scoring not in SCORING_MODES:
        raise ValueError(f"scoring must be one of {SCORING_MODES}, got {scoring!r}")
    mask = np.asarray(or_mask, dtype=np.float64)
    total = None
    for ti_c, or_c in zip(ti_channels, or_channels):
        s = ccw_score_map(ti_c, or_c, mask, method=method).scores
        total = s if total is None else total + s
    if scoring == "normalized":
        if ti_energy is None:
            ti_energy = sum(np.asarray(c, dtype=np.float64) ** 2 for c in ti_channels)
        local = _METHODS[method](ti_energy, mask)
        norm = np.sqrt(np.maximum(local, 0.0))
        with np.errstate(divide="ignore", invalid="ignore"):
            total = np.where(norm > 0, total / norm, 0.0)
    return ScoreMap(total)


def top_k(score_map: ScoreMap, k: int) -> CandidateSet:
    """The ``k`` best locations; equal scores keep row-major order."""
    if k < 1:
        raise ValueError("k must be >= 1")
    flat = np.asarray(score_map.scores, dtype=np.float64).ravel()
    if flat.size == 0:
        raise EmptyInputError("empty score map")
    if k < flat.size:
        threshold = np.partition(flat, flat.size - k)[flat.size - k]
        pool = np.flatnonzero(flat >= threshold)
    else:
        pool = np.arange(flat.size)
    # lexsort: last key is primary
    order = pool[np.lexsort((pool, -flat[pool]))][:k]
    width = score_map.scores.shape[1]
    locations = [(int(i // width), int(i % width)) for i in order]
    return CandidateSet(locations, flat[order].tolist())


def select_unconditional(cands: CandidateSet, rng: np.random.Generator) -> Tuple[int, int]:
    if len(cands) == 0:
        raise EmptyInputError("no candidates to draw from")
    return cands.locations[int(rng.integers(len(cands)))]


def count_mismatches(cands: CandidateSet, hard_data: HardDataSet, ti: CategoricalGrid,
                     levels: int) -> np.ndarray:
    """Hard-data disagreements of every candidate's TI pattern.

    ``hard_data`` coordinates are relative to the template's top-left corner and
    may extend beyond the template itself (look-ahead data); data whose mapped
    TI cell falls outside the TI are not counted.
    """
    if len(hard_data) == 0 or len(cands) == 0:
        return np.zeros(len(cands), dtype=np.int64)
    fine = np.array([coarse_to_fine(loc, levels) for loc in cands.locations], dtype=np.int64)
    rr = fine[:, :1] + hard_data.rows[None, :]
    cc = fine[:, 1:] + hard_data.cols[None, :]
    inside = (rr >= 0) & (rr < ti.height) & (cc >= 0) & (cc < ti.width)
    vals = ti.cells[np.clip(rr, 0, ti.height - 1), np.clip(cc, 0, ti.width - 1)]
    return np.sum(inside & (vals != hard_data.facies[None, :]), axis=1)


def select_conditional(cands: CandidateSet, hard_data: HardDataSet, ti: CategoricalGrid,
                       levels: int) -> Tuple[Tuple[int, int], int]:
    """Scan candidates in score order for the first one honoring the hard data.

    Returns ``(location, mismatches)``. When no candidate agrees with every
    datum, the one with the fewest disagreements wins; among those the better
    scored (earlier) one.
    """
    if len(cands) == 0:
        raise EmptyInputError("no candidates to search")
    mism = count_mismatches(cands, hard_data, ti, levels)
    best = int(np.argmin(mism))  # argmin returns the first minimum, i.e. highest score
    return cands.locations[best], int(mism[best])
