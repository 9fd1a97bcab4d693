"""Validation metrics for categorical realizations.

Indicator variograms and connectivity functions along the grid axes,
ensemble statistics, multi-resolution pattern histograms compared with the
Jensen-Shannon divergence, the ANODI ranking ratio, and classical MDS.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence

import numpy as np
from scipy import ndimage

from .errors import DegeneracyError, DimensionError, EmptyInputError, StructureError
from .grid import CategoricalGrid

DIRECTIONS = ("E-W", "N-S")
FOUR_CONNECTED = np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]])


def _cells(grid) -> np.ndarray:
    return np.asarray(grid.cells if isinstance(grid, CategoricalGrid) else grid)


def _axis(direction: str) -> int:
    if direction == "E-W":
        return 1
    if direction == "N-S":
        return 0
    raise ValueError(f"direction must be one of {DIRECTIONS}, got {direction!r}")


def _pairs(a: np.ndarray, h: int, axis: int):
    if axis == 1:
        return a[:, :-h], a[:, h:]
    return a[:-h, :], a[h:, :]


def _check_lag(shape, axis, max_lag):
    if max_lag < 1 or max_lag >= shape[axis]:
        raise DimensionError(f"max_lag must be in [1, {shape[axis] - 1}], got {max_lag}")


@dataclass
class VariogramSeries:
    direction: str
    facies: int
    lags: np.ndarray
    gamma: np.ndarray
    degenerate: bool = False


@dataclass
class ConnectivitySeries:
    """Probability of connection per lag; NaN marks lags with no facies pairs."""

    direction: str
    facies: int
    lags: np.ndarray
    probability: np.ndarray

    @property
    def defined(self) -> np.ndarray:
        return ~np.isnan(self.probability)


def indicator_variogram(grid, facies: int, direction: str, max_lag: int) -> VariogramSeries:
    """Half mean squared indicator increment for lags ``1..max_lag`` along one axis."""
    a = _cells(grid)
    axis = _axis(direction)
    _check_lag(a.shape, axis, max_lag)
    ind = (a == facies).astype(np.float64)
    gamma = np.empty(max_lag)
    for h in range(1, max_lag + 1):
        tail, head = _pairs(ind, h, axis)
        gamma[h - 1] = 0.5 * np.mean((tail - head) ** 2)
    return VariogramSeries(direction, facies, np.arange(1, max_lag + 1), gamma,
                           degenerate=not ind.any())


def connectivity_function(grid, facies: int, direction: str, max_lag: int) -> ConnectivitySeries:
    """Fraction of facies pairs at each lag that lie in one 4-connected component."""
    a = _cells(grid)
    axis = _axis(direction)
    _check_lag(a.shape, axis, max_lag)
    labels, _ = ndimage.label(a == facies, structure=FOUR_CONNECTED)
    prob = np.full(max_lag, np.nan)
    for h in range(1, max_lag + 1):
        tail, head = _pairs(labels, h, axis)
        both = (tail > 0) & (head > 0)
        n = int(both.sum())
        if n:
            prob[h - 1] = np.sum(both & (tail == head)) / n
    return ConnectivitySeries(direction, facies, np.arange(1, max_lag + 1), prob)


def ensemble_average(ensemble: Sequence, facies: int) -> np.ndarray:
    """Per-cell frequency of ``facies`` across the realizations."""
    if len(ensemble) == 0:
        raise EmptyInputError("empty ensemble")
    arrays = [_cells(g) for g in ensemble]
    shape = arrays[0].shape
    if any(a.shape != shape for a in arrays):
        raise StructureError("realizations differ in shape")
    acc = np.zeros(shape)
    for a in arrays:
        acc += a == facies
    return acc / len(arrays)


@dataclass
class PatternHistogram:
    """Counts of every distinct ``window x window`` block, keyed by its bytes."""

    window: int
    counts: Dict[bytes, int]

    @property
    def total(self) -> int:
        return sum(self.counts.values())


def pattern_histogram(grid, window: int, stride: int = 1) -> PatternHistogram:
    a = _cells(grid)
    if window < 1 or window > min(a.shape):
        raise DimensionError(f"window {window} does not fit grid of shape {a.shape}")
    if stride < 1:
        raise ValueError("stride must be >= 1")
    # Codes are stored as single bytes, giving a canonical row-major key.
    blocks = np.lib.stride_tricks.sliding_window_view(a.astype(np.uint8), (window, window))
    blocks = blocks[::stride, ::stride].reshape(-1, window * window)
    blocks = np.ascontiguousarray(blocks)
    keyed = blocks.view(np.dtype((np.void, window * window))).ravel()
    uniq, counts = np.unique(keyed, return_counts=True)
    return PatternHistogram(window, {u.tobytes(): int(c) for u, c in zip(uniq, counts)})


def _kl_to_mixture(p: np.ndarray, m: np.ndarray) -> float:
    nz = p > 0
    return float(np.sum(p[nz] * np.log2(p[nz] / m[nz])))


def js_divergence(p: PatternHistogram, q: PatternHistogram) -> float:
    """Base-2 Jensen-Shannon divergence between two pattern histograms, in [0, 1]."""
    if p.window != q.window:
        raise StructureError(f"window sizes differ: {p.window} vs {q.window}")
    if not p.counts or not q.counts:
        raise EmptyInputError("empty pattern histogram")
    keys = sorted(set(p.counts) | set(q.counts))
    pv = np.array([p.counts.get(k, 0) for k in keys], dtype=np.float64)
    qv = np.array([q.counts.get(k, 0) for k in keys], dtype=np.float64)
    return js_from_vectors(pv, qv)


def js_from_vectors(p, q) -> float:
    """JS divergence of two (unnormalized) nonnegative weight vectors on a common support."""
    pv = np.asarray(p, dtype=np.float64)
    qv = np.asarray(q, dtype=np.float64)
    pv = pv / pv.sum()
    qv = qv / qv.sum()
    m = 0.5 * (pv + qv)
    js = 0.5 * _kl_to_mixture(pv, m) + 0.5 * _kl_to_mixture(qv, m)
    return min(max(js, 0.0), 1.0)


def majority_downsample(grid, factor: int) -> np.ndarray:
    """Block-majority coarsening; ties go to the lowest code.

    Trailing rows and columns that do not fill a whole block are dropped.
    """
    a = _cells(grid)
    if factor == 1:
        return a.copy()
    h, w = (a.shape[0] // factor), (a.shape[1] // factor)
    if h == 0 or w == 0:
        raise DimensionError(f"grid {a.shape} too small for factor {factor}")
    blocks = a[:h * factor, :w * factor].reshape(h, factor, w, factor).transpose(0, 2, 1, 3)
    blocks = blocks.reshape(h, w, factor * factor)
    n_codes = int(a.max()) + 1
    counts = np.stack([(blocks == c).sum(axis=2) for c in range(n_codes)], axis=-1)
    return np.argmax(counts, axis=-1).astype(a.dtype)


@dataclass
class AnodiLevel:
    level: int
    between_a: float
    between_b: float
    within_a: float
    within_b: float

    @property
    def between_ratio(self) -> float:
        return self.between_a / self.between_b

    @property
    def within_ratio(self) -> float:
        return self.within_a / self.within_b

    @property
    def ratio(self) -> float:
        return self.between_ratio / self.within_ratio


@dataclass
class AnodiResult:
    """Per-level ANODI distances and the weighted aggregate ratio of ``A`` over ``B``."""

    levels: List[AnodiLevel]
    weights: List[float]
    window: int

    @property
    def r(self) -> float:
        return float(sum(w * lv.ratio for w, lv in zip(self.weights, self.levels)))


def _mean_pairwise(hists: Sequence[PatternHistogram]) -> float:
    vals = [js_divergence(a, b) for a, b in itertools.combinations(hists, 2)]
    return float(np.mean(vals))


def anodi(ensemble_a: Sequence, ensemble_b: Sequence, ti, levels: int = 3, window: int = 8,
          weights: Optional[Sequence[float]] = None) -> AnodiResult:
    """Analysis of distance between two ensembles generated from one TI.

    At resolution level ``p`` every grid is majority-coarsened by ``2**(p-1)``.
    Between-realization variability of an ensemble is its mean pairwise JS
    divergence; within-realization variability is the mean JS divergence of
    its realizations to the TI. The level ratio is
    ``(between_A / between_B) / (within_A / within_B)``.
    """
    if len(ensemble_a) < 2 or len(ensemble_b) < 2:
        raise EmptyInputError("ANODI needs at least two realizations per ensemble")
    if weights is None:
        weights = [1.0 / levels] * levels
    if len(weights) != levels:
        raise StructureError(f"{len(weights)} weights for {levels} levels")
    out = []
    for p in range(1, levels + 1):
        f = 1 << (p - 1)
        ti_h = pattern_histogram(majority_downsample(ti, f), window)
        ha = [pattern_histogram(majority_downsample(g, f), window) for g in ensemble_a]
        hb = [pattern_histogram(majority_downsample(g, f), window) for g in ensemble_b]
        lv = AnodiLevel(
            level=p,
            between_a=_mean_pairwise(ha),
            between_b=_mean_pairwise(hb),
            within_a=float(np.mean([js_divergence(h, ti_h) for h in ha])),
            within_b=float(np.mean([js_divergence(h, ti_h) for h in hb])),
        )
        if min(lv.within_a, lv.within_b) == 0.0:
            raise DegeneracyError(f"level {p}: realizations identical to the training image")
        if min(lv.between_a, lv.between_b) == 0.0:
            raise DegeneracyError(f"level {p}: realizations within an ensemble are identical")
        out.append(lv)
    return AnodiResult(out, list(weights), window)


def js_distance_matrix(grids: Sequence, window: int = 8, factor: int = 1) -> np.ndarray:
    """Symmetric matrix of pairwise JS divergences between grids."""
    hists = [pattern_histogram(majority_downsample(g, factor), window) for g in grids]
    n = len(hists)
    d = np.zeros((n, n))
    for i, j in itertools.combinations(range(n), 2):
        d[i, j] = d[j, i] = js_divergence(hists[i], hists[j])
    return d


def classical_mds(distances, n_dims: int = 2) -> np.ndarray:
    """Torgerson scaling of a distance matrix to ``n_dims`` coordinates."""
    d = np.asarray(distances, dtype=np.float64)
    if d.ndim != 2 or d.shape[0] != d.shape[1]:
        raise StructureError(f"distance matrix must be square, got {d.shape}")
    if not np.allclose(d, d.T, atol=1e-12, rtol=0):
        raise StructureError("distance matrix is not symmetric")
    if np.any(d < 0):
        raise StructureError("distance matrix has negative entries")
    if np.any(np.diag(d) != 0):
        raise StructureError("distance matrix diagonal must be zero")
    n = d.shape[0]
    centering = np.eye(n) - np.ones((n, n)) / n
    b = -0.5 * centering @ (d ** 2) @ centering
    evals, evecs = np.linalg.eigh(b)
    idx = np.argsort(evals)[::-1][:n_dims]
    evals = np.clip(evals[idx], 0.0, None)
    coords = evecs[:, idx] * np.sqrt(evals)
    if coords.shape[1] < n_dims:
        coords = np.hstack([coords, np.zeros((n, n_dims - coords.shape[1]))])
    return coords
