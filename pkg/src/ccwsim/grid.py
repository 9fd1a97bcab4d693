"""Categorical and real-valued 2D grids.

Grids are stored row-major with ``(row, col)`` addressing and row 0 at the
top. A real-valued plane is simply a 2D ``float64`` numpy array; the
categorical grid wraps an integer array together with the number of facies
it may legally contain.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Sequence, Tuple

import numpy as np

from .errors import BoundsError, DimensionError, EmptyInputError, StructureError

RealPlane = np.ndarray

CELL_DTYPE = np.int16


@dataclass(frozen=True, eq=False)
class CategoricalGrid:
    """2D lattice of dense facies codes ``0 .. num_facies - 1``.

    The cell array is made read-only on construction; use :func:`paste` or
    :meth:`to_array` to derive modified grids.
    """

    cells: np.ndarray
    num_facies: int

    def __post_init__(self):
        arr = np.array(self.cells, dtype=CELL_DTYPE, copy=True)
        if arr.ndim != 2:
            raise DimensionError(f"grid must be 2D, got shape {arr.shape}")
        if self.num_facies < 1:
            raise StructureError("num_facies must be >= 1")
        if arr.size and (arr.min() < 0 or arr.max() >= self.num_facies):
            raise StructureError(
                f"cell codes must lie in [0, {self.num_facies}), "
                f"found range [{arr.min()}, {arr.max()}]"
            )
        arr.setflags(write=False)
        object.__setattr__(self, "cells", arr)

    @property
    def height(self) -> int:
        return self.cells.shape[0]

    @property
    def width(self) -> int:
        return self.cells.shape[1]

    @property
    def shape(self) -> Tuple[int, int]:
        return self.cells.shape

    def to_array(self) -> np.ndarray:
        """Writable copy of the cell codes."""
        return self.cells.copy()

    def __eq__(self, other):
        if not isinstance(other, CategoricalGrid):
            return NotImplemented
        return self.num_facies == other.num_facies and np.array_equal(self.cells, other.cells)

    def __repr__(self):
        return f"CategoricalGrid({self.height}x{self.width}, num_facies={self.num_facies})"

    @classmethod
    def from_labels(cls, labels) -> Tuple["CategoricalGrid", Dict[int, int]]:
        """Remap arbitrary integer labels to dense codes.

        Labels are sorted ascending and assigned codes 0, 1, ... The returned
        mapping goes from original label to dense code.
        """
        labels = np.asarray(labels)
        uniq, inverse = np.unique(labels, return_inverse=True)
        mapping = {int(u): i for i, u in enumerate(uniq)}
        return cls(inverse.reshape(labels.shape), max(len(uniq), 1)), mapping


def _check_rect(shape, top, left, h, w):
    rows, cols = shape
    if h < 0 or w < 0 or top < 0 or left < 0 or top + h > rows or left + w > cols:
        raise BoundsError(
            f"rectangle rows [{top}, {top + h}) x cols [{left}, {left + w}) "
            f"outside grid of shape {rows}x{cols}"
        )


def crop(grid: CategoricalGrid, top: int, left: int, h: int, w: int) -> CategoricalGrid:
    _check_rect(grid.shape, top, left, h, w)
    return CategoricalGrid(grid.cells[top:top + h, left:left + w], grid.num_facies)


def paste(grid: CategoricalGrid, patch: CategoricalGrid, top: int, left: int) -> CategoricalGrid:
    """Return a copy of ``grid`` with ``patch`` written at ``(top, left)``."""
    _check_rect(grid.shape, top, left, patch.height, patch.width)
    out = grid.to_array()
    out[top:top + patch.height, left:left + patch.width] = patch.cells
    return CategoricalGrid(out, max(grid.num_facies, patch.num_facies))


def facies_proportions(grid: CategoricalGrid) -> Dict[int, float]:
    """Fraction of cells carrying each code present in the grid."""
    if grid.cells.size == 0:
        raise EmptyInputError("facies_proportions of an empty grid")
    counts = np.bincount(grid.cells.ravel(), minlength=grid.num_facies)
    area = grid.cells.size
    return {f: counts[f] / area for f in range(grid.num_facies) if counts[f] > 0}


def to_indicator_planes(grid: CategoricalGrid) -> List[RealPlane]:
    """One 0/1 ``float64`` plane per facies code."""
    return [(grid.cells == f).astype(np.float64) for f in range(grid.num_facies)]


@dataclass(frozen=True)
class HardDataSet:
    """Point observations ``(row, col, facies)`` that a realization must honor."""

    points: Tuple[Tuple[int, int, int], ...] = field(default_factory=tuple)

    def __post_init__(self):
        pts = tuple((int(r), int(c), int(f)) for r, c, f in self.points)
        object.__setattr__(self, "points", pts)

    def __len__(self):
        return len(self.points)

    def __iter__(self):
        return iter(self.points)

    @property
    def rows(self) -> np.ndarray:
        return np.array([p[0] for p in self.points], dtype=np.int64)

    @property
    def cols(self) -> np.ndarray:
        return np.array([p[1] for p in self.points], dtype=np.int64)

    @property
    def facies(self) -> np.ndarray:
        return np.array([p[2] for p in self.points], dtype=np.int64)

    def validate(self, shape: Sequence[int], num_facies: int) -> "HardDataSet":
        """Raise on out-of-bounds points, duplicate coordinates or bad codes."""
        rows, cols = shape
        seen = {}
        for i, (r, c, f) in enumerate(self.points):
            if not (0 <= r < rows and 0 <= c < cols):
                raise BoundsError(f"hard datum #{i} at ({r}, {c}) outside {rows}x{cols} grid")
            if not 0 <= f < num_facies:
                raise StructureError(f"hard datum #{i} has facies {f}, expected [0, {num_facies})")
            if (r, c) in seen:
                raise StructureError(
                    f"hard data #{seen[(r, c)]} and #{i} share coordinate ({r}, {c})"
                )
            seen[(r, c)] = i
        return self

    @classmethod
    def sample_from(cls, grid: CategoricalGrid, n: int, rng: np.random.Generator) -> "HardDataSet":
        """Draw ``n`` distinct cells of ``grid`` as hard data."""
        if n > grid.cells.size:
            raise StructureError(f"cannot sample {n} points from {grid.cells.size} cells")
        flat = rng.choice(grid.cells.size, size=n, replace=False)
        r, c = np.unravel_index(flat, grid.shape)
        return cls(tuple(zip(r.tolist(), c.tolist(), grid.cells[r, c].tolist())))


def as_grid(data: Iterable, num_facies: int | None = None) -> CategoricalGrid:
    """Convenience constructor; infers ``num_facies`` from the maximum code."""
    arr = np.asarray(data)
    if num_facies is None:
        num_facies = int(arr.max()) + 1 if arr.size else 1
    return CategoricalGrid(arr, num_facies)
