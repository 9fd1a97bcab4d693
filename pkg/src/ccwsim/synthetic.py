"""Synthetic training images for tests, benchmarks and demos.

The channel image mimics the classic fluvial benchmark: sinuous sand
channels (code 1) trending East-West in a shale background (code 0).
"""
from __future__ import annotations

import numpy as np

from .grid import CategoricalGrid


def channel_ti(size: int = 256, n_channels: int | None = None, width: float = 7.0,
               seed: int = 0, levee: bool = False) -> CategoricalGrid:
    """Binary (or, with ``levee``, three-facies) channel training image.

    Each channel follows ``y(x) = y0 + a1 sin(2 pi x / l1 + p1) + a2 sin(2 pi x / l2 + p2)``
    with random amplitudes, wavelengths and phases, and a thickness jittered
    around ``width``. With ``levee`` a band of code 2 fringes each channel.
    """
    rng = np.random.default_rng(seed)
    if n_channels is None:
        n_channels = max(1, int(round(size / 26)))
    rows = np.arange(size)[:, None].astype(np.float64)
    x = np.arange(size)[None, :].astype(np.float64)
    sand = np.zeros((size, size), dtype=bool)
    fringe = np.zeros_like(sand)
    spacing = size / n_channels
    for k in range(n_channels):
        y0 = (k + rng.uniform(0.2, 0.8)) * spacing
        a1 = rng.uniform(0.05, 0.12) * size
        l1 = rng.uniform(0.5, 1.0) * size
        a2 = rng.uniform(0.01, 0.04) * size
        l2 = rng.uniform(0.15, 0.3) * size
        p1, p2 = rng.uniform(0, 2 * np.pi, 2)
        center = y0 + a1 * np.sin(2 * np.pi * x / l1 + p1) + a2 * np.sin(2 * np.pi * x / l2 + p2)
        half = 0.5 * width * (1.0 + 0.25 * np.sin(2 * np.pi * x / rng.uniform(0.2, 0.5) / size
                                                   + rng.uniform(0, 2 * np.pi)))
        dist = np.abs(rows - center)
        sand |= dist <= half
        fringe |= dist <= half + 0.5 * width
    cells = sand.astype(np.int16)
    if levee:
        cells[fringe & ~sand] = 2
        return CategoricalGrid(cells, 3)
    return CategoricalGrid(cells, 2)
