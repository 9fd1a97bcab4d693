"""Multi-level 2D Haar discrete wavelet transform.

The orthonormal Haar pair is used, which on a 2x2 block ``[[p00, p01], [p10, p11]]``
gives::

    cA = (p00 + p01 + p10 + p11) / 2
    cH = (p00 + p01 - p10 - p11) / 2
    cV = (p00 - p01 + p10 - p11) / 2
    cD = (p00 - p01 - p10 + p11) / 2

No boundary extension is performed: every decomposed dimension must be
divisible by ``2**levels``. Because Haar blocks never straddle each other,
a coefficient-space rectangle ``[r, r+h) x [c, c+w)`` at level ``J`` covers
exactly the fine rectangle ``[2**J r, 2**J (r+h)) x [2**J c, 2**J (c+w))``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import List, Tuple

import numpy as np

from .errors import DimensionError, StructureError

SQRT1_2 = 1.0 / np.sqrt(2.0)


@dataclass(frozen=True)
class HaarFilterBank:
    """Two-tap orthonormal Haar analysis/synthesis filters."""

    low: Tuple[float, float] = (SQRT1_2, SQRT1_2)
    high: Tuple[float, float] = (SQRT1_2, -SQRT1_2)

    def analyze(self, signal: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """Filter and downsample an even-length 1D signal."""
        x = np.asarray(signal, dtype=np.float64)
        if x.shape[-1] % 2:
            raise DimensionError("Haar analysis needs an even-length signal")
        even, odd = x[..., 0::2], x[..., 1::2]
        return (self.low[0] * even + self.low[1] * odd,
                self.high[0] * even + self.high[1] * odd)

    def synthesize(self, approx: np.ndarray, detail: np.ndarray) -> np.ndarray:
        """Upsample and filter; the exact inverse of :meth:`analyze`."""
        a = np.asarray(approx, dtype=np.float64)
        d = np.asarray(detail, dtype=np.float64)
        out = np.empty(a.shape[:-1] + (2 * a.shape[-1],))
        out[..., 0::2] = self.low[0] * a + self.high[0] * d
        out[..., 1::2] = self.low[1] * a + self.high[1] * d
        return out


HAAR = HaarFilterBank()


@dataclass
class WaveletPyramid:
    """Apex approximation plus detail planes for each level.

    ``details[j - 1]`` holds ``(cH, cV, cD)`` of level ``j``; only the level-``J``
    approximation is retained.
    """

    approx: np.ndarray
    details: List[Tuple[np.ndarray, np.ndarray, np.ndarray]]
    original_shape: Tuple[int, int]

    @property
    def levels(self) -> int:
        return len(self.details)

    def energy(self) -> float:
        total = float(np.sum(self.approx ** 2))
        for bands in self.details:
            total += sum(float(np.sum(b ** 2)) for b in bands)
        return total


def _as_plane(plane) -> np.ndarray:
    arr = np.asarray(plane, dtype=np.float64)
    if arr.ndim != 2:
        raise DimensionError(f"expected a 2D plane, got shape {arr.shape}")
    return arr


def dwt2_single(plane) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """One level of the 2D Haar transform: ``(cA, cH, cV, cD)``."""
    x = _as_plane(plane)
    rows, cols = x.shape
    if rows % 2 or cols % 2:
        raise DimensionError(f"plane dimensions must be even, got {rows}x{cols}")
    p00 = x[0::2, 0::2]
    p01 = x[0::2, 1::2]
    p10 = x[1::2, 0::2]
    p11 = x[1::2, 1::2]
    top_sum, top_diff = p00 + p01, p00 - p01
    bot_sum, bot_diff = p10 + p11, p10 - p11
    ca = (top_sum + bot_sum) * 0.5
    ch = (top_sum - bot_sum) * 0.5
    cv = (top_diff + bot_diff) * 0.5
    cd = (top_diff - bot_diff) * 0.5
    return ca, ch, cv, cd


def idwt2_single(ca, ch, cv, cd) -> np.ndarray:
    """Invert :func:`dwt2_single`."""
    ca, ch, cv, cd = (np.asarray(b, dtype=np.float64) for b in (ca, ch, cv, cd))
    if not (ca.shape == ch.shape == cv.shape == cd.shape):
        raise StructureError(
            f"subband shapes differ: {ca.shape}, {ch.shape}, {cv.shape}, {cd.shape}"
        )
    rows, cols = ca.shape
    out = np.empty((2 * rows, 2 * cols))
    a_plus_h, a_minus_h = ca + ch, ca - ch
    v_plus_d, v_minus_d = cv + cd, cv - cd
    out[0::2, 0::2] = (a_plus_h + v_plus_d) * 0.5
    out[0::2, 1::2] = (a_plus_h - v_plus_d) * 0.5
    out[1::2, 0::2] = (a_minus_h + v_minus_d) * 0.5
    out[1::2, 1::2] = (a_minus_h - v_minus_d) * 0.5
    return out


def check_divisible(shape, levels: int, what: str = "plane"):
    step = 1 << levels
    if any(n % step for n in shape):
        raise DimensionError(
            f"{what} of shape {tuple(shape)} is not divisible by 2**{levels} = {step}"
        )


def approximation(plane, levels: int) -> np.ndarray:
    """Level-``levels`` approximation coefficients only.

    Equal to ``dwt2(plane, levels).approx`` but skips the detail bands: the
    orthonormal apex is the block sum divided by ``2**levels``.
    """
    x = _as_plane(plane)
    if levels < 0:
        raise DimensionError("levels must be >= 0")
    check_divisible(x.shape, levels)
    if levels == 0:
        return x.copy()
    b = 1 << levels
    rows, cols = x.shape
    return x.reshape(rows // b, b, cols // b, b).sum(axis=(1, 3)) / b


def dwt2(plane, levels: int) -> WaveletPyramid:
    """Decompose ``plane`` to ``levels`` levels, recursing on the approximation."""
    x = _as_plane(plane)
    if levels < 0:
        raise DimensionError("levels must be >= 0")
    check_divisible(x.shape, levels)
    details = []
    ca = x
    for _ in range(levels):
        ca, ch, cv, cd = dwt2_single(ca)
        details.append((ch, cv, cd))
    return WaveletPyramid(approx=ca if levels else x.copy(), details=details,
                          original_shape=x.shape)


def idwt2(pyramid: WaveletPyramid) -> np.ndarray:
    """Synthesize the original plane from a pyramid."""
    ca = np.asarray(pyramid.approx, dtype=np.float64)
    for j in range(pyramid.levels, 0, -1):
        ch, cv, cd = pyramid.details[j - 1]
        if ca.shape != np.shape(ch):
            raise StructureError(
                f"level {j} details have shape {np.shape(ch)}, approximation has {ca.shape}"
            )
        ca = idwt2_single(ca, ch, cv, cd)
    if ca.shape != tuple(pyramid.original_shape):
        raise StructureError(
            f"synthesized shape {ca.shape} != declared original {tuple(pyramid.original_shape)}"
        )
    return ca


def coarse_to_fine(coord: Tuple[int, int], levels: int) -> Tuple[int, int]:
    row, col = coord
    return row << levels, col << levels


def crop_pyramid(pyramid: WaveletPyramid, top: int, left: int, h: int, w: int) -> WaveletPyramid:
    """Restrict a pyramid to an apex-space rectangle.

    Returns the pyramid of the corresponding fine-space crop, so that
    ``idwt2(crop_pyramid(dwt2(x, J), r, c, h, w))`` equals the fine crop
    ``x[r*2**J : (r+h)*2**J, c*2**J : (c+w)*2**J]``.
    """
    J = pyramid.levels
    ah, aw = pyramid.approx.shape
    if top < 0 or left < 0 or top + h > ah or left + w > aw:
        raise StructureError(f"apex crop [{top}:{top + h}, {left}:{left + w}] outside {ah}x{aw}")
    approx = pyramid.approx[top:top + h, left:left + w].copy()
    details = []
    for j in range(1, J + 1):
        s = 1 << (J - j)
        r0, c0, hh, ww = top * s, left * s, h * s, w * s
        details.append(tuple(b[r0:r0 + hh, c0:c0 + ww].copy() for b in pyramid.details[j - 1]))
    return WaveletPyramid(approx=approx, details=details, original_shape=(h << J, w << J))
