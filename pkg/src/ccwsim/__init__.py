"""Wavelet-accelerated cross-correlation simulation of categorical training images."""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    BoundsError,
    CCWSimError,
    ConfigError,
    DegeneracyError,
    DimensionError,
    EmptyInputError,
    ParseError,
    SequencingError,
    StructureError,
)
from .grid import CategoricalGrid, HardDataSet, crop, facies_proportions, paste, to_indicator_planes  # noqa: E402
from .simulator import SimConfig, plan_raster_path, simulate_ensemble, simulate_one  # noqa: E402
from .wavelet import WaveletPyramid, dwt2, dwt2_single, idwt2  # noqa: E402
