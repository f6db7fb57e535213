"""Hypercube quantizer: N^n_y equal cells around a moving center.

The encoder maps an output vector to the 1-based index of the cell containing
it; the decoder returns the cell center.  Cell indexing is mixed-radix over
axes with axis 0 least significant, and points on an interior cell boundary
resolve to the lower-index cell.  Both conventions are pinned so encoder and
decoder stay wire compatible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "QuantizerSpec",
    "QuantRegion",
    "QuantizerOverflowError",
    "encode",
    "decode",
    "index_byte_width",
    "index_to_bytes",
    "index_from_bytes",
]

#: Relative slack tolerated on the saturation precondition before declaring
#: overflow, absorbing rounding in |y - center| <= half_width.
SATURATION_RTOL = 1e-9


@dataclass(frozen=True)
class QuantizerSpec:
    """Quantization level N (odd, >= 3) per axis and output dimension n_y."""

    N: int
    n_y: int

    def __post_init__(self):
        if self.N < 3 or self.N % 2 == 0:
            raise ValueError(f"quantization level must be odd and >= 3, got {self.N}")
        if self.n_y < 1:
            raise ValueError(f"output dimension must be >= 1, got {self.n_y}")

    @property
    def cell_count(self) -> int:
        return self.N**self.n_y

    @property
    def center_index(self) -> int:
        """Index of the cell whose center coincides with the region center."""
        mid = (self.N - 1) // 2
        return 1 + mid * (self.cell_count - 1) // (self.N - 1)


@dataclass(frozen=True, eq=False)
class QuantRegion:
    """Quantization hypercube: center vector and infinity-norm half width."""

    center: np.ndarray
    half_width: float

    def __post_init__(self):
        object.__setattr__(self, "center", np.asarray(self.center, dtype=float))
        if self.half_width < 0:
            raise ValueError(f"half width must be nonnegative, got {self.half_width}")


class QuantizerOverflowError(ValueError):
    """Output fell outside the quantization region: a bound invariant broke."""

    def __init__(self, y, region: QuantRegion):
        self.y = np.asarray(y, dtype=float)
        self.region = region
        excess = np.max(np.abs(self.y - region.center)) - region.half_width
        super().__init__(
            f"output exceeds quantization region by {excess:.3e} "
            f"(half width {region.half_width:.3e})"
        )


def _axis_cells(y, region: QuantRegion, spec: QuantizerSpec) -> np.ndarray:
    y = np.asarray(y, dtype=float)
    if y.shape != (spec.n_y,):
        raise ValueError(f"expected output of shape ({spec.n_y},), got {y.shape}")
    offset = y - region.center
    hw = region.half_width
    limit = hw * (1.0 + SATURATION_RTOL) + 1e-300
    if np.any(np.abs(offset) > limit):
        raise QuantizerOverflowError(y, region)
    if hw == 0.0:
        return np.full(spec.n_y, (spec.N - 1) // 2, dtype=int)
    # position in units of cells from the lower face, in [0, N]
    u = (offset + hw) * (spec.N / (2.0 * hw))
    cells = np.ceil(u).astype(int) - 1
    return np.clip(cells, 0, spec.N - 1)


def encode(y, region: QuantRegion, spec: QuantizerSpec) -> int:
    """Mixed-radix cell index (1-based) of the cell containing y.

    Requires |y - center|_inf <= half_width; violations raise
    ``QuantizerOverflowError`` since the caller's bound invariant guarantees
    saturation never happens.
    """
    cells = _axis_cells(y, region, spec)
    index = 0
    for j in range(spec.n_y - 1, -1, -1):
        index = index * spec.N + int(cells[j])
    return index + 1


def decode(index: int, region: QuantRegion, spec: QuantizerSpec) -> np.ndarray:
    """Center of the cell with the given 1-based index."""
    if not 1 <= index <= spec.cell_count:
        raise ValueError(f"index {index} outside 1..{spec.cell_count}")
    rem = index - 1
    cells = np.empty(spec.n_y, dtype=int)
    for j in range(spec.n_y):
        cells[j] = rem % spec.N
        rem //= spec.N
    mid = (spec.N - 1) // 2
    # exact zero offset for the middle cell, so q == center is bit exact
    step = 2.0 * region.half_width / spec.N
    return region.center + (cells - mid) * step


def index_byte_width(spec: QuantizerSpec) -> int:
    """Minimal channel payload width: ceil(n_y * log2(N) / 8) bytes."""
    return math.ceil(spec.n_y * math.log2(spec.N) / 8.0)


def index_to_bytes(index: int, spec: QuantizerSpec) -> bytes:
    """Serialize a cell index as a little-endian unsigned integer."""
    if not 1 <= index <= spec.cell_count:
        raise ValueError(f"index {index} outside 1..{spec.cell_count}")
    return index.to_bytes(index_byte_width(spec), "little")


def index_from_bytes(payload: bytes, spec: QuantizerSpec) -> int:
    index = int.from_bytes(payload, "little")
    if not 1 <= index <= spec.cell_count:
        raise ValueError(f"payload decodes to out-of-range index {index}")
    return index
