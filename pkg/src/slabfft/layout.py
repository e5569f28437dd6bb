"""Global grid description, slab ownership arithmetic, and rank-local fields.

A real n0 x n1 x n2 field is divided along axis 0 (each rank owns n0/p
planes); its spectrum is divided along axis 1 (each rank owns n1/p columns
of length n0).  Spectral slabs carry a layout tag because the two exchange
strategies leave the same logical data in different physical arrangements;
the logical-index accessor hides the difference.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import ConfigurationError, ContractError
from .kernels import TwoLevelStride

__all__ = [
    "DistAxis",
    "SpectralTag",
    "GlobalGrid",
    "SlabLayout",
    "RealSlab",
    "SpectralSlab",
    "validate",
    "owned_range",
    "spectral_offset",
    "column_stride_descriptor",
]


class DistAxis(Enum):
    REAL_AXIS0 = "real_axis0"
    SPECTRAL_AXIS1 = "spectral_axis1"


class SpectralTag(Enum):
    """Physical arrangement of a spectral slab.

    CONTIGUOUS_FLIPPED: axes 0 and 1 swapped during the exchange; element
    (j, r, k) sits at j*(n0*n2c) + r*n2c + k.

    STRIDED_INPLACE: the exchange left received blocks in the column bands
    they vacated; element (j, r, k) sits at
    (r % (n0/p))*(n1*n2c) + (r // (n0/p))*((n1/p)*n2c) + j*n2c + k.
    """

    CONTIGUOUS_FLIPPED = "contiguous_flipped"
    STRIDED_INPLACE = "strided_inplace"


@dataclass(frozen=True)
class GlobalGrid:
    """Global transform sizes.  n2c = n2/2 + 1 is the complex extent of the
    fast axis.

    Axes must be powers of two.  n2 = 1 is accepted here so that the pure
    data-movement machinery can be exercised on flat 2D arrays (n2c = 1);
    validate() is the strict gate that transforms go through and requires
    every axis >= 2.
    """

    n0: int
    n1: int
    n2: int

    def __post_init__(self):
        for name, n in (("n0", self.n0), ("n1", self.n1), ("n2", self.n2)):
            if n < 1 or (n & (n - 1)) != 0:
                raise ConfigurationError(f"{name} must be a positive power of two, got {n}")

    @property
    def n2c(self) -> int:
        return self.n2 // 2 + 1

    @property
    def points(self) -> int:
        return self.n0 * self.n1 * self.n2


def validate(grid: GlobalGrid, p: int) -> None:
    """Check that `grid` can be slab-divided among p ranks and transformed."""
    if p < 1:
        raise ConfigurationError(f"process count must be >= 1, got {p}")
    for name, n in (("n0", grid.n0), ("n1", grid.n1), ("n2", grid.n2)):
        if n < 2:
            raise ConfigurationError(f"{name} must be a power of two >= 2, got {n}")
    if grid.n0 % p != 0:
        raise ConfigurationError(f"p does not divide n0 ({p} does not divide {grid.n0})")
    if grid.n1 % p != 0:
        raise ConfigurationError(f"p does not divide n1 ({p} does not divide {grid.n1})")


@dataclass(frozen=True)
class SlabLayout:
    """Ownership of one rank's slab: which axis is divided and where."""

    grid: GlobalGrid
    p: int
    rank: int
    dist_axis: DistAxis

    def __post_init__(self):
        if self.p < 1:
            raise ConfigurationError(f"process count must be >= 1, got {self.p}")
        if self.grid.n0 % self.p != 0:
            raise ConfigurationError(f"p does not divide n0 ({self.p} does not divide {self.grid.n0})")
        if self.grid.n1 % self.p != 0:
            raise ConfigurationError(f"p does not divide n1 ({self.p} does not divide {self.grid.n1})")
        if not 0 <= self.rank < self.p:
            raise ConfigurationError(f"rank {self.rank} outside [0, {self.p})")

    @property
    def n0p(self) -> int:
        return self.grid.n0 // self.p

    @property
    def n1p(self) -> int:
        return self.grid.n1 // self.p

    def local_shape(self) -> tuple[int, int, int]:
        g = self.grid
        if self.dist_axis is DistAxis.REAL_AXIS0:
            return (self.n0p, g.n1, g.n2)
        return (self.n1p, g.n0, g.n2c)


def owned_range(layout: SlabLayout) -> tuple[int, int]:
    """(start, length) of this rank's share of the distributed axis."""
    if layout.dist_axis is DistAxis.REAL_AXIS0:
        return (layout.rank * layout.n0p, layout.n0p)
    return (layout.rank * layout.n1p, layout.n1p)


@dataclass
class RealSlab:
    """One rank's share of the real field: (n0/p) x n1 x n2, n2 fastest."""

    layout: SlabLayout
    data: np.ndarray  # flat float64, length (n0/p)*n1*n2

    def __post_init__(self):
        if self.layout.dist_axis is not DistAxis.REAL_AXIS0:
            raise ContractError("RealSlab requires a REAL_AXIS0 layout")
        expect = self.layout.n0p * self.layout.grid.n1 * self.layout.grid.n2
        self.data = np.asarray(self.data, dtype=np.float64).reshape(-1)
        if self.data.shape[0] != expect:
            raise ContractError(f"real slab needs {expect} elements, got {self.data.shape[0]}")

    def view3(self) -> np.ndarray:
        g = self.layout.grid
        return self.data.reshape(self.layout.n0p, g.n1, g.n2)


@dataclass
class SpectralSlab:
    """One rank's share of the spectrum, (n1/p) x n0 x n2c logical elements.

    The tag records the physical arrangement; spectral_offset / as_logical
    give tag-independent access.
    """

    layout: SlabLayout
    tag: SpectralTag
    data: np.ndarray  # flat complex128, length (n1/p)*n0*n2c

    def __post_init__(self):
        if self.layout.dist_axis is not DistAxis.SPECTRAL_AXIS1:
            raise ContractError("SpectralSlab requires a SPECTRAL_AXIS1 layout")
        expect = self.layout.n1p * self.layout.grid.n0 * self.layout.grid.n2c
        self.data = np.asarray(self.data, dtype=np.complex128).reshape(-1)
        if self.data.shape[0] != expect:
            raise ContractError(f"spectral slab needs {expect} elements, got {self.data.shape[0]}")

    def as_logical(self) -> np.ndarray:
        """Materialize the (n1/p, n0, n2c) logical view, whatever the tag."""
        lay = self.layout
        g = lay.grid
        if self.tag is SpectralTag.CONTIGUOUS_FLIPPED:
            return self.data.reshape(lay.n1p, g.n0, g.n2c)
        # STRIDED_INPLACE: buffer is (n0/p, p, n1/p, n2c) with the source
        # rank as the second axis; fold (source, plane) back into r.
        v = self.data.reshape(lay.n0p, lay.p, lay.n1p, g.n2c)
        return np.ascontiguousarray(v.transpose(2, 1, 0, 3)).reshape(lay.n1p, g.n0, g.n2c)


def spectral_offset(slab: SpectralSlab, j: int, r: int, k: int) -> int:
    """Buffer offset of logical element (j, r, k) under the slab's tag."""
    lay = slab.layout
    g = lay.grid
    if not (0 <= j < lay.n1p and 0 <= r < g.n0 and 0 <= k < g.n2c):
        raise IndexError(f"logical index ({j}, {r}, {k}) outside ({lay.n1p}, {g.n0}, {g.n2c})")
    if slab.tag is SpectralTag.CONTIGUOUS_FLIPPED:
        return j * (g.n0 * g.n2c) + r * g.n2c + k
    n0p = lay.n0p
    return (r % n0p) * (g.n1 * g.n2c) + (r // n0p) * (lay.n1p * g.n2c) + j * g.n2c + k


def column_stride_descriptor(slab: SpectralSlab, j: int, k: int) -> TwoLevelStride:
    """Stride pattern of the length-n0 column (j, *, k) in a strided slab.

    Enumerating r through the returned pattern visits exactly
    spectral_offset(slab, j, r, k) for r = 0..n0-1, in order.
    """
    if slab.tag is not SpectralTag.STRIDED_INPLACE:
        raise ContractError(f"column stride pattern is only defined for strided slabs, not {slab.tag}")
    lay = slab.layout
    g = lay.grid
    if not (0 <= j < lay.n1p and 0 <= k < g.n2c):
        raise IndexError(f"column index ({j}, {k}) outside ({lay.n1p}, {g.n2c})")
    return TwoLevelStride(
        inner_count=lay.n0p,
        inner_stride=g.n1 * g.n2c,
        block_count=lay.p,
        block_stride=lay.n1p * g.n2c,
        base_offset=j * g.n2c + k,
    )
