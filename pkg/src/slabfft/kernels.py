"""Sequential power-of-two FFT kernels.

Everything here is rank-local and single-threaded: complex-to-complex
transforms (contiguous, strided, and batched over rows), the half-spectrum
real transforms, and the 2D plane transforms the distributed pipeline is
built from.  No kernel normalizes; the distributed inverse applies the
single 1/(n0*n1*n2) factor at the end.

Buffers are numpy complex128, i.e. interleaved (re, im) float64 pairs, so a
buffer of n complex elements occupies 2n scalar slots.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import ConsistencyError, LayoutError, SizeError

__all__ = [
    "Direction",
    "TwiddleTable",
    "TwoLevelStride",
    "plan_twiddles",
    "fft_c2c_inplace",
    "fft_c2c_strided",
    "fft_r2c_1d",
    "fft_c2r_1d",
    "fft2d_r2c_plane",
    "fft2d_c2r_plane",
]

# Hermitian reconstruction is rejected when the discarded imaginary part
# exceeds this multiple of n * max|input|.
C2R_RESIDUE_TOL = 1e-9


class Direction(Enum):
    """Transform direction: FORWARD uses exp(-2*pi*i...), INVERSE exp(+2*pi*i...)."""

    FORWARD = "forward"
    INVERSE = "inverse"


def _require_pow2(n: int, what: str = "n") -> None:
    if n < 1 or (n & (n - 1)) != 0:
        raise SizeError(f"{what} must be a positive power of two, got {n}")


@functools.lru_cache(maxsize=None)
def _bit_reversal(n: int) -> np.ndarray:
    """Index permutation that bit-reverses [0, n) for power-of-two n."""
    bits = n.bit_length() - 1
    rev = np.zeros(n, dtype=np.intp)
    for i in range(1, n):
        rev[i] = (rev[i >> 1] >> 1) | ((i & 1) << (bits - 1))
    rev.flags.writeable = False
    return rev


@dataclass(frozen=True)
class TwiddleTable:
    """Roots of unity for one transform length, shared read-only by all users.

    factors[k] = exp(-2*pi*i*k/n) for k in [0, n/2); the inverse direction
    conjugates on the fly.
    """

    n: int
    factors: np.ndarray


def plan_twiddles(n: int) -> TwiddleTable:
    """Precompute the twiddle table for a power-of-two transform length."""
    _require_pow2(n)
    factors = np.exp(-2j * np.pi * np.arange(n // 2) / n)
    factors.flags.writeable = False
    return TwiddleTable(n=n, factors=factors)


@dataclass(frozen=True)
class TwoLevelStride:
    """Addresses a logical vector scattered over a buffer in strided blocks.

    Logical element r lives at
        base_offset + (r % inner_count) * inner_stride
                    + (r // inner_count) * block_stride
    in complex-element units.  inner_count * block_count is the logical
    vector length.  A plain strided vector is block_count=1.
    """

    inner_count: int
    inner_stride: int
    block_count: int
    block_stride: int
    base_offset: int = 0

    def __post_init__(self):
        if self.inner_count < 1 or self.block_count < 1:
            raise LayoutError(
                f"counts must be positive, got inner_count={self.inner_count} "
                f"block_count={self.block_count}"
            )

    @property
    def length(self) -> int:
        return self.inner_count * self.block_count

    @functools.cached_property
    def offsets(self) -> np.ndarray:
        """Buffer offsets of logical elements 0..length-1, validated distinct."""
        r = np.arange(self.length, dtype=np.intp)
        off = (
            self.base_offset
            + (r % self.inner_count) * self.inner_stride
            + (r // self.inner_count) * self.block_stride
        )
        if np.unique(off).size != off.size:
            raise LayoutError(f"stride pattern {self} addresses overlapping elements")
        off.flags.writeable = False
        return off

    def check_bounds(self, buffer_len: int) -> None:
        off = self.offsets
        if off.min() < 0 or off.max() >= buffer_len:
            raise LayoutError(
                f"stride pattern {self} reaches outside buffer of {buffer_len} elements"
            )


def _c2c_rows(a: np.ndarray, direction: Direction, tw: TwiddleTable) -> None:
    """Radix-2 DIT transform of every row of a C-contiguous 2D complex array.

    Mutates a in place.  Unnormalized in both directions.  Row results are
    bit-identical whether rows are transformed one at a time or batched,
    because every butterfly is elementwise per row.
    """
    n = tw.n
    assert a.ndim == 2 and a.flags.c_contiguous
    if a.shape[1] != n:
        raise SizeError(f"buffer rows have length {a.shape[1]}, twiddle table is for {n}")
    if n < 2:
        return
    a[:] = a[:, _bit_reversal(n)]
    factors = tw.factors
    half = 1
    while half < n:
        m = 2 * half
        w = factors[:: n // m]  # exp(-2*pi*i*j/m) for j in [0, half)
        if direction is Direction.INVERSE:
            w = w.conj()
        v = a.reshape(a.shape[0], n // m, m)
        lo = v[:, :, :half]
        hi = v[:, :, half:]
        t = hi * w
        np.subtract(lo, t, out=hi)
        np.add(lo, t, out=lo)
        half = m


def fft_c2c_inplace(buf: np.ndarray, direction: Direction, tw: TwiddleTable) -> None:
    """In-place unnormalized complex transform of a length-n buffer."""
    if buf.ndim != 1 or buf.shape[0] != tw.n:
        raise SizeError(f"buffer length {buf.shape} does not match twiddle table n={tw.n}")
    if buf.flags.c_contiguous:
        _c2c_rows(buf.reshape(1, -1), direction, tw)
    else:
        work = np.ascontiguousarray(buf)
        _c2c_rows(work.reshape(1, -1), direction, tw)
        buf[:] = work


def fft_c2c_strided(
    buf: np.ndarray,
    layout: TwoLevelStride,
    direction: Direction,
    tw: TwiddleTable,
    scratch: np.ndarray | None = None,
) -> None:
    """Transform the logical vector that `layout` scatters across `buf`.

    Gathers into a contiguous scratch vector, runs the in-place kernel, and
    scatters back, so the result is bit-identical to transforming the
    gathered copy.  `scratch` (length tw.n complex) may be supplied to avoid
    the per-call allocation.
    """
    if layout.length != tw.n:
        raise SizeError(
            f"stride pattern addresses {layout.length} elements, twiddle table is for {tw.n}"
        )
    layout.check_bounds(buf.shape[0])
    offs = layout.offsets
    if scratch is None:
        scratch = np.empty(tw.n, dtype=np.complex128)
    np.take(buf, offs, out=scratch)
    _c2c_rows(scratch.reshape(1, -1), direction, tw)
    buf[offs] = scratch


def _r2c_rows(rows: np.ndarray, tw: TwiddleTable) -> np.ndarray:
    """Half-spectrum transform of each row: full complex transform of the
    real-embedded input, truncated to n/2+1 bins."""
    n = tw.n
    work = rows.astype(np.complex128)
    _c2c_rows(work, Direction.FORWARD, tw)
    return np.ascontiguousarray(work[:, : n // 2 + 1])


def _c2r_rows(half: np.ndarray, n: int, tw: TwiddleTable) -> tuple[np.ndarray, float]:
    """Unnormalized inverse of _r2c_rows.

    Rebuilds the full Hermitian spectrum (bins k in (n/2, n) get
    conj(input[n-k])), runs the complex inverse, and returns the real part
    together with the largest discarded imaginary magnitude.  Raises
    ConsistencyError when the input cannot have come from real data.
    """
    n2c = n // 2 + 1
    if half.shape[1] != n2c:
        raise SizeError(f"expected {n2c} spectral bins per row, got {half.shape[1]}")
    scale = float(np.max(np.abs(half))) if half.size else 0.0
    tol = C2R_RESIDUE_TOL * n * scale
    edge = max(np.max(np.abs(half[:, 0].imag)), np.max(np.abs(half[:, n // 2].imag)))
    if edge > tol:
        raise ConsistencyError(
            f"bins 0 and n/2 must be real for a half spectrum (imag {edge:.3e} > {tol:.3e})"
        )
    full = np.empty((half.shape[0], n), dtype=np.complex128)
    full[:, :n2c] = half
    full[:, n2c:] = half[:, 1 : n // 2][:, ::-1].conj()
    _c2c_rows(full, Direction.INVERSE, tw)
    residue = float(np.max(np.abs(full.imag)))
    if residue > tol:
        raise ConsistencyError(
            f"inverse of half spectrum is not real (residue {residue:.3e} > {tol:.3e})"
        )
    return np.ascontiguousarray(full.real), residue


def fft_r2c_1d(x: np.ndarray, tw: TwiddleTable) -> np.ndarray:
    """Forward real transform: n real samples to n/2+1 complex bins."""
    if tw.n < 2:
        raise SizeError(f"real transform needs n >= 2, got {tw.n}")
    if x.ndim != 1 or x.shape[0] != tw.n:
        raise SizeError(f"input length {x.shape} does not match twiddle table n={tw.n}")
    return _r2c_rows(x.reshape(1, -1), tw)[0]


def fft_c2r_1d(spec: np.ndarray, n: int, tw: TwiddleTable) -> np.ndarray:
    """Unnormalized inverse real transform: fft_c2r_1d(fft_r2c_1d(x), n) == n*x."""
    _require_pow2(n)
    if n < 2 or tw.n != n:
        raise SizeError(f"inverse real transform needs matching n >= 2, got n={n}, table={tw.n}")
    if spec.ndim != 1 or spec.shape[0] != n // 2 + 1:
        raise SizeError(f"expected {n // 2 + 1} spectral bins, got {spec.shape}")
    real, _ = _c2r_rows(spec.reshape(1, -1), n, tw)
    return real[0]


def fft2d_r2c_plane(
    plane: np.ndarray,
    tw1: TwiddleTable | None = None,
    tw2: TwiddleTable | None = None,
    out: np.ndarray | None = None,
) -> np.ndarray:
    """Forward transform of one real n1 x n2 plane to n1 x (n2/2+1) complex.

    Half-spectrum transform along the fast axis of each row, then complex
    forward along the slow axis of each retained column.
    """
    n1, n2 = plane.shape
    _require_pow2(n1, "n1")
    _require_pow2(n2, "n2")
    if n2 < 2:
        raise SizeError(f"plane fast axis needs n2 >= 2, got {n2}")
    tw1 = tw1 if tw1 is not None else plan_twiddles(n1)
    tw2 = tw2 if tw2 is not None else plan_twiddles(n2)
    half = _r2c_rows(plane, tw2)  # (n1, n2c)
    cols = np.ascontiguousarray(half.T)  # (n2c, n1)
    _c2c_rows(cols, Direction.FORWARD, tw1)
    if out is None:
        out = np.empty_like(half)
    out[:] = cols.T
    return out


def _c2r_plane(
    plane: np.ndarray,
    n2: int,
    tw1: TwiddleTable,
    tw2: TwiddleTable,
    out: np.ndarray | None,
) -> tuple[np.ndarray, float]:
    cols = np.ascontiguousarray(plane.T)  # (n2c, n1)
    _c2c_rows(cols, Direction.INVERSE, tw1)
    half = np.ascontiguousarray(cols.T)  # (n1, n2c)
    real, residue = _c2r_rows(half, n2, tw2)
    if out is None:
        return real, residue
    out[:] = real
    return out, residue


def fft2d_c2r_plane(
    plane: np.ndarray,
    n2: int,
    tw1: TwiddleTable | None = None,
    tw2: TwiddleTable | None = None,
    out: np.ndarray | None = None,
) -> np.ndarray:
    """Unnormalized inverse of fft2d_r2c_plane: complex inverse along the
    slow axis, then half-spectrum inverse along the fast axis."""
    n1, n2c = plane.shape
    _require_pow2(n1, "n1")
    _require_pow2(n2, "n2")
    if n2 // 2 + 1 != n2c:
        raise SizeError(f"plane has {n2c} spectral bins, n2={n2} implies {n2 // 2 + 1}")
    tw1 = tw1 if tw1 is not None else plan_twiddles(n1)
    tw2 = tw2 if tw2 is not None else plan_twiddles(n2)
    real, _ = _c2r_plane(plane, n2, tw1, tw2, out)
    return real
