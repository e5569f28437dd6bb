"""The two inter-rank redistributions between FFT stages, plus inverses.

Both strategies move the same bytes: after the per-plane stage each rank
holds (n0/p) planes of n1 x n2c spectral data and needs the full n0 extent
of its n1/p columns instead.

TRANSPOSE  pack a locally transposed block per destination, exchange the
           contiguous blocks, rearrange on arrival.  Three passes over the
           data; the result is the axes-flipped contiguous layout.

STRIDED    describe each outgoing column band with a strided descriptor
           and exchange in place: the block received from rank q lands
           exactly in the band that was just sent to q.  No pack or unpack
           pass; the result keeps the original buffer with columns now
           strided across it.

Counters record exchanged (off-rank) bytes only: the self band never
crosses the fabric, so it does not contribute to the copy-work proxy the
strategies are compared on.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import ContractError, ProtocolError
from .layout import DistAxis, GlobalGrid, SlabLayout, SpectralSlab, SpectralTag
from .transport import CommPattern, CopyCounter, Endpoint, LayoutDescriptor

__all__ = [
    "Strategy",
    "ExchangePlan",
    "plan_exchange",
    "pack_transposed",
    "unpack_received",
    "exchange_transpose_forward",
    "exchange_transpose_inverse",
    "exchange_strided_forward",
    "exchange_strided_inverse",
]

COMPLEX_BYTES = 16  # complex128


class Strategy(Enum):
    TRANSPOSE = "transpose"
    STRIDED = "strided"


@dataclass
class ExchangePlan:
    """Per-rank descriptors, scratch, and counters for one exchange geometry."""

    grid: GlobalGrid
    p: int
    rank: int
    strategy: Strategy
    comm_pattern: CommPattern
    spectral_layout: SlabLayout
    send_descs: list
    recv_descs: list
    counters: CopyCounter
    # TRANSPOSE scratch, None for STRIDED (that is the point)
    pack_scratch: np.ndarray | None = None
    landing_scratch: np.ndarray | None = None
    flipped_scratch: np.ndarray | None = None
    inverse_scratch: np.ndarray | None = None

    @property
    def n0p(self) -> int:
        return self.grid.n0 // self.p

    @property
    def n1p(self) -> int:
        return self.grid.n1 // self.p

    @property
    def block_elems(self) -> int:
        return self.n0p * self.n1p * self.grid.n2c


def plan_exchange(
    grid: GlobalGrid,
    p: int,
    rank: int,
    strategy: Strategy,
    comm_pattern: CommPattern = CommPattern.PAIRWISE,
) -> ExchangePlan:
    """Build the per-peer descriptors and scratch for one rank."""
    spectral_layout = SlabLayout(grid, p, rank, DistAxis.SPECTRAL_AXIS1)
    n0p, n1p, n2c = grid.n0 // p, grid.n1 // p, grid.n2c
    plan = ExchangePlan(
        grid=grid,
        p=p,
        rank=rank,
        strategy=strategy,
        comm_pattern=comm_pattern,
        spectral_layout=spectral_layout,
        send_descs=[],
        recv_descs=[],
        counters=CopyCounter(),
    )
    if strategy is Strategy.STRIDED:
        # One descriptor per peer, used for both directions: the column
        # band sent to q is exactly where the block from q lands.
        for q in range(p):
            if q == rank:
                plan.send_descs.append(None)
                plan.recv_descs.append(None)
            else:
                band = LayoutDescriptor(
                    count=n0p,
                    block_length=n1p * n2c,
                    stride=grid.n1 * n2c,
                    base_offset=q * n1p * n2c,
                )
                plan.send_descs.append(band)
                plan.recv_descs.append(band)
    else:
        blk = plan.block_elems
        for q in range(p):
            slot = LayoutDescriptor(count=1, block_length=blk, stride=blk, base_offset=q * blk)
            plan.send_descs.append(slot)
            plan.recv_descs.append(slot)
        plan.pack_scratch = np.empty(p * blk, dtype=np.complex128)
        plan.landing_scratch = np.empty(p * blk, dtype=np.complex128)
        plan.flipped_scratch = np.empty(p * blk, dtype=np.complex128)
    return plan


def _as_stage_array(slab: np.ndarray, plan: ExchangePlan) -> np.ndarray:
    """View the post-plane-stage buffer as (n0/p, n1, n2c) without copying."""
    expect = (plan.n0p, plan.grid.n1, plan.grid.n2c)
    arr = np.asarray(slab)
    if arr.dtype != np.complex128 or arr.size != plan.block_elems * plan.p:
        raise ContractError(f"exchange input must be {expect} complex128, got {arr.dtype} {arr.shape}")
    if not arr.flags.c_contiguous:
        raise ContractError("exchange input must be C-contiguous (the strided path is in place)")
    return arr.reshape(expect)


def pack_transposed(
    slab: np.ndarray,
    dest: int,
    p: int,
    out: np.ndarray | None = None,
    counter: CopyCounter | None = None,
) -> np.ndarray:
    """Copy the columns headed to `dest` out of a (n0/p, n1, n2c) slab,
    applying the axis transpose during the copy.

    Output block (j, i, k) = slab(i, dest*(n1/p) + j, k).  Counts one pass
    over the moved bytes when a counter is given.
    """
    n0p, n1, n2c = slab.shape
    if n1 % p != 0:
        raise ContractError(f"p={p} does not divide n1={n1}")
    n1p = n1 // p
    band = slab[:, dest * n1p : (dest + 1) * n1p, :]
    if out is None:
        out = np.empty((n1p, n0p, n2c), dtype=np.complex128)
    out[:] = band.transpose(1, 0, 2)
    if counter is not None:
        counter.bytes_packed += out.nbytes
    return out


def _unpack_block(block: np.ndarray, src: int, out: SpectralSlab, counter: CopyCounter | None) -> None:
    lay = out.layout
    n0p = lay.n0p
    out3 = out.data.reshape(lay.n1p, lay.grid.n0, lay.grid.n2c)
    out3[:, src * n0p : (src + 1) * n0p, :] = block
    if counter is not None:
        counter.bytes_unpacked += block.nbytes


def unpack_received(blocks: list[np.ndarray], out: SpectralSlab, counter: CopyCounter | None = None) -> None:
    """Arrange the p received (n1/p, n0/p, n2c) blocks into the flipped
    layout: out(j, src*(n0/p) + i, k) = block_src(j, i, k)."""
    if out.tag is not SpectralTag.CONTIGUOUS_FLIPPED:
        raise ContractError("unpack target must be a CONTIGUOUS_FLIPPED slab")
    lay = out.layout
    if len(blocks) != lay.p:
        raise ProtocolError(f"expected {lay.p} blocks, got {len(blocks)}")
    shape = (lay.n1p, lay.n0p, lay.grid.n2c)
    for src, block in enumerate(blocks):
        if block.shape != shape:
            raise ProtocolError(f"block {src} has shape {block.shape}, expected {shape}")
        _unpack_block(block, src, out, counter)


def exchange_transpose_forward(slab: np.ndarray, plan: ExchangePlan, ep: Endpoint) -> SpectralSlab:
    """pack (local transpose) -> contiguous all-to-all -> rearrange."""
    if plan.strategy is not Strategy.TRANSPOSE:
        raise ContractError("plan was built for the strided strategy")
    slab3 = _as_stage_array(slab, plan)
    p, rank = plan.p, plan.rank
    blk3 = (plan.n1p, plan.n0p, plan.grid.n2c)
    pack3 = plan.pack_scratch.reshape(p, *blk3)
    for dest in range(p):
        pack_transposed(
            slab3, dest, p, out=pack3[dest], counter=plan.counters if dest != rank else None
        )
    ep.all_to_all(
        plan.pack_scratch,
        plan.send_descs,
        plan.landing_scratch,
        plan.recv_descs,
        plan.comm_pattern,
        plan.counters,
    )
    out = SpectralSlab(plan.spectral_layout, SpectralTag.CONTIGUOUS_FLIPPED, plan.flipped_scratch)
    landing3 = plan.landing_scratch.reshape(p, *blk3)
    for src in range(p):
        _unpack_block(landing3[src], src, out, plan.counters if src != rank else None)
    return out


def exchange_transpose_inverse(
    spec: SpectralSlab, plan: ExchangePlan, ep: Endpoint, out: np.ndarray | None = None
) -> np.ndarray:
    """Exact inverse permutation of exchange_transpose_forward.

    Slices each rank's columns back out of the flipped layout, exchanges,
    and un-transposes on arrival; returns the (n0/p, n1, n2c) buffer.
    """
    if plan.strategy is not Strategy.TRANSPOSE:
        raise ContractError("plan was built for the strided strategy")
    if spec.tag is not SpectralTag.CONTIGUOUS_FLIPPED:
        raise ContractError(f"transpose inverse needs a CONTIGUOUS_FLIPPED slab, got {spec.tag}")
    p, rank = plan.p, plan.rank
    n0p, n1p, n2c = plan.n0p, plan.n1p, plan.grid.n2c
    flipped3 = spec.data.reshape(n1p, plan.grid.n0, n2c)
    pack3 = plan.pack_scratch.reshape(p, n1p, n0p, n2c)
    for dest in range(p):
        pack3[dest] = flipped3[:, dest * n0p : (dest + 1) * n0p, :]
        if dest != rank:
            plan.counters.bytes_packed += pack3[dest].nbytes
    ep.all_to_all(
        plan.pack_scratch,
        plan.send_descs,
        plan.landing_scratch,
        plan.recv_descs,
        plan.comm_pattern,
        plan.counters,
    )
    if out is None:
        if plan.inverse_scratch is None:
            plan.inverse_scratch = np.empty(plan.p * plan.block_elems, dtype=np.complex128)
        out = plan.inverse_scratch
    out3 = out.reshape(n0p, plan.grid.n1, n2c)
    landing3 = plan.landing_scratch.reshape(p, n1p, n0p, n2c)
    for src in range(p):
        out3[:, src * n1p : (src + 1) * n1p, :] = landing3[src].transpose(1, 0, 2)
        if src != rank:
            plan.counters.bytes_unpacked += landing3[src].nbytes
    return out3


def exchange_strided_forward(slab: np.ndarray, plan: ExchangePlan, ep: Endpoint) -> SpectralSlab:
    """Exchange column bands in place through strided descriptors.

    No local transpose and no rearrangement: each peer's band is gathered
    straight off the buffer onto the wire, and the block received from a
    peer is scattered into the band that was just vacated.  The self band
    is not touched at all.
    """
    if plan.strategy is not Strategy.STRIDED:
        raise ContractError("plan was built for the transpose strategy")
    slab3 = _as_stage_array(slab, plan)
    flat = slab3.reshape(-1)
    ep.all_to_all(flat, plan.send_descs, flat, plan.recv_descs, plan.comm_pattern, plan.counters)
    return SpectralSlab(plan.spectral_layout, SpectralTag.STRIDED_INPLACE, flat)


def exchange_strided_inverse(
    spec: SpectralSlab, plan: ExchangePlan, ep: Endpoint
) -> np.ndarray:
    """Inverse of the in-place band exchange: the identical descriptor
    geometry sends every received band home again."""
    if plan.strategy is not Strategy.STRIDED:
        raise ContractError("plan was built for the transpose strategy")
    if spec.tag is not SpectralTag.STRIDED_INPLACE:
        raise ContractError(f"strided inverse needs a STRIDED_INPLACE slab, got {spec.tag}")
    flat = spec.data
    ep.all_to_all(flat, plan.send_descs, flat, plan.recv_descs, plan.comm_pattern, plan.counters)
    return flat.reshape(plan.n0p, plan.grid.n1, plan.grid.n2c)
