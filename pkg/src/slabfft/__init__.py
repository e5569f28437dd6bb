"""Slab-decomposed distributed 3D real FFT with two exchange strategies.

The library transforms a real n0 x n1 x n2 field (powers of two) to its
n0 x n1 x (n2/2+1) half spectrum and back, with the field divided among p
simulated ranks.  The inter-rank step between the plane stage and the
column stage can run either as the classic pack/exchange/rearrange
transpose or as the in-place strided exchange that skips both local
copy passes; byte counters and per-stage timers quantify the difference.
"""

from .dfft import FftPlan, forward, gather_real, gather_spectral, inverse, plan, scatter_real
from .errors import (
    ConfigurationError,
    ConsistencyError,
    ContractError,
    LayoutError,
    ProtocolError,
    SizeError,
    SlabFftError,
    TransportError,
)
from .exchange import (
    ExchangePlan,
    Strategy,
    exchange_strided_forward,
    exchange_strided_inverse,
    exchange_transpose_forward,
    exchange_transpose_inverse,
    pack_transposed,
    plan_exchange,
    unpack_received,
)
from .kernels import (
    Direction,
    TwiddleTable,
    TwoLevelStride,
    fft2d_c2r_plane,
    fft2d_r2c_plane,
    fft_c2c_inplace,
    fft_c2c_strided,
    fft_c2r_1d,
    fft_r2c_1d,
    plan_twiddles,
)
from .layout import (
    DistAxis,
    GlobalGrid,
    RealSlab,
    SlabLayout,
    SpectralSlab,
    SpectralTag,
    column_stride_descriptor,
    owned_range,
    spectral_offset,
    validate,
)
from .oracle import dft1d_naive, dft3d_r2c_naive, global_exchange_reference
from .transport import (
    CommMode,
    CommPattern,
    CopyCounter,
    Endpoint,
    LayoutDescriptor,
    make_communicators,
    run_spmd,
)

__version__ = "0.1.0"
