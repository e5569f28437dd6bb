"""Exception hierarchy shared by all slabfft modules."""


class SlabFftError(Exception):
    """Base class for every error raised by this package."""


class SizeError(SlabFftError, ValueError):
    """Transform size is unsupported (zero, negative, or not a power of two)."""


class LayoutError(SlabFftError, ValueError):
    """A stride descriptor addresses overlapping or out-of-range elements."""


class ConfigurationError(SlabFftError, ValueError):
    """Grid / process-count combination violates the slab division rules."""


class ContractError(SlabFftError):
    """An operation was handed data whose layout tag it cannot accept."""


class ProtocolError(SlabFftError):
    """Sender and receiver disagree about a message's shape or a rank is missing."""


class TransportError(SlabFftError):
    """The message fabric failed: unknown peer, aborted exchange, or deadlock."""


class ConsistencyError(SlabFftError):
    """A half-spectrum failed its Hermitian consistency check (corrupted data)."""
