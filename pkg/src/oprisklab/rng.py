"""Counter-based random streams.

Every stochastic routine in this package draws from an explicit
:class:`RandomStream` instead of global state.  A stream is the pure pair
``(master_seed, stream_id)`` keyed into a Philox-4x64-10 generator, so any
substream can be reconstructed independently of every other one.  The Monte
Carlo engine assigns one stream per replication, which is what makes results
independent of how replications are partitioned across workers.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError

_UINT64_MAX = 2**64 - 1


@dataclass(frozen=True)
class RandomStream:
    """A reproducible substream identified by ``(master_seed, stream_id)``."""

    master_seed: int
    stream_id: int = 0

    def __post_init__(self) -> None:
        for name in ("master_seed", "stream_id"):
            value = getattr(self, name)
            if not isinstance(value, (int, np.integer)) or not 0 <= value <= _UINT64_MAX:
                raise DomainError(f"{name} must be an unsigned 64-bit integer, got {value!r}")

    def generator(self) -> np.random.Generator:
        """Return a fresh NumPy generator positioned at the stream origin."""
        key = np.array([self.master_seed, self.stream_id], dtype=np.uint64)
        return np.random.Generator(np.random.Philox(key=key))

    def substream(self, stream_id: int) -> "RandomStream":
        """Derive the sibling stream with the same master seed."""
        return RandomStream(self.master_seed, stream_id)
