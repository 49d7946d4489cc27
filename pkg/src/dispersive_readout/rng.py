"""Counter-based random numbers (Threefry-2x32, 20 rounds).

A draw is a pure function of (key, counter), so streams can be split across
workers without any shared state. Keys for independent streams derive from
``(seed, stream)``; within a stream the counter is ``(trial, draw)``.
"""

import numpy as np

from ._backend import kernels
from .errors import DomainError

__all__ = ["sample_poisson", "stream_key", "threefry2x32", "uniform"]

_M32 = 0xFFFFFFFF
_M64 = (1 << 64) - 1
_STREAM_TAG = 0x9E3779B9


def _check_seed(seed):
    seed = int(seed)
    if not 0 <= seed <= _M64:
        raise DomainError(f"seed must be a 64-bit unsigned integer, got {seed}")
    return seed


def threefry2x32(key, counter):
    """One Threefry-2x32-20 block; ``key`` and ``counter`` are 32-bit pairs."""
    return kernels.threefry2x32(key[0] & _M32, key[1] & _M32, counter[0] & _M32, counter[1] & _M32)


def stream_key(seed, stream):
    """Key of stream ``stream`` under a 64-bit ``seed``."""
    seed = _check_seed(seed)
    if not 0 <= stream <= _M32:
        raise DomainError(f"stream index must fit in 32 bits, got {stream}")
    return kernels.threefry2x32(seed & _M32, seed >> 32, stream, _STREAM_TAG)


def uniform(key, counter):
    """Uniform double in (0, 1) built from the 53 top bits of one block."""
    return kernels.uniform(key[0], key[1], counter[0], counter[1])


def sample_poisson(mean, size, seed, stream=0):
    """Draw ``size`` Poisson variates; draw ``i`` uses trial counter ``i``.

    Sequential-search inversion below mean 30, transformed rejection
    (PTRS) above.
    """
    mean = float(mean)
    if not mean >= 0.0 or not np.isfinite(mean):
        raise DomainError(f"mean must be finite and >= 0, got {mean!r}")
    if size < 0 or size > _M32:
        raise DomainError(f"size must lie in [0, 2^32], got {size}")
    k0, k1 = stream_key(seed, stream)
    out = np.empty(int(size), dtype=np.int64)
    kernels.sample_poisson(mean, k0, k1, out)
    return out
