"""Counter-based random streams for reproducible simulation.

The whole library draws randomness from a single named scheme:

* Philox4x64 keyed by ``(seed, 0)`` produces a stream of 64-bit words.
* Word ``i`` becomes the uniform ``(i >> 11) * 2^-53 + 2^-54`` in (0, 1).
* Normals are the inverse Gaussian CDF of those uniforms.

Because every word has a fixed position in the stream, any slice
``[start, start + count)`` can be generated directly, without drawing the
prefix.  Consumers that index words by trial number therefore produce
bit-identical output no matter how trials are chunked or spread over
threads.  Philox's ``advance`` steps one 256-bit block (four words) per
unit, so slicing advances by ``start // 4`` blocks and discards
``start % 4`` words.

Cross-platform bit-exactness of ``ndtri`` is not promised; within one
build, identical seeds give identical streams.
"""

from __future__ import annotations

import numpy as np
from numpy.random import Philox
from scipy.special import ndtri

__all__ = ["raw_words", "uniforms", "normals"]

_U64 = np.uint64
_MAX_SEED = 2**64


def _check_seed(seed: int) -> int:
    if not isinstance(seed, (int, np.integer)):
        raise ValueError(f"seed must be an integer, got {type(seed).__name__}")
    if not 0 <= int(seed) < _MAX_SEED:
        raise ValueError(f"seed must fit in 64 bits, got {seed}")
    return int(seed)


def raw_words(seed: int, start: int, count: int) -> np.ndarray:
    """Words ``[start, start + count)`` of the seed's Philox stream."""
    seed = _check_seed(seed)
    if start < 0 or count < 0:
        raise ValueError("start and count must be nonnegative")
    bits = Philox(key=np.array([seed, 0], dtype=_U64))
    blocks, rem = divmod(start, 4)
    if blocks:
        bits.advance(blocks)
    if rem:
        bits.random_raw(rem)  # discard to reach an intra-block offset
    if count == 0:
        return np.empty(0, dtype=_U64)
    return bits.random_raw(count)


def uniforms(seed: int, start: int, count: int) -> np.ndarray:
    """Uniform (0, 1) doubles at word offsets ``[start, start + count)``."""
    w = raw_words(seed, start, count)
    # top 53 bits -> [0, 1), then shift off zero so ndtri stays finite
    return (w >> _U64(11)).astype(np.float64) * 2.0**-53 + 2.0**-54


def normals(seed: int, start: int, count: int) -> np.ndarray:
    """Standard normals at word offsets ``[start, start + count)``."""
    return ndtri(uniforms(seed, start, count))
