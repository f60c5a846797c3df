"""Seedable, splittable random streams.

Two kinds of randomness are used in the library:

* Frequency draws.  These must be regenerable from ``seed`` alone because
  model files store only the seed.  They come from a Philox counter stream
  keyed by the seed; Gaussian variates use the inverse CDF so that each
  variate consumes exactly one 64-bit word.  Row ``j`` of a ``D x d`` draw is
  therefore the fixed word range ``[j*d, (j+1)*d)`` of the stream: rows can be
  produced in any order or in parallel, and a draw of size ``D`` is a prefix
  of any larger draw with the same seed.

* Everything else (data sets, shuffling, test points).  These use
  :func:`substream`, a numpy ``Generator`` derived from ``(seed, *tags)``.
"""

import zlib

import numpy as np
from scipy.special import ndtri

from . import _parallel
from .errors import InvalidParameterError

_WORDS_PER_BLOCK = 4  # Philox4x64 emits four words per counter increment.
_ROW_CHUNK = 1 << 16


def check_seed(seed):
    """Validate and return a 64-bit unsigned seed."""
    if isinstance(seed, bool) or not isinstance(seed, (int, np.integer)):
        raise InvalidParameterError(f"seed must be an integer, got {seed!r}")
    seed = int(seed)
    if not 0 <= seed < 2**64:
        raise InvalidParameterError(f"seed must lie in [0, 2**64), got {seed}")
    return seed


def _words(seed, start, count):
    bitgen = np.random.Philox(key=seed)
    block, offset = divmod(start, _WORDS_PER_BLOCK)
    if block:
        bitgen.advance(block)
    return bitgen.random_raw(count + offset)[offset:]


def uniform_words(seed, start, count):
    """Open-interval uniforms from word positions ``[start, start+count)``."""
    raw = _words(check_seed(seed), int(start), int(count))
    return ((raw >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0**-53


def standard_normal_rows(seed, n_rows, dim, first_row=0):
    """Rows ``first_row .. first_row+n_rows-1`` of the seed's Gaussian stream.

    Returns an ``(n_rows, dim)`` array of i.i.d. N(0, 1) variates.
    """
    seed = check_seed(seed)
    n_rows, dim = int(n_rows), int(dim)
    pieces = _parallel.chunks(n_rows, _ROW_CHUNK)

    def block(sl):
        start = (first_row + sl.start) * dim
        u = uniform_words(seed, start, (sl.stop - sl.start) * dim)
        return ndtri(u).reshape(-1, dim)

    if not pieces:
        return np.empty((0, dim))
    return np.concatenate(_parallel.ordered_map(block, pieces), axis=0)


def _tag_key(tag):
    if isinstance(tag, (int, np.integer)):
        return int(tag)
    return zlib.crc32(str(tag).encode("utf-8"))


def substream(seed, *tags):
    """Independent ``numpy.random.Generator`` identified by ``(seed, *tags)``."""
    seq = np.random.SeedSequence(check_seed(seed), spawn_key=tuple(_tag_key(t) for t in tags))
    return np.random.Generator(np.random.Philox(seq))


def child_seed(seed, *tags):
    """A 64-bit seed derived from ``(seed, *tags)``, for APIs that take integers."""
    seq = np.random.SeedSequence(check_seed(seed), spawn_key=tuple(_tag_key(t) for t in tags))
    return int(seq.generate_state(1, dtype=np.uint64)[0])
