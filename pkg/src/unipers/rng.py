"""Seed derivation.

All randomness in the package comes from :func:`stream`, which maps a
64-bit seed plus a tuple of labels onto an independent Philox stream.
Philox is counter based, so derived streams never overlap and do not
depend on the order in which they are created.
"""
import hashlib

import numpy as np

_MASK64 = (1 << 64) - 1


def _label_words(label):
    if isinstance(label, (int, np.integer)):
        return [int(label) & 0xFFFFFFFF, (int(label) >> 32) & 0xFFFFFFFF]
    digest = hashlib.sha256(str(label).encode()).digest()
    return [int.from_bytes(digest[i:i + 4], "little") for i in range(0, 16, 4)]


def derive_seed(seed, *labels):
    """Return a 64-bit integer seed derived from ``seed`` and ``labels``."""
    words = _label_words(int(seed) & _MASK64)
    for label in labels:
        words.extend(_label_words(label))
    ss = np.random.SeedSequence(words)
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def stream(seed, *labels):
    """Return a ``numpy.random.Generator`` for ``(seed, *labels)``."""
    words = _label_words(int(seed) & _MASK64)
    for label in labels:
        words.extend(_label_words(label))
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(words)))
