"""Seeded random streams and the few dense kernels the networks need.

Matrices are plain float64 numpy arrays. Random streams are Philox
(counter-based) generators keyed by ``(seed, purpose, *subkeys)`` so that data,
initialization and channel noise never share a stream and do not depend on the
order in which they are consumed.
"""

import numpy as np

from .errors import DimensionError

# purpose tags -> spawn key prefix; never renumber, it changes every stream
PURPOSES = {
    "data": 1,
    "init": 2,
    "channel": 3,
    "validation": 4,
    "eval": 5,
    "test": 6,
}

Rng = np.random.Generator


def make_rng(seed, purpose, *subkeys):
    """Return an independent generator for ``purpose`` under ``seed``.

    >>> a = make_rng(3, "data").random(); b = make_rng(3, "data").random()
    >>> a == b
    True
    """
    if purpose not in PURPOSES:
        raise ValueError(f"unknown rng purpose {purpose!r}")
    key = (PURPOSES[purpose],) + tuple(int(s) for s in subkeys)
    ss = np.random.SeedSequence(entropy=int(seed) & (2**64 - 1), spawn_key=key)
    return np.random.Generator(np.random.Philox(ss))


def rng_uniform(rng, lo, hi):
    """One draw from ``[lo, hi)``; ``lo == hi`` returns ``lo`` exactly."""
    if not lo <= hi:
        raise ValueError(f"empty range [{lo}, {hi})")
    if lo == hi:
        rng.random()  # keep the stream position independent of the range
        return float(lo)
    return float(rng.uniform(lo, hi))


def matmul(a, b):
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.ndim != 2 or b.ndim != 2:
        raise DimensionError(f"matmul expects 2-D operands, got {a.ndim}-D and {b.ndim}-D")
    if a.shape[1] != b.shape[0]:
        raise DimensionError(f"cannot multiply {a.shape} by {b.shape}")
    return a @ b


def softmax(v, axis=-1):
    """Numerically stable softmax along ``axis`` (max-subtracted)."""
    v = np.asarray(v, dtype=np.float64)
    z = v - np.max(v, axis=axis, keepdims=True)
    e = np.exp(z)
    return e / np.sum(e, axis=axis, keepdims=True)
