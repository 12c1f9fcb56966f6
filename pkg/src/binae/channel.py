"""Binary symmetric channel, bit/symbol mapping and the sign binarizer.

Words live in the antipodal alphabet {-1, +1}; bit 0 maps to +1 and bit 1 to
-1, so XOR of bit vectors is the elementwise product of words.
"""

import numpy as np

from .numerics import rng_uniform


def check_word(x):
    x = np.asarray(x)
    if not np.all((x == 1) | (x == -1)):
        raise ValueError("word entries must be -1 or +1")
    return x


def bsc_apply(x, p, rng):
    """Flip each symbol of ``x`` independently with probability ``p``.

    Works on a single word or a batch (any shape); the result is ``x * z``
    with ``z = -1`` w.p. ``p``.
    """
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"crossover probability {p} outside [0, 1]")
    x = np.asarray(x, dtype=np.float64)
    z = np.where(rng.random(x.shape) < p, -1.0, 1.0)
    return x * z


def binarize(x):
    """Componentwise sign with sign(0) = +1."""
    x = np.asarray(x, dtype=np.float64)
    if np.isnan(x).any():
        raise ValueError("cannot binarize NaN")
    return np.where(x >= 0.0, 1.0, -1.0)


def sample_mask_batch(batch, n, p_lo, p_hi, rng):
    """Training noise for one mini-batch.

    One crossover probability is drawn uniformly from ``[p_lo, p_hi)`` for the
    whole batch; each sample then gets its own independent mask.
    Returns ``(masks, p)`` with ``masks`` of shape ``(batch, n)``.
    """
    if not 0.0 <= p_lo <= p_hi <= 1.0:
        raise ValueError(f"invalid mask probability range [{p_lo}, {p_hi}]")
    p = rng_uniform(rng, p_lo, p_hi)
    masks = np.where(rng.random((batch, n)) < p, -1.0, 1.0)
    return masks, p


def sample_epoch_masks(num_samples, batch_size, n, p_lo, p_hi, rng):
    """Masks for a whole epoch, same law as repeated :func:`sample_mask_batch`.

    Vectorized: the per-batch probabilities are drawn first, then all the
    per-sample uniforms.
    """
    if not 0.0 <= p_lo <= p_hi <= 1.0:
        raise ValueError(f"invalid mask probability range [{p_lo}, {p_hi}]")
    n_batches = -(-num_samples // batch_size)
    ps = rng.uniform(p_lo, p_hi, size=n_batches) if p_hi > p_lo else np.full(n_batches, p_lo)
    per_sample = np.repeat(ps, batch_size)[:num_samples]
    u = rng.random((num_samples, n))
    return np.where(u < per_sample[:, None], -1.0, 1.0)


def bits_to_word(bits):
    bits = np.asarray(bits)
    if not np.all((bits == 0) | (bits == 1)):
        raise ValueError("bits must be 0 or 1")
    return 1.0 - 2.0 * bits


def word_to_bits(word):
    return (check_word(word) < 0).astype(np.int8)
