"""Classical reference: Hamming(7,4), brute-force ML decoding, exact BLER.

Codebooks hold ``M = 2**k`` words over {-1, +1}; row ``m`` is the codeword of
message ``m``.
"""

from dataclasses import dataclass

import numpy as np

from .channel import bits_to_word, check_word
from .errors import DimensionError, FormatError

# systematic [I_4 | P]
GENERATOR_74 = np.array(
    [
        [1, 0, 0, 0, 1, 1, 0],
        [0, 1, 0, 0, 1, 0, 1],
        [0, 0, 1, 0, 0, 1, 1],
        [0, 0, 0, 1, 1, 1, 1],
    ],
    dtype=np.int8,
)


@dataclass(frozen=True, eq=False)
class Codebook:
    k: int
    n: int
    words: np.ndarray  # (2**k, n) float64 in {-1, +1}

    def __post_init__(self):
        words = np.array(self.words, dtype=np.float64)
        if words.ndim != 2 or words.shape != (2 ** self.k, self.n):
            raise DimensionError(
                f"codebook for (k={self.k}, n={self.n}) needs shape {(2 ** self.k, self.n)}, got {words.shape}"
            )
        check_word(words)
        words.setflags(write=False)
        object.__setattr__(self, "words", words)

    @property
    def M(self):
        return 2 ** self.k

    def __len__(self):
        return self.M

    def __eq__(self, other):
        if not isinstance(other, Codebook):
            return NotImplemented
        return (self.k, self.n) == (other.k, other.n) and np.array_equal(self.words, other.words)

    def bits(self):
        return (self.words < 0).astype(np.int8)

    def num_distinct(self):
        return len({tuple(w) for w in self.words})

    def duplicates(self):
        """Pairs ``(i, j)``, ``i < j``, of messages sharing a codeword."""
        seen, dup = {}, []
        for j, w in enumerate(map(tuple, self.words)):
            if w in seen:
                dup.append((seen[w], j))
            else:
                seen[w] = j
        return dup

    def to_text(self):
        lines = [f"{self.k} {self.n}"]
        for w in self.words:
            lines.append(" ".join("+1" if s > 0 else "-1" for s in w))
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text):
        rows = [ln.split() for ln in text.splitlines() if ln.strip()]
        if not rows or len(rows[0]) != 2:
            raise FormatError("codebook header must be 'k n'")
        try:
            k, n = int(rows[0][0]), int(rows[0][1])
        except ValueError as exc:
            raise FormatError(f"bad codebook header {rows[0]!r}") from exc
        if k < 1 or n < 1 or len(rows) - 1 != 2 ** k:
            raise FormatError(f"expected {2 ** max(k, 0)} codeword lines after header, got {len(rows) - 1}")
        symbols = {"+1": 1.0, "-1": -1.0}
        words = []
        for i, row in enumerate(rows[1:], start=2):
            if len(row) != n or any(s not in symbols for s in row):
                raise FormatError(f"line {i}: expected {n} symbols of '+1'/'-1'")
            words.append([symbols[s] for s in row])
        return cls(k, n, np.array(words))

    def save(self, path):
        with open(path, "w") as fh:
            fh.write(self.to_text())

    @classmethod
    def load(cls, path):
        with open(path) as fh:
            return cls.from_text(fh.read())


def message_bits(k):
    """All ``2**k`` messages as bit rows, MSB first (row ``m`` spells ``m``)."""
    m = np.arange(2 ** k)
    return ((m[:, None] >> np.arange(k - 1, -1, -1)) & 1).astype(np.int8)


def hamming74_codebook():
    bits = (message_bits(4) @ GENERATOR_74) % 2
    return Codebook(4, 7, bits_to_word(bits))


def hamming_distance(a, b):
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        raise DimensionError(f"length mismatch {a.shape} vs {b.shape}")
    return int(np.count_nonzero(a != b))


def distances_to_codebook(y, cb):
    """Hamming distance from each received word (row of ``y``) to each codeword."""
    y = np.atleast_2d(np.asarray(y, dtype=np.float64))
    if y.shape[1] != cb.n:
        raise DimensionError(f"received words have length {y.shape[1]}, codebook has n={cb.n}")
    # for +-1 vectors: d = (n - <y, x>) / 2
    return np.rint((cb.n - y @ cb.words.T) / 2).astype(np.int64)


def ml_decode_batch(y, cb):
    """Minimum-distance decisions for a batch; ties go to the lowest message id."""
    return np.argmin(distances_to_codebook(y, cb), axis=1)


def ml_decode(y, cb):
    y = np.asarray(y)
    if y.shape != (cb.n,):
        raise DimensionError(f"received word must have length {cb.n}")
    return int(ml_decode_batch(y[None, :], cb)[0])


def ml_candidates(y, cb):
    """Every message whose codeword is at minimum distance from ``y``."""
    d = distances_to_codebook(y, cb)[0]
    return set(np.flatnonzero(d == d.min()).tolist())


def exact_bler_perfect74(p):
    """Block error rate of Hamming(7,4) with ML decoding on a BSC(p).

    The code corrects exactly the patterns of weight <= 1.
    """
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"crossover probability {p} outside [0, 1]")
    q = 1.0 - p
    return 1.0 - q ** 7 - 7.0 * p * q ** 6


def exact_bler_uncoded(p, n=7):
    """Any flip in an uncoded n-bit block is a block error."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"crossover probability {p} outside [0, 1]")
    return 1.0 - (1.0 - p) ** n
