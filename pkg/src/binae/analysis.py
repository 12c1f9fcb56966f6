"""Algebraic checks on a codebook: distance spectrum, linearity after
translation, equivalence to Hamming(7,4), and exhaustive decoder comparison."""

import itertools
import json
from dataclasses import dataclass, field

import numpy as np

from .classic import Codebook, hamming74_codebook, ml_candidates, distances_to_codebook
from .errors import DimensionError


@dataclass
class DistanceSpectrum:
    # counts[d]: average number of codewords at distance d from a codeword
    counts: np.ndarray

    @property
    def n(self):
        return len(self.counts) - 1

    def as_ints(self):
        """Counts as integers when every entry is integral, else ``None``."""
        r = np.rint(self.counts)
        return [int(c) for c in r] if np.allclose(self.counts, r, atol=1e-12) else None

    def csv(self):
        header = "distance," + ",".join(str(d) for d in range(self.n + 1))
        vals = self.as_ints() or [f"{c:.6g}" for c in self.counts]
        return header + "\ncount," + ",".join(str(v) for v in vals) + "\n"


def pairwise_distances(cb):
    return distances_to_codebook(cb.words, cb)


def distance_spectrum(cb):
    D = pairwise_distances(cb)
    counts = np.array([np.count_nonzero(D == d) for d in range(cb.n + 1)], dtype=np.float64) / cb.M
    return DistanceSpectrum(counts)


def min_distance(cb):
    """Smallest distance between two different messages' codewords (0 means a duplicate)."""
    if cb.M < 2:
        raise ValueError("minimum distance needs at least two codewords")
    D = pairwise_distances(cb)
    iu = np.triu_indices(cb.M, k=1)
    return int(D[iu].min())


def _translate(cb, t):
    return cb.words * t


def _row_keys(words):
    # {-1,+1}^n rows -> integers (bit 1 for -1, first coordinate is the MSB)
    bits = (np.asarray(words) < 0).astype(np.int64)
    return bits @ (1 << np.arange(bits.shape[1] - 1, -1, -1))


def check_linearity(cb):
    """Translate by ``words[0]`` and test closure under elementwise product.

    Returns ``(is_linear, translation)``. Duplicate codewords make the answer
    ``False``.
    """
    t = cb.words[0].copy()
    T = _translate(cb, t)
    keys = _row_keys(T)
    members = set(keys.tolist())
    if len(members) != cb.M or 0 not in members:
        return False, t
    # product in the +-1 domain is XOR of the integer keys
    closed = all((int(a) ^ int(b)) in members for a in keys for b in keys)
    return closed, t


@dataclass
class Equivalence:
    equivalent: bool
    translation: np.ndarray
    permutation: tuple = None  # coordinate i of the mapped word is coordinate permutation[i] of the original
    pure_coset: bool = False  # identity permutation suffices


def hamming_equivalence(cb, reference=None):
    """Search translation + coordinate permutation mapping ``cb`` onto Hamming(7,4).

    The translation is by ``words[0]``; permutations are tried in
    lexicographic order and the first match is returned.
    """
    ref = reference if reference is not None else hamming74_codebook()
    if (cb.k, cb.n) != (ref.k, ref.n):
        raise DimensionError(f"equivalence test needs (k={ref.k}, n={ref.n}), got (k={cb.k}, n={cb.n})")
    t = cb.words[0].copy()
    T = _translate(cb, t)
    target = np.sort(_row_keys(ref.words))
    if len(set(_row_keys(T).tolist())) != cb.M:
        return Equivalence(False, t)
    for perm in itertools.permutations(range(cb.n)):
        if np.array_equal(np.sort(_row_keys(T[:, perm])), target):
            perm = tuple(int(i) for i in perm)
            return Equivalence(True, t, perm, pure_coset=perm == tuple(range(cb.n)))
    return Equivalence(False, t)


def all_received_words(n):
    """Every word of {-1,+1}^n, ordered by its bit pattern (MSB first)."""
    if n > 20:
        raise ValueError(f"exhaustive enumeration limited to n <= 20, got {n}")
    i = np.arange(2 ** n)
    bits = (i[:, None] >> np.arange(n - 1, -1, -1)) & 1
    return 1.0 - 2.0 * bits


@dataclass
class Agreement:
    fraction: float
    total: int
    agreed: int
    disagreements: list = field(default_factory=list)  # (word, decision, reference set)


def decoder_agreement(cb, decoder, reference=None):
    """Compare ``decoder`` against a reference decoder on every received word.

    ``decoder`` maps a ``(batch, n)`` array of words to message ids.  With the
    default ML reference a decision counts as agreeing when it is any of the
    minimum-distance messages.
    """
    if cb.n > 20:
        raise ValueError(f"exhaustive enumeration limited to n <= 20, got {cb.n}")
    Y = all_received_words(cb.n)
    decisions = np.asarray(decoder(Y)).astype(np.int64)
    if decisions.shape != (len(Y),):
        raise DimensionError("decoder must return one decision per received word")
    bad = []
    for y, dec in zip(Y, decisions):
        ref = ml_candidates(y, cb) if reference is None else {int(reference(y[None, :])[0])}
        if int(dec) not in ref:
            bad.append((y.astype(int).tolist(), int(dec), sorted(ref)))
    agreed = len(Y) - len(bad)
    return Agreement(agreed / len(Y), len(Y), agreed, bad)


@dataclass
class StructureReport:
    k: int
    n: int
    distinct_words: int
    d_min: int
    spectrum: DistanceSpectrum
    is_linear_after_translation: bool
    translation_word: np.ndarray
    hamming_equivalent: bool = False
    pure_coset: bool = False
    permutation: tuple = None
    agreement: Agreement = None

    @property
    def failure_mode(self):
        """Short note when the code misses the optimal (7,4) structure."""
        if self.distinct_words < 2 ** self.k:
            return "duplicate codewords"
        if (self.k, self.n) == (4, 7) and self.d_min < 3:
            return f"d_min={self.d_min} (sub-optimal convergence)"
        return None

    def to_dict(self):
        d = {
            "k": self.k,
            "n": self.n,
            "distinct_words": self.distinct_words,
            "d_min": self.d_min,
            "spectrum": self.spectrum.as_ints() or self.spectrum.counts.tolist(),
            "is_linear_after_translation": self.is_linear_after_translation,
            "translation_word": [int(s) for s in self.translation_word],
            "hamming_equivalent": self.hamming_equivalent,
            "pure_coset": self.pure_coset,
            "permutation": list(self.permutation) if self.permutation is not None else None,
            "failure_mode": self.failure_mode,
        }
        if self.agreement is not None:
            d["decoder_agreement"] = {
                "fraction": self.agreement.fraction,
                "agreed": self.agreement.agreed,
                "total": self.agreement.total,
                "disagreements": [
                    {"word": w, "decision": dec, "ml": ref} for w, dec, ref in self.agreement.disagreements
                ],
            }
        return d

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2) + "\n"

    def to_text(self):
        lines = []
        for key, val in self.to_dict().items():
            if key == "decoder_agreement":
                lines.append(f"decoder_agreement: {val['agreed']}/{val['total']}")
                for dis in val["disagreements"]:
                    lines.append(f"disagreement: word={dis['word']} decision={dis['decision']} ml={dis['ml']}")
                continue
            if isinstance(val, list):
                val = " ".join(str(v) for v in val)
            lines.append(f"{key}: {val}")
        return "\n".join(lines) + "\n"


def analyze(cb, decoder=None):
    linear, t = check_linearity(cb)
    report = StructureReport(
        k=cb.k, n=cb.n,
        distinct_words=cb.num_distinct(),
        d_min=min_distance(cb),
        spectrum=distance_spectrum(cb),
        is_linear_after_translation=linear,
        translation_word=t,
    )
    if (cb.k, cb.n) == (4, 7):
        eq = hamming_equivalence(cb)
        report.hamming_equivalent = eq.equivalent
        report.pure_coset = eq.pure_coset
        report.permutation = eq.permutation
    if decoder is not None:
        report.agreement = decoder_agreement(cb, decoder)
    return report
