"""Monte Carlo block error rate for the four encoder/decoder pairings.

``hamming-ml``  Hamming(7,4) codewords, minimum-distance decoding
``hamming-ae``  Hamming(7,4) codewords, trained neural decoder
``ae-ml``       learned codebook, minimum-distance decoding
``ae-ae``       learned codebook, trained neural decoder
"""

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from .analysis import all_received_words, hamming_equivalence
from .autoencoder import decode_decisions, extract_codebook
from .classic import hamming74_codebook, ml_decode_batch
from .errors import ConfigError, DimensionError, FormatError
from .numerics import make_rng

PAIRINGS = ("hamming-ml", "hamming-ae", "ae-ml", "ae-ae")
DEFAULT_GRID = tuple(round(0.01 * i, 2) for i in range(1, 11))


@dataclass(frozen=True)
class EvalConfig:
    p_grid: tuple = DEFAULT_GRID
    trials_per_p: int = 1_000_000
    seed: int = 0
    pairing: str = "hamming-ml"

    def validate(self):
        if not self.p_grid or any(not 0.0 <= p <= 1.0 for p in self.p_grid):
            raise ConfigError(f"p_grid must be a non-empty subset of [0, 1], got {self.p_grid}")
        if self.trials_per_p < 1:
            raise ConfigError("trials_per_p must be >= 1")
        if self.pairing not in PAIRINGS:
            raise ConfigError(f"unknown pairing {self.pairing!r}; choose from {PAIRINGS}")
        return self


@dataclass
class BlerPoint:
    p: float
    bler: float
    se: float
    trials: int
    errors: int


@dataclass
class BlerCurve:
    points: list = field(default_factory=list)
    pairing: str = ""

    @property
    def p_grid(self):
        return [pt.p for pt in self.points]

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["p", "bler", "se", "trials", "errors"])
        for pt in self.points:
            w.writerow([repr(pt.p), repr(pt.bler), repr(pt.se), pt.trials, pt.errors])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text, pairing=""):
        reader = csv.DictReader(io.StringIO(text))
        if reader.fieldnames != ["p", "bler", "se", "trials", "errors"]:
            raise FormatError(f"unexpected BLER CSV header {reader.fieldnames}")
        try:
            pts = [BlerPoint(float(r["p"]), float(r["bler"]), float(r["se"]), int(r["trials"]), int(r["errors"]))
                   for r in reader]
        except (TypeError, ValueError) as exc:
            raise FormatError(f"malformed BLER CSV row: {exc}") from exc
        return cls(pts, pairing)


def standard_error(bler, trials):
    return math.sqrt(bler * (1.0 - bler) / trials)


def _lookup_table(decoder, n):
    # every received word is binary, so a deterministic decoder is a table over 2**n words
    words = all_received_words(n)
    table = np.asarray(decoder(words)).astype(np.int64)
    if table.shape != (len(words),):
        raise DimensionError("decoder must return one decision per received word")
    return table


def _word_keys(words):
    bits = (words < 0).astype(np.int64)
    return bits @ (1 << np.arange(words.shape[1] - 1, -1, -1))


def run_bler(cfg, codebook, decoder, chunk=1 << 18):
    """Estimate BLER at each grid point.

    ``codebook`` maps message ids to transmitted words; ``decoder`` maps a
    ``(batch, n)`` array of received words to message ids.  The stream for
    grid point ``i`` is ``(seed, "eval", i)``, split into a message stream and
    a noise stream, so points are independent of each other, of evaluation
    order and of ``chunk``.
    """
    cfg.validate()
    n, M = codebook.n, codebook.M
    table = _lookup_table(decoder, n) if n <= 20 else None
    points = []
    for i, p in enumerate(cfg.p_grid):
        msg_rng, noise_rng = make_rng(cfg.seed, "eval", i, 0), make_rng(cfg.seed, "eval", i, 1)
        errors, done = 0, 0
        while done < cfg.trials_per_p:
            size = min(chunk, cfg.trials_per_p - done)
            msgs = np.minimum((msg_rng.random(size) * M).astype(np.int64), M - 1)
            z = np.where(noise_rng.random((size, n)) < p, -1.0, 1.0)
            y = codebook.words[msgs] * z
            dec = table[_word_keys(y)] if table is not None else np.asarray(decoder(y))
            errors += int(np.count_nonzero(dec != msgs))
            done += size
        bler = errors / cfg.trials_per_p
        points.append(BlerPoint(float(p), bler, standard_error(bler, cfg.trials_per_p), cfg.trials_per_p, errors))
    return BlerCurve(points, cfg.pairing)


def ml_decoder(codebook):
    return lambda y: ml_decode_batch(y, codebook)


def neural_decoder(params):
    return lambda y: decode_decisions(params, y)


def aligned_neural_decoder(params, learned):
    """Neural decoder applied to Hamming(7,4) codewords.

    The learned code is a translated, coordinate-permuted copy of Hamming(7,4)
    (``phi(w) = (w * t)[perm]``).  The receiver maps each received word into
    the learned code's frame with ``phi^-1``, runs the neural decoder, and
    reports the Hamming message whose codeword is ``phi`` of the chosen learned
    codeword.  ``phi`` is an isometry, so channel statistics are unchanged.
    """
    eq = hamming_equivalence(learned)
    if not eq.equivalent:
        raise ValueError("learned codebook is not equivalent to Hamming(7,4); hamming-ae pairing undefined")
    ham = hamming74_codebook()
    t = eq.translation
    perm = np.asarray(eq.permutation)
    inv = np.argsort(perm)
    mapped = (learned.words * t)[:, perm]
    ham_index = {tuple(w): i for i, w in enumerate(ham.words)}
    to_ham = np.array([ham_index[tuple(w)] for w in mapped])

    def decide(y):
        y_learned = np.asarray(y)[:, inv] * t
        return to_ham[decode_decisions(params, y_learned)]

    return decide


def pairing_sources(pairing, params=None, learned=None):
    """``(codebook, decoder)`` for one of :data:`PAIRINGS`."""
    if pairing not in PAIRINGS:
        raise ConfigError(f"unknown pairing {pairing!r}")
    if pairing == "hamming-ml":
        ham = hamming74_codebook()
        return ham, ml_decoder(ham)
    if params is None:
        raise ConfigError(f"pairing {pairing!r} needs a trained model")
    if learned is None:
        learned = extract_codebook(params)
    if (learned.k, learned.n) != (params.k, params.n):
        raise DimensionError("codebook and network dimensions differ")
    if pairing == "hamming-ae":
        return hamming74_codebook(), aligned_neural_decoder(params, learned)
    if pairing == "ae-ml":
        return learned, ml_decoder(learned)
    return learned, neural_decoder(params)


@dataclass
class CurveComparison:
    p_grid: list
    z: list
    ratio: list
    max_abs_z: float
    max_ratio: float
    flagged: list  # grid points with |z| > 4

    @property
    def equivalent(self):
        return not self.flagged


def compare_curves(a, b, threshold=4.0):
    """Per-point z-scores ``(a - b) / sqrt(se_a^2 + se_b^2)``."""
    if len(a.points) != len(b.points) or any(
        not math.isclose(x.p, y.p, rel_tol=0, abs_tol=1e-12) for x, y in zip(a.points, b.points)
    ):
        raise ValueError("curves are on different p grids")
    zs, ratios = [], []
    for x, y in zip(a.points, b.points):
        denom = math.sqrt(x.se ** 2 + y.se ** 2)
        if denom == 0.0:
            z = 0.0 if x.bler == y.bler else math.copysign(math.inf, x.bler - y.bler)
        else:
            z = (x.bler - y.bler) / denom
        zs.append(z)
        ratios.append(x.bler / y.bler if y.bler > 0 else (1.0 if x.bler == 0 else math.inf))
    flagged = [pt.p for pt, z in zip(a.points, zs) if abs(z) > threshold]
    return CurveComparison(
        p_grid=[pt.p for pt in a.points], z=zs, ratio=ratios,
        max_abs_z=max(abs(z) for z in zs), max_ratio=max(ratios), flagged=flagged,
    )


def parse_grid(text):
    """``"0.01:0.1:0.01"`` (inclusive) or ``"0.01,0.05"``."""
    text = text.strip()
    try:
        if ":" in text:
            lo, hi, step = (float(s) for s in text.split(":"))
            if step <= 0 or hi < lo:
                raise ValueError
            count = int(math.floor((hi - lo) / step + 1e-9)) + 1
            return tuple(round(lo + i * step, 12) for i in range(count))
        return tuple(float(s) for s in text.split(",") if s.strip())
    except ValueError as exc:
        raise ConfigError(f"bad p grid {text!r}") from exc
