"""End-to-end autoencoder and its two-phase training.

Phase 1 trains encoder and decoder on the continuous ``tanh`` outputs.  At the
switch the batch-norm statistics are frozen, the encoder output is passed
through ``sign`` and the resulting codebook is fixed; phase 2 fine-tunes the
decoder on those binary words.  Because ``sign`` has zero derivative, the
encoder receives no gradient after the switch.
"""

import csv
import io
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace

import numpy as np

from . import _kernels
from .analysis import min_distance
from .channel import binarize, sample_epoch_masks
from .classic import Codebook
from .errors import ConfigError, DimensionError, TrainingDiverged
from .nn import (
    BINARIZED,
    CONTINUOUS,
    PHASES,
    batchnorm_forward,
    cross_entropy,
    dense_forward,
    forward,
    init_params,
    one_hot,
)
from .numerics import make_rng, softmax

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class TrainConfig:
    k: int = 4
    n: int = 7
    epochs_total: int = 150
    epochs_continuous: int = 95
    batch_size: int = 10
    lr: float = 9e-4
    mask_p_lo: float = 0.06
    mask_p_hi: float = 0.1
    train_samples: int = 100_000
    test_samples: int = 1_000_000
    restarts: int = 8
    seed: int = 0
    # batch norm as a pure power normalizer: gamma/beta stay at (1, 0)
    bn_affine: bool = False
    bn_eps: float = 1e-5
    bn_momentum: float = 0.1
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    val_p: float = 0.08
    val_trials: int = 10_000
    select_trials: int = 100_000

    def validate(self):
        if self.k < 1 or self.n < 1:
            raise ConfigError("k and n must be positive")
        if not 0 <= self.epochs_continuous < self.epochs_total:
            raise ConfigError(
                f"epochs_continuous ({self.epochs_continuous}) must be below epochs_total ({self.epochs_total})"
            )
        if not 0.0 <= self.mask_p_lo <= self.mask_p_hi <= 1.0:
            raise ConfigError(f"mask probability range [{self.mask_p_lo}, {self.mask_p_hi}] invalid")
        if self.batch_size < 2:
            raise ConfigError("batch_size must be at least 2 (batch norm)")
        if self.train_samples < self.batch_size:
            raise ConfigError("train_samples must cover at least one batch")
        if self.lr <= 0:
            raise ConfigError("lr must be positive")
        if self.restarts < 1:
            raise ConfigError("restarts must be >= 1")
        if not 0.0 <= self.val_p <= 1.0:
            raise ConfigError("val_p must lie in [0, 1]")
        if self.val_trials < 1 or self.select_trials < 1 or self.test_samples < 1:
            raise ConfigError("trial counts must be positive")
        return self

    @classmethod
    def field_types(cls):
        return {f.name: f.type for f in fields(cls)}

    @classmethod
    def from_dict(cls, d):
        known = cls.field_types()
        unknown = set(d) - set(known)
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        return cls(**d)


@dataclass
class HistoryRow:
    epoch: int
    phase: str
    mean_loss: float
    val_bler: float


@dataclass
class TrainedModel:
    params: object
    codebook: Codebook
    config: TrainConfig
    phase: str
    history: list = field(default_factory=list)
    restarts: list = field(default_factory=list)  # RestartResult per seed, filled by train_with_restarts

    def decide(self, y):
        return decode_decisions(self.params, y)

    def history_csv(self):
        return history_to_csv(self.history)


@dataclass
class RestartResult:
    seed: int
    d_min: int
    distinct_words: int
    val_bler: float
    selected: bool = False


# --- forward passes ----------------------------------------------------------

def _encoder_pre_norm(params, messages):
    u = one_hot(messages, params.M)
    return dense_forward(params.enc2, dense_forward(params.enc1, u))


def encode_forward(params, messages, phase=BINARIZED, bn_mode="eval"):
    """Encoder output for a batch of message ids.

    Continuous phase: ``tanh`` outputs in (-1, 1).  Binarized phase: their
    signs.  ``bn_mode="train"`` normalizes with the batch's own statistics
    (without touching the running averages).
    """
    if phase not in PHASES:
        raise ValueError(f"unknown phase {phase!r}")
    h = _encoder_pre_norm(params, np.asarray(messages))
    s = batchnorm_forward(params.bn, h, mode=bn_mode, update_stats=False)
    xt = np.tanh(s)
    return xt if phase == CONTINUOUS else binarize(xt)


def decode_forward(params, y):
    y = np.asarray(y, dtype=np.float64)
    if y.ndim != 2 or y.shape[1] != params.n:
        raise DimensionError(f"decoder expects (batch, {params.n}), got {y.shape}")
    return softmax(dense_forward(params.dec2, dense_forward(params.dec1, y)))


def decode_decisions(params, y):
    """Argmax decisions, ties to the lowest message id."""
    return np.argmax(decode_forward(params, y), axis=1)


def extract_codebook(params):
    """Binarized eval-mode encoder output for every message, in message order."""
    words = encode_forward(params, np.arange(params.M), phase=BINARIZED, bn_mode="eval")
    cb = Codebook(params.k, params.n, words)
    dup = cb.duplicates()
    if dup:
        log.debug("extracted codebook has duplicate codewords for messages %s", dup)
    return cb


# --- training ----------------------------------------------------------------

def _validation_set(cfg, trials):
    rng = make_rng(cfg.seed, "validation")
    messages = rng.integers(0, 2 ** cfg.k, size=trials)
    noise = np.where(rng.random((trials, cfg.n)) < cfg.val_p, -1.0, 1.0)
    return messages, noise


def validation_bler(params, codebook, messages, noise):
    y = codebook.words[messages] * noise
    return float(np.mean(decode_decisions(params, y) != messages))


def _initial_loss(params, cfg, messages, noise):
    # untrained network, continuous phase, batch statistics over the whole set
    probs, _ = forward(params, one_hot(messages, params.M), noise, CONTINUOUS, update_stats=False)
    return cross_entropy(probs, one_hot(messages, params.M))


def train(cfg, on_epoch=None):
    """Two-phase training of one network; deterministic for a fixed ``cfg.seed``.

    ``on_epoch(epoch, phase, params)`` is called after every epoch with a live
    view of the parameters.
    """
    cfg.validate()
    M, n = 2 ** cfg.k, cfg.n
    params = init_params(cfg, make_rng(cfg.seed, "init"))
    params.bn.eps = cfg.bn_eps
    params.bn.momentum = cfg.bn_momentum

    data_rng = make_rng(cfg.seed, "data")
    chan_rng = make_rng(cfg.seed, "channel")
    data = data_rng.integers(0, M, size=cfg.train_samples)
    val_msgs, val_noise = _validation_set(cfg, cfg.val_trials)

    theta = _kernels.pack(params)
    adam_m = np.zeros_like(theta)
    adam_v = np.zeros_like(theta)
    t = 0

    history = [HistoryRow(0, CONTINUOUS, _initial_loss(params, cfg, val_msgs, val_noise),
                          validation_bler(params, extract_codebook(params), val_msgs, val_noise))]
    phase = CONTINUOUS
    frozen = np.zeros((M, n))
    codebook = None

    for epoch in range(1, cfg.epochs_total + 1):
        if epoch == cfg.epochs_continuous + 1:
            _kernels.unpack_into(params, theta)
            codebook = extract_codebook(params)
            frozen = np.ascontiguousarray(codebook.words)
            phase = BINARIZED
            log.info("seed %d: binarized after epoch %d", cfg.seed, epoch - 1)

        order = data_rng.permutation(cfg.train_samples)
        messages = data[order]
        masks = sample_epoch_masks(cfg.train_samples, cfg.batch_size, n, cfg.mask_p_lo, cfg.mask_p_hi, chan_rng)
        loss_sum, seen, t = _kernels.train_epoch(
            theta, adam_m, adam_v, t, cfg.lr, cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps,
            params.bn.running_mean, params.bn.running_var, cfg.bn_eps, cfg.bn_momentum,
            messages, masks, cfg.batch_size, M, n, phase == BINARIZED, frozen, cfg.bn_affine,
        )
        mean_loss = loss_sum / max(seen, 1)
        if not math.isfinite(mean_loss) or not np.isfinite(theta).all():
            raise TrainingDiverged(epoch, mean_loss)
        _kernels.unpack_into(params, theta)
        current = codebook if phase == BINARIZED else extract_codebook(params)
        history.append(HistoryRow(epoch, phase, mean_loss, validation_bler(params, current, val_msgs, val_noise)))
        if on_epoch is not None:
            on_epoch(epoch, phase, params)

    return TrainedModel(params=params, codebook=codebook, config=cfg, phase=phase, history=history)


def train_with_restarts(cfg, workers=1):
    """Train ``cfg.restarts`` networks (seeds ``seed, seed+1, ...``) and keep the best.

    Selection is lexicographic: largest minimum distance first, then lowest
    validation BLER at ``val_p`` over ``select_trials`` shared trials, then the
    lowest seed.
    """
    cfg.validate()
    cfgs = [replace(cfg, seed=cfg.seed + i) for i in range(cfg.restarts)]
    if workers > 1 and len(cfgs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            models = list(pool.map(train, cfgs))
    else:
        models = [train(c) for c in cfgs]

    # same messages and noise for every candidate
    sel_msgs, sel_noise = _validation_set(cfg, cfg.select_trials)
    results = []
    for c, model in zip(cfgs, models):
        cb = model.codebook
        d = min_distance(cb) if cb.M >= 2 else 0
        bler = validation_bler(model.params, cb, sel_msgs, sel_noise)
        results.append(RestartResult(seed=c.seed, d_min=d, distinct_words=cb.num_distinct(), val_bler=bler))
        log.info("restart seed=%d d_min=%d val_bler=%.5f", c.seed, d, bler)

    best = min(range(len(results)), key=lambda i: (-results[i].d_min, results[i].val_bler, results[i].seed))
    results[best].selected = True
    chosen = models[best]
    chosen.restarts = results
    return chosen


# --- text artifacts ----------------------------------------------------------

def history_to_csv(history):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["epoch", "phase", "mean_loss", "val_bler"])
    for row in history:
        w.writerow([row.epoch, row.phase, repr(float(row.mean_loss)), repr(float(row.val_bler))])
    return buf.getvalue()


def history_from_csv(text):
    rows = list(csv.DictReader(io.StringIO(text)))
    return [HistoryRow(int(r["epoch"]), r["phase"], float(r["mean_loss"]), float(r["val_bler"])) for r in rows]


def restarts_to_csv(results):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["seed", "d_min", "distinct_words", "val_bler", "selected"])
    for r in results:
        w.writerow([r.seed, r.d_min, r.distinct_words, repr(float(r.val_bler)), int(r.selected)])
    return buf.getvalue()


def config_to_dict(cfg):
    return asdict(cfg)
