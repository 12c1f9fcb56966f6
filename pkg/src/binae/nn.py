"""Fixed-topology feed-forward network with hand-derived backpropagation.

Encoder: one-hot(M) -> Dense(M, M) -> Dense(M, n) -> BatchNorm(n) -> tanh
[-> sign in the binarized phase].  Decoder: Dense(n, M) -> Dense(M, M) ->
softmax.  The dense layers are affine with no activation in between.
"""

import struct
from dataclasses import dataclass

import numpy as np

from .channel import binarize
from .errors import (
    CheckpointVersionError,
    CorruptCheckpointError,
    DimensionError,
    StateError,
)
from .numerics import softmax

CONTINUOUS = "continuous"
BINARIZED = "binarized"
PHASES = (CONTINUOUS, BINARIZED)

LOG_EPS = 1e-12

TRAINABLE = (
    "enc1.weight", "enc1.bias",
    "enc2.weight", "enc2.bias",
    "bn.gamma", "bn.beta",
    "dec1.weight", "dec1.bias",
    "dec2.weight", "dec2.bias",
)
BUFFERS = ("bn.running_mean", "bn.running_var")
ENCODER_PARAMS = TRAINABLE[:6]
DECODER_PARAMS = TRAINABLE[6:]


@dataclass
class DenseLayer:
    weight: np.ndarray  # (out, in)
    bias: np.ndarray  # (out,)

    @property
    def shape(self):
        return self.weight.shape


@dataclass
class BatchNormLayer:
    gamma: np.ndarray
    beta: np.ndarray
    running_mean: np.ndarray
    running_var: np.ndarray
    eps: float = 1e-5
    momentum: float = 0.1


def dense_forward(layer, x):
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != layer.weight.shape[1]:
        raise DimensionError(f"dense layer expects (batch, {layer.weight.shape[1]}), got {x.shape}")
    return x @ layer.weight.T + layer.bias


def _bn_train_stats(layer, x):
    if x.shape[0] < 2:
        raise ValueError("batch norm in train mode needs a batch of at least 2")
    mean = x.mean(axis=0)
    var = ((x - mean) ** 2).mean(axis=0)
    inv_std = 1.0 / np.sqrt(var + layer.eps)
    return mean, var, inv_std


def batchnorm_forward(layer, x, mode="train", update_stats=True):
    """Batch normalization.

    ``train`` standardizes with the biased batch statistics and folds them into
    the running averages (unless ``update_stats`` is False); ``eval`` uses the
    running averages and is a fixed per-sample affine map.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != layer.gamma.shape[0]:
        raise DimensionError(f"batch norm expects (batch, {layer.gamma.shape[0]}), got {x.shape}")
    if mode == "train":
        mean, var, inv_std = _bn_train_stats(layer, x)
        if update_stats:
            m = layer.momentum
            layer.running_mean[:] = (1 - m) * layer.running_mean + m * mean
            layer.running_var[:] = (1 - m) * layer.running_var + m * var
    elif mode == "eval":
        mean = layer.running_mean
        inv_std = 1.0 / np.sqrt(layer.running_var + layer.eps)
    else:
        raise ValueError(f"unknown batch norm mode {mode!r}")
    return layer.gamma * ((x - mean) * inv_std) + layer.beta


@dataclass
class NetParams:
    k: int
    n: int
    enc1: DenseLayer
    enc2: DenseLayer
    bn: BatchNormLayer
    dec1: DenseLayer
    dec2: DenseLayer

    @property
    def M(self):
        return 2 ** self.k

    def arrays(self):
        """Every stored array in checkpoint order (trainable, then buffers)."""
        return {
            "enc1.weight": self.enc1.weight, "enc1.bias": self.enc1.bias,
            "enc2.weight": self.enc2.weight, "enc2.bias": self.enc2.bias,
            "bn.gamma": self.bn.gamma, "bn.beta": self.bn.beta,
            "dec1.weight": self.dec1.weight, "dec1.bias": self.dec1.bias,
            "dec2.weight": self.dec2.weight, "dec2.bias": self.dec2.bias,
            "bn.running_mean": self.bn.running_mean, "bn.running_var": self.bn.running_var,
        }

    def trainable(self):
        a = self.arrays()
        return {name: a[name] for name in TRAINABLE}

    def copy(self):
        return NetParams.from_arrays(self.k, self.n, {k: v.copy() for k, v in self.arrays().items()},
                                     eps=self.bn.eps, momentum=self.bn.momentum)

    @classmethod
    def from_arrays(cls, k, n, a, eps=1e-5, momentum=0.1):
        return cls(
            k=k, n=n,
            enc1=DenseLayer(a["enc1.weight"], a["enc1.bias"]),
            enc2=DenseLayer(a["enc2.weight"], a["enc2.bias"]),
            bn=BatchNormLayer(a["bn.gamma"], a["bn.beta"], a["bn.running_mean"], a["bn.running_var"],
                              eps=eps, momentum=momentum),
            dec1=DenseLayer(a["dec1.weight"], a["dec1.bias"]),
            dec2=DenseLayer(a["dec2.weight"], a["dec2.bias"]),
        )

    def shapes(self):
        return param_shapes(self.k, self.n)

    def equals(self, other):
        """Bitwise equality of every array."""
        if (self.k, self.n) != (other.k, other.n):
            return False
        a, b = self.arrays(), other.arrays()
        return all(np.array_equal(a[name].view(np.uint64), b[name].view(np.uint64)) for name in a)


def param_shapes(k, n):
    M = 2 ** k
    return {
        "enc1.weight": (M, M), "enc1.bias": (M,),
        "enc2.weight": (n, M), "enc2.bias": (n,),
        "bn.gamma": (n,), "bn.beta": (n,),
        "dec1.weight": (M, n), "dec1.bias": (M,),
        "dec2.weight": (M, M), "dec2.bias": (M,),
        "bn.running_mean": (n,), "bn.running_var": (n,),
    }


def init_params(cfg, rng):
    """Glorot-uniform weights, zero biases, identity batch norm.

    Only ``cfg.k`` and ``cfg.n`` are read.
    """
    k, n = int(cfg.k), int(cfg.n)
    if k < 1 or n < 1:
        raise ValueError("k and n must be positive")
    M = 2 ** k

    def glorot(out_dim, in_dim):
        limit = np.sqrt(6.0 / (in_dim + out_dim))
        return rng.uniform(-limit, limit, size=(out_dim, in_dim))

    return NetParams(
        k=k, n=n,
        enc1=DenseLayer(glorot(M, M), np.zeros(M)),
        enc2=DenseLayer(glorot(n, M), np.zeros(n)),
        bn=BatchNormLayer(np.ones(n), np.zeros(n), np.zeros(n), np.ones(n)),
        dec1=DenseLayer(glorot(M, n), np.zeros(M)),
        dec2=DenseLayer(glorot(M, M), np.zeros(M)),
    )


def one_hot(messages, M):
    messages = np.asarray(messages)
    if messages.ndim != 1:
        raise DimensionError("messages must be a 1-D array of ids")
    if messages.size and (messages.min() < 0 or messages.max() >= M):
        raise ValueError(f"message id out of range [0, {M})")
    u = np.zeros((messages.size, M))
    u[np.arange(messages.size), messages] = 1.0
    return u


def cross_entropy(b, u):
    """Mean over the batch of ``-sum_i u_i log(b_i + 1e-12)``."""
    b = np.asarray(b, dtype=np.float64)
    u = np.asarray(u, dtype=np.float64)
    if b.shape != u.shape:
        raise DimensionError(f"probabilities {b.shape} and targets {u.shape} differ in shape")
    return float(-np.sum(u * np.log(b + LOG_EPS)) / b.shape[0])


@dataclass
class ForwardCache:
    phase: str
    u: np.ndarray
    h1: np.ndarray
    h2: np.ndarray
    xhat: np.ndarray
    inv_std: np.ndarray
    xt: np.ndarray
    mask: np.ndarray
    y: np.ndarray
    d1: np.ndarray
    probs: np.ndarray


def forward(params, u, mask, phase=CONTINUOUS, update_stats=True):
    """Full autoencoder pass for a training batch.

    ``u`` is one-hot ``(batch, M)``, ``mask`` is the ``(batch, n)`` channel mask
    multiplied into the encoder output.  In the continuous phase batch norm runs
    on batch statistics; in the binarized phase it uses the frozen running
    statistics and the encoder output goes through ``sign``.
    Returns ``(probs, cache)``.
    """
    if phase not in PHASES:
        raise ValueError(f"unknown phase {phase!r}")
    h1 = dense_forward(params.enc1, u)
    h2 = dense_forward(params.enc2, h1)
    bn = params.bn
    if phase == CONTINUOUS:
        mean, var, inv_std = _bn_train_stats(bn, h2)
        if update_stats:
            m = bn.momentum
            bn.running_mean[:] = (1 - m) * bn.running_mean + m * mean
            bn.running_var[:] = (1 - m) * bn.running_var + m * var
    else:
        mean = bn.running_mean
        inv_std = 1.0 / np.sqrt(bn.running_var + bn.eps)
    xhat = (h2 - mean) * inv_std
    xt = np.tanh(bn.gamma * xhat + bn.beta)
    x = xt if phase == CONTINUOUS else binarize(xt)
    y = x * mask
    d1 = dense_forward(params.dec1, y)
    probs = softmax(dense_forward(params.dec2, d1))
    cache = ForwardCache(phase, u, h1, h2, xhat, inv_std, xt, mask, y, d1, probs)
    return probs, cache


def backward(params, cache, target):
    """Gradients of the mean cross-entropy w.r.t. every trainable array.

    Through ``sign`` the derivative is taken as exactly zero, so in the
    binarized phase all encoder gradients vanish.
    """
    if cache is None:
        raise StateError("backward called without a cached forward pass")
    target = np.asarray(target, dtype=np.float64)
    if target.shape != cache.probs.shape:
        raise DimensionError("target shape does not match the forward batch")
    B = target.shape[0]
    g = {}

    dlogits = (cache.probs - target) / B
    g["dec2.weight"] = dlogits.T @ cache.d1
    g["dec2.bias"] = dlogits.sum(axis=0)
    dd1 = dlogits @ params.dec2.weight
    g["dec1.weight"] = dd1.T @ cache.y
    g["dec1.bias"] = dd1.sum(axis=0)

    if cache.phase == BINARIZED:
        for name in ENCODER_PARAMS:
            g[name] = np.zeros_like(getattr_path(params, name))
        return {name: g[name] for name in TRAINABLE}

    dx = (dd1 @ params.dec1.weight) * cache.mask
    ds = dx * (1.0 - cache.xt ** 2)
    g["bn.gamma"] = (ds * cache.xhat).sum(axis=0)
    g["bn.beta"] = ds.sum(axis=0)
    dxhat = ds * params.bn.gamma
    dh2 = (cache.inv_std / B) * (
        B * dxhat - dxhat.sum(axis=0) - cache.xhat * (dxhat * cache.xhat).sum(axis=0)
    )
    g["enc2.weight"] = dh2.T @ cache.h1
    g["enc2.bias"] = dh2.sum(axis=0)
    dh1 = dh2 @ params.enc2.weight
    g["enc1.weight"] = dh1.T @ cache.u
    g["enc1.bias"] = dh1.sum(axis=0)
    return {name: g[name] for name in TRAINABLE}


def getattr_path(params, name):
    return params.arrays()[name]


@dataclass
class AdamState:
    m: dict
    v: dict
    t: int = 0
    lr: float = 9e-4
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8


def adam_init(params, lr=9e-4, beta1=0.9, beta2=0.999, eps=1e-8):
    tr = params.trainable()
    return AdamState(
        m={k: np.zeros_like(v) for k, v in tr.items()},
        v={k: np.zeros_like(v) for k, v in tr.items()},
        lr=lr, beta1=beta1, beta2=beta2, eps=eps,
    )


def adam_step(state, params, grads, names=None):
    """One bias-corrected Adam update, in place on ``params`` and ``state``.

    ``names`` restricts the update to a subset of parameters; the others keep
    both their values and their moment buffers.
    """
    state.t += 1
    b1, b2 = state.beta1, state.beta2
    c1 = 1.0 - b1 ** state.t
    c2 = 1.0 - b2 ** state.t
    tr = params.trainable()
    for name in (TRAINABLE if names is None else names):
        grad = grads[name]
        m = state.m[name]
        v = state.v[name]
        m[...] = b1 * m + (1.0 - b1) * grad
        v[...] = b2 * v + (1.0 - b2) * grad * grad
        tr[name][...] -= state.lr * (m / c1) / (np.sqrt(v / c2) + state.eps)
    return params, state


# --- checkpoints -----------------------------------------------------------

MAGIC = b"BINAE1"
_HEADER = struct.Struct("<6sIIBQ")
_PHASE_CODE = {CONTINUOUS: 0, BINARIZED: 1}


def param_count(k, n):
    return sum(int(np.prod(s)) for s in param_shapes(k, n).values())


def checkpoint_bytes(params, phase=BINARIZED):
    if phase not in _PHASE_CODE:
        raise ValueError(f"unknown phase {phase!r}")
    count = param_count(params.k, params.n)
    body = np.concatenate([a.ravel() for a in params.arrays().values()]).astype("<f8")
    assert body.size == count
    return _HEADER.pack(MAGIC, params.k, params.n, _PHASE_CODE[phase], count) + body.tobytes()


def save_checkpoint(params, path, phase=BINARIZED):
    """Write ``params`` as little-endian binary.

    Layout: header ``(magic "BINAE1", k: u32, n: u32, phase: u8, count: u64)``
    then ``count`` float64 values in this order: enc1.weight, enc1.bias,
    enc2.weight, enc2.bias, bn.gamma, bn.beta, dec1.weight, dec1.bias,
    dec2.weight, dec2.bias, bn.running_mean, bn.running_var (matrices
    row-major, shaped (out, in)).
    """
    with open(path, "wb") as fh:
        fh.write(checkpoint_bytes(params, phase))


def load_checkpoint(path, k=None, n=None):
    """Read a checkpoint; returns ``(params, phase)``.

    Passing ``k``/``n`` checks the stored dimensions against the caller's config.
    """
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < _HEADER.size:
        raise CorruptCheckpointError(f"{path}: truncated header")
    magic, fk, fn, phase_code, count = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        if magic[:5] == MAGIC[:5]:
            raise CheckpointVersionError(f"{path}: unsupported format version {magic[5:]!r}")
        raise CorruptCheckpointError(f"{path}: bad magic {magic!r}")
    if phase_code not in (0, 1):
        raise CorruptCheckpointError(f"{path}: bad phase tag {phase_code}")
    if fk < 1 or fn < 1 or fk > 20 or count != param_count(fk, fn):
        raise CorruptCheckpointError(f"{path}: inconsistent header (k={fk}, n={fn}, count={count})")
    if len(raw) != _HEADER.size + 8 * count:
        raise CorruptCheckpointError(f"{path}: expected {count} values, file size {len(raw)}")
    if (k is not None and k != fk) or (n is not None and n != fn):
        raise DimensionError(f"{path}: checkpoint is (k={fk}, n={fn}), requested (k={k}, n={n})")
    flat = np.frombuffer(raw, dtype="<f8", offset=_HEADER.size).astype(np.float64)
    arrays, off = {}, 0
    for name, shape in param_shapes(fk, fn).items():
        size = int(np.prod(shape))
        arrays[name] = flat[off:off + size].reshape(shape).copy()
        off += size
    if not all(np.isfinite(a).all() for a in arrays.values()):
        raise CorruptCheckpointError(f"{path}: non-finite values")
    phase = CONTINUOUS if phase_code == 0 else BINARIZED
    return NetParams.from_arrays(fk, fn, arrays), phase
