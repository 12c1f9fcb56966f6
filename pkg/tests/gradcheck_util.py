"""Central-difference oracle for the network loss, independent of ``nn.backward``."""

import numpy as np

from binae import nn


def loss_at(params, u, mask, phase):
    probs, _ = nn.forward(params, u, mask, phase, update_stats=False)
    return nn.cross_entropy(probs, u)


def directional_fd(params, u, mask, direction, h=1e-5, phase=nn.CONTINUOUS):
    def shifted(step):
        q = params.copy()
        for name, arr in q.trainable().items():
            arr += step * direction[name]
        return loss_at(q, u, mask, phase)

    return (shifted(h) - shifted(-h)) / (2 * h)


def random_problem(k, n, batch, seed, flip=0.2):
    rng = np.random.default_rng(seed)

    class Cfg:
        pass

    cfg = Cfg()
    cfg.k, cfg.n = k, n
    params = nn.init_params(cfg, rng)
    # move away from the symmetric init so every parameter matters
    for name, arr in params.trainable().items():
        arr += 0.3 * rng.standard_normal(arr.shape)
    msgs = rng.integers(0, 2 ** k, size=batch)
    u = nn.one_hot(msgs, 2 ** k)
    mask = np.where(rng.random((batch, n)) < flip, -1.0, 1.0)
    return params, u, mask, rng


def max_directional_error(k=2, n=3, batch=8, seed=0, directions=100, h=1e-5):
    params, u, mask, rng = random_problem(k, n, batch, seed)
    _, cache = nn.forward(params, u, mask, nn.CONTINUOUS, update_stats=False)
    grads = nn.backward(params, cache, u)
    worst = 0.0
    for _ in range(directions):
        d = {name: rng.standard_normal(arr.shape) for name, arr in params.trainable().items()}
        analytic = sum(float(np.sum(grads[name] * d[name])) for name in d)
        numeric = directional_fd(params, u, mask, d, h)
        worst = max(worst, abs(analytic - numeric) / max(abs(analytic), 1e-8))
    return worst
