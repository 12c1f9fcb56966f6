"""Compiled training loop.

Mirrors ``nn.forward`` / ``nn.backward`` / ``nn.adam_step`` step for step on a
flat parameter vector laid out in ``nn.TRAINABLE`` order.  The numpy versions
stay the reference; tests pin the two together.
"""

import numpy as np
from numba import njit


def layout(k, n):
    """Offsets of each trainable array inside the flat vector."""
    from .nn import TRAINABLE, param_shapes

    shapes = param_shapes(k, n)
    offsets, off = {}, 0
    for name in TRAINABLE:
        size = int(np.prod(shapes[name]))
        offsets[name] = (off, off + size)
        off += size
    return offsets, off


def pack(params):
    from .nn import TRAINABLE

    tr = params.trainable()
    return np.concatenate([tr[name].ravel() for name in TRAINABLE])


def unpack_into(params, flat):
    offsets, _ = layout(params.k, params.n)
    for name, arr in params.trainable().items():
        lo, hi = offsets[name]
        arr[...] = flat[lo:hi].reshape(arr.shape)


@njit(cache=True)
def train_epoch(theta, adam_m, adam_v, t, lr, beta1, beta2, adam_eps,
                rmean, rvar, bn_eps, momentum,
                messages, masks, batch_size, M, n, binarized, codebook, bn_affine=True):
    """Run one epoch of mini-batch Adam; returns ``(loss_sum, samples, t)``.

    In the binarized phase the encoder is bypassed: ``codebook[m]`` (the frozen
    sign output) is transmitted and only the decoder slice of ``theta`` moves.
    """
    o_w1 = 0
    o_b1 = o_w1 + M * M
    o_w2 = o_b1 + M
    o_b2 = o_w2 + n * M
    o_g = o_b2 + n
    o_be = o_g + n
    o_wd1 = o_be + n
    o_bd1 = o_wd1 + M * n
    o_wd2 = o_bd1 + M
    o_bd2 = o_wd2 + M * M
    P = o_bd2 + M
    dec_start = o_wd1

    N = messages.shape[0]
    grad = np.zeros(P)
    B_max = batch_size
    h1 = np.zeros((B_max, M))
    h2 = np.zeros((B_max, n))
    xhat = np.zeros((B_max, n))
    xt = np.zeros((B_max, n))
    y = np.zeros((B_max, n))
    d1 = np.zeros((B_max, M))
    prob = np.zeros((B_max, M))
    dlog = np.zeros((B_max, M))
    dd1 = np.zeros((B_max, M))
    ds = np.zeros((B_max, n))
    dh2 = np.zeros((B_max, n))
    mean = np.zeros(n)
    var = np.zeros(n)
    inv_std = np.zeros(n)
    loss_sum = 0.0
    seen = 0

    start = 0
    while start < N:
        B = min(batch_size, N - start)
        if B < 2:
            break
        for i in range(P):
            grad[i] = 0.0

        # ---- encoder ----
        if binarized:
            for b in range(B):
                msg = messages[start + b]
                for j in range(n):
                    y[b, j] = codebook[msg, j] * masks[start + b, j]
        else:
            for b in range(B):
                msg = messages[start + b]
                for r in range(M):
                    h1[b, r] = theta[o_w1 + r * M + msg] + theta[o_b1 + r]
                for j in range(n):
                    acc = 0.0
                    for r in range(M):
                        acc += h1[b, r] * theta[o_w2 + j * M + r]
                    h2[b, j] = acc + theta[o_b2 + j]
            for j in range(n):
                mu = 0.0
                for b in range(B):
                    mu += h2[b, j]
                mu /= B
                vv = 0.0
                for b in range(B):
                    dv = h2[b, j] - mu
                    vv += dv * dv
                vv /= B
                mean[j] = mu
                var[j] = vv
                inv_std[j] = 1.0 / np.sqrt(vv + bn_eps)
                rmean[j] = (1.0 - momentum) * rmean[j] + momentum * mu
                rvar[j] = (1.0 - momentum) * rvar[j] + momentum * vv
            for b in range(B):
                for j in range(n):
                    xh = (h2[b, j] - mean[j]) * inv_std[j]
                    xhat[b, j] = xh
                    v = np.tanh(theta[o_g + j] * xh + theta[o_be + j])
                    xt[b, j] = v
                    y[b, j] = v * masks[start + b, j]

        # ---- decoder ----
        for b in range(B):
            for r in range(M):
                acc = 0.0
                for j in range(n):
                    acc += y[b, j] * theta[o_wd1 + r * n + j]
                d1[b, r] = acc + theta[o_bd1 + r]
            mx = -np.inf
            for r in range(M):
                acc = 0.0
                for c in range(M):
                    acc += d1[b, c] * theta[o_wd2 + r * M + c]
                acc += theta[o_bd2 + r]
                prob[b, r] = acc
                if acc > mx:
                    mx = acc
            tot = 0.0
            for r in range(M):
                e = np.exp(prob[b, r] - mx)
                prob[b, r] = e
                tot += e
            for r in range(M):
                prob[b, r] /= tot
            msg = messages[start + b]
            loss_sum += -np.log(prob[b, msg] + 1e-12)
            for r in range(M):
                dlog[b, r] = prob[b, r] / B
            dlog[b, msg] -= 1.0 / B
        seen += B

        # ---- backward: decoder ----
        for r in range(M):
            gb = 0.0
            for b in range(B):
                gb += dlog[b, r]
            grad[o_bd2 + r] = gb
            for c in range(M):
                acc = 0.0
                for b in range(B):
                    acc += dlog[b, r] * d1[b, c]
                grad[o_wd2 + r * M + c] = acc
        for b in range(B):
            for c in range(M):
                acc = 0.0
                for r in range(M):
                    acc += dlog[b, r] * theta[o_wd2 + r * M + c]
                dd1[b, c] = acc
        for r in range(M):
            gb = 0.0
            for b in range(B):
                gb += dd1[b, r]
            grad[o_bd1 + r] = gb
            for j in range(n):
                acc = 0.0
                for b in range(B):
                    acc += dd1[b, r] * y[b, j]
                grad[o_wd1 + r * n + j] = acc

        # ---- backward: encoder ----
        if not binarized:
            for b in range(B):
                for j in range(n):
                    acc = 0.0
                    for r in range(M):
                        acc += dd1[b, r] * theta[o_wd1 + r * n + j]
                    v = xt[b, j]
                    ds[b, j] = acc * masks[start + b, j] * (1.0 - v * v)
            for j in range(n):
                sg = 0.0
                sb = 0.0
                for b in range(B):
                    sg += ds[b, j] * xhat[b, j]
                    sb += ds[b, j]
                if bn_affine:
                    grad[o_g + j] = sg
                    grad[o_be + j] = sb
                gam = theta[o_g + j]
                # dxhat = ds * gamma
                s1 = sb * gam
                s2 = sg * gam
                for b in range(B):
                    dh2[b, j] = (inv_std[j] / B) * (B * ds[b, j] * gam - s1 - xhat[b, j] * s2)
            for j in range(n):
                gb = 0.0
                for b in range(B):
                    gb += dh2[b, j]
                grad[o_b2 + j] = gb
                for r in range(M):
                    acc = 0.0
                    for b in range(B):
                        acc += dh2[b, j] * h1[b, r]
                    grad[o_w2 + j * M + r] = acc
            for b in range(B):
                msg = messages[start + b]
                for r in range(M):
                    acc = 0.0
                    for j in range(n):
                        acc += dh2[b, j] * theta[o_w2 + j * M + r]
                    grad[o_b1 + r] += acc
                    grad[o_w1 + r * M + msg] += acc

        # ---- adam ----
        t += 1
        c1 = 1.0 - beta1 ** t
        c2 = 1.0 - beta2 ** t
        first = dec_start if binarized else 0
        for i in range(first, P):
            g = grad[i]
            mi = beta1 * adam_m[i] + (1.0 - beta1) * g
            vi = beta2 * adam_v[i] + (1.0 - beta2) * g * g
            adam_m[i] = mi
            adam_v[i] = vi
            theta[i] -= lr * (mi / c1) / (np.sqrt(vi / c2) + adam_eps)

        start += B
    return loss_sum, seen, t
