"""Compiled per-triple loops: f4 score/gradient, the AdaGrad step, epoch chunks.

Loops run x-major, then y, then the within-segment index, with no
fastmath, so results are bit-reproducible.  Each term multiplies the head
and tail entries first, which makes head/tail swaps exact.  Entity/relation rows are
updated in place without locks; concurrent callers race on purpose.
"""

import numpy as np
from numba import njit


@njit(cache=True, nogil=True)
def f4_score(h, r, t, k):
    m = h.shape[0] // k
    total = 0.0
    for x in range(k):
        odd = x % 2 == 1
        xo = x * m
        for y in range(k):
            w = (x + y) % k if odd else y
            yo = y * m
            wo = w * m
            acc = 0.0
            for i in range(m):
                acc += r[xo + i] * (h[yo + i] * t[wo + i])
            if odd and x + y >= k:
                total -= acc
            else:
                total += acc
    return total


@njit(cache=True, nogil=True)
def f4_grad(h, r, t, k, gh, gr, gt):
    m = h.shape[0] // k
    gh[:] = 0.0
    gr[:] = 0.0
    gt[:] = 0.0
    for x in range(k):
        odd = x % 2 == 1
        xo = x * m
        for y in range(k):
            w = (x + y) % k if odd else y
            yo = y * m
            wo = w * m
            if odd and x + y >= k:
                for i in range(m):
                    rv = r[xo + i]
                    hv = h[yo + i]
                    tv = t[wo + i]
                    gr[xo + i] -= hv * tv
                    gh[yo + i] -= rv * tv
                    gt[wo + i] -= rv * hv
            else:
                for i in range(m):
                    rv = r[xo + i]
                    hv = h[yo + i]
                    tv = t[wo + i]
                    gr[xo + i] += hv * tv
                    gh[yo + i] += rv * tv
                    gt[wo + i] += rv * hv


@njit(cache=True, nogil=True)
def softplus(z):
    if z > 0.0:
        return z + np.log1p(np.exp(-z))
    return np.log1p(np.exp(z))


@njit(cache=True, nogil=True)
def sigmoid(z):
    if z >= 0.0:
        return 1.0 / (1.0 + np.exp(-z))
    e = np.exp(z)
    return e / (1.0 + e)


@njit(cache=True, nogil=True)
def _adagrad_row(theta, accum, grad, lr, eps):
    for i in range(theta.shape[0]):
        g = grad[i]
        accum[i] += g * g
        theta[i] -= lr * g / np.sqrt(accum[i] + eps)


@njit(cache=True, nogil=True)
def sgd_step(ent, rel, acc_e, acc_r, hi, ri, ti, label, lr, lam, eps, k, gh, gr, gt):
    """One AdaGrad update on rows hi, ri, ti.  Returns the pre-update loss, NaN on failure."""
    d = ent.shape[1]
    h = ent[hi]
    r = rel[ri]
    t = ent[ti]
    score = f4_score(h, r, t, k)
    z = -label * score
    loss = softplus(z)
    dl = -label * sigmoid(z)
    if not (np.isfinite(loss) and np.isfinite(dl)):
        return np.nan
    f4_grad(h, r, t, k, gh, gr, gt)
    coef = lam / d
    for i in range(d):
        gr[i] = dl * gr[i] + coef * r[i]
        if hi == ti:
            gh[i] = dl * (gh[i] + gt[i]) + coef * h[i]
        else:
            gh[i] = dl * gh[i] + coef * h[i]
            gt[i] = dl * gt[i] + coef * t[i]
        if not (np.isfinite(gr[i]) and np.isfinite(gh[i]) and np.isfinite(gt[i])):
            return np.nan
    _adagrad_row(r, acc_r[ri], gr, lr, eps)
    _adagrad_row(h, acc_e[hi], gh, lr, eps)
    if hi != ti:
        _adagrad_row(t, acc_e[ti], gt, lr, eps)
    return loss


@njit(cache=True, nogil=True)
def corrupt(h, t, head_side, draw):
    """Map a draw in [0, E-1) to an entity != the replaced one."""
    if head_side:
        e = draw + 1 if draw >= h else draw
        return e, t
    e = draw + 1 if draw >= t else draw
    return h, e


@njit(cache=True, nogil=True)
def _is_known(keys, key):
    if keys.shape[0] == 0:
        return False
    j = np.searchsorted(keys, key)
    return j < keys.shape[0] and keys[j] == key


@njit(cache=True, nogil=True)
def train_chunk(ent, rel, acc_e, acc_r, pos, head_side, draws, lr, lam, eps, k,
                known_keys, skip_known):
    """Positive step then its negatives, for every row of ``pos`` in order.

    Returns (loss_sum, n_examples, bad_row, bad_neg, bad_h, bad_t); bad_row
    is -1 on success, bad_neg is -1 when the positive itself failed.
    """
    d = ent.shape[1]
    n_ent = ent.shape[0]
    n_rel = rel.shape[0]
    gh = np.empty(d)
    gr = np.empty(d)
    gt = np.empty(d)
    loss_sum = 0.0
    count = 0
    for j in range(pos.shape[0]):
        h = pos[j, 0]
        r = pos[j, 1]
        t = pos[j, 2]
        loss = sgd_step(ent, rel, acc_e, acc_r, h, r, t, 1.0, lr, lam, eps, k, gh, gr, gt)
        if np.isnan(loss):
            return loss_sum, count, j, -1, h, t
        loss_sum += loss
        count += 1
        for q in range(draws.shape[1]):
            nh, nt = corrupt(h, t, head_side[j, q], draws[j, q])
            if skip_known and _is_known(known_keys, (nh * n_rel + r) * n_ent + nt):
                continue
            loss = sgd_step(ent, rel, acc_e, acc_r, nh, r, nt, -1.0, lr, lam, eps, k, gh, gr, gt)
            if np.isnan(loss):
                return loss_sum, count, j, q, nh, nt
            loss_sum += loss
            count += 1
    return loss_sum, count, -1, -1, -1, -1


@njit(cache=True, nogil=True)
def bench_ops(ent, rel, triples, k, repeats):
    """Score and differentiate ``triples`` ``repeats`` times; returns a checksum."""
    d = ent.shape[1]
    gh = np.empty(d)
    gr = np.empty(d)
    gt = np.empty(d)
    check = 0.0
    for _ in range(repeats):
        for j in range(triples.shape[0]):
            h = ent[triples[j, 0]]
            r = rel[triples[j, 1]]
            t = ent[triples[j, 2]]
            check += f4_score(h, r, t, k)
            f4_grad(h, r, t, k, gh, gr, gt)
            check += gh[0] + gr[0] + gt[0]
    return check
