"""Brute-force references for tests.

Nothing here imports from the scoring, evaluation or training code: the
sign and tail-segment rules are re-derived inline and every sum is a plain
Python loop.  Slow by design; use on small inputs only.
"""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class OracleTolerance:
    abs_tol: float = 1e-12
    grad_rel_tol: float = 1e-4
    fd_step: float = 1e-5

    def __post_init__(self):
        if not (self.abs_tol > 0 and self.grad_rel_tol > 0 and self.fd_step > 0):
            raise ValueError("tolerances must be positive")


def _floats(v):
    return [float(x) for x in v]


def _seg(v, k, x):
    m = len(v) // k
    return v[x * m : (x + 1) * m]


def _dot3(a, b, c):
    total = 0.0
    for x, y, z in zip(a, b, c):
        total += x * y * z
    return total


def _sign(x, y, k):
    if x % 2 == 1 and x + y >= k:
        return -1.0
    return 1.0


def _check(h, r, t, k):
    if not (len(h) == len(r) == len(t)):
        raise ValueError("dimension mismatch")
    if k < 1 or len(h) % k:
        raise ValueError(f"k={k} does not divide d={len(h)}")


def naive_f1(h, r, t):
    h, r, t = _floats(h), _floats(r), _floats(t)
    _check(h, r, t, 1)
    return _dot3(r, h, t)


def naive_f2(h, r, t, k):
    h, r, t = _floats(h), _floats(r), _floats(t)
    _check(h, r, t, k)
    total = 0.0
    for x in range(k):
        for y in range(k):
            for w in range(k):
                total += _dot3(_seg(r, k, x), _seg(h, k, y), _seg(t, k, w))
    return total


def naive_f3(h, r, t, k):
    h, r, t = _floats(h), _floats(r), _floats(t)
    _check(h, r, t, k)
    total = 0.0
    for x in range(k):
        for y in range(k):
            for w in range(k):
                total += _sign(x, y, k) * _dot3(_seg(r, k, x), _seg(h, k, y), _seg(t, k, w))
    return total


def naive_f4(h, r, t, k):
    h, r, t = _floats(h), _floats(r), _floats(t)
    _check(h, r, t, k)
    total = 0.0
    for x in range(k):
        for y in range(k):
            w = y if x % 2 == 0 else (x + y) % k
            total += _sign(x, y, k) * _dot3(_seg(r, k, x), _seg(h, k, y), _seg(t, k, w))
    return total


def naive_score(fn, h, r, t, k):
    if fn == "f1":
        return naive_f1(h, r, t)
    return {"f2": naive_f2, "f3": naive_f3, "f4": naive_f4}[fn](h, r, t, k)


def complex_reference(h, r, t):
    """Re(sum h * r * conj(t)) with the first half of each vector as real parts."""
    h, r, t = _floats(h), _floats(r), _floats(t)
    if len(h) % 2 or not (len(h) == len(r) == len(t)):
        raise ValueError("complex reference needs equal, even dimensions")
    n = len(h) // 2
    total = 0.0
    for i in range(n):
        hc = complex(h[i], h[n + i])
        rc = complex(r[i], r[n + i])
        tc = complex(t[i], t[n + i])
        total += (hc * rc * tc.conjugate()).real
    return total


def numeric_gradient(score_fn, h, r, t, fd_step=1e-5):
    """Central differences of ``score_fn(h, r, t)`` in every coordinate.

    Returns ``(d_h, d_r, d_t)`` as lists.
    """
    args = [_floats(h), _floats(r), _floats(t)]
    grads = []
    for which in range(3):
        g = []
        for i in range(len(args[which])):
            plus = [list(a) for a in args]
            minus = [list(a) for a in args]
            plus[which][i] += fd_step
            minus[which][i] -= fd_step
            g.append((score_fn(*plus) - score_fn(*minus)) / (2.0 * fd_step))
        grads.append(g)
    return tuple(grads)


def exhaustive_rank(test, side, entities, relations, k, known=None, fn="f4"):
    """Filtered rank of ``test`` by scoring every candidate one at a time.

    ``entities``/``relations`` are row sequences; ``known`` is any container
    of ``(h, r, t)`` tuples (``None`` for the raw setting).
    """
    h, r, t = (int(v) for v in test)
    rel = relations[r]
    true_score = naive_score(fn, entities[h], rel, entities[t], k)
    rank = 1
    for e in range(len(entities)):
        cand = (e, r, t) if side == "head" else (h, r, e)
        if cand == (h, r, t):
            continue
        if known is not None and cand in known:
            continue
        s = naive_score(fn, entities[cand[0]], rel, entities[cand[2]], k)
        if s > true_score:
            rank += 1
    return rank
