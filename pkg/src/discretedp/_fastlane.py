"""Compiled batch kernels, byte-identical to the pure sampling path.

The kernels replay the exact control flow of samplers.py over a shared
byte buffer. They return early in two situations, always at a sample
boundary so no partial consumption leaks:

  NEED  the buffer ran out mid-sample; the driver refills and retries the
        sample from its recorded start position, re-reading the same bytes;
  BIG   an intermediate product would overflow int64; the driver draws that
        one sample through the pure bignum path, which continues from the
        same cursor and therefore stays byte-identical.

Every value that can grow mid-loop (rejection windows den*k, the
decomposition offset u + num*v, the squared gap) is guarded before use.
"""

from __future__ import annotations

import numpy as np
from numba import njit

from .errors import InvalidParam

OK = 0
NEED = 1
BIG = 2

_LIMIT = 1 << 55
_MAX_REQUEST = 1 << 25


@njit(cache=True)
def _d_uniform(buf, pos, n):
    if n <= 1:
        return 0, pos, OK
    bits = 0
    m = n - 1
    while m > 0:
        bits += 1
        m >>= 1
    nbytes = (bits + 7) // 8
    mask = (1 << bits) - 1
    size = len(buf)
    while True:
        if pos + nbytes > size:
            return 0, pos, NEED
        v = 0
        for j in range(nbytes):
            v = (v << 8) | buf[pos + j]
        pos += nbytes
        v &= mask
        if v < n:
            return v, pos, OK


@njit(cache=True)
def _d_exp_unit(buf, pos, num, den):
    # Bernoulli(e^-(num/den)) for num/den <= 1: first k with a failed
    # Bernoulli(num/(den k)) draw; accept iff k is odd.
    k = 1
    while True:
        window = den * k
        if window > _LIMIT:
            return 0, pos, BIG
        v, pos, st = _d_uniform(buf, pos, window)
        if st != OK:
            return 0, pos, st
        if v >= num:
            break
        k += 1
    return 1 if (k & 1) == 1 else 0, pos, OK


@njit(cache=True)
def _d_exp_full(buf, pos, num, den):
    if num <= den:
        return _d_exp_unit(buf, pos, num, den)
    whole = num // den
    for _ in range(whole):
        b, pos, st = _d_exp_unit(buf, pos, 1, 1)
        if st != OK:
            return 0, pos, st
        if b == 0:
            return 0, pos, OK
    return _d_exp_unit(buf, pos, num - whole * den, den)


@njit(cache=True)
def _d_geo_exp(buf, pos, num, den):
    # Trials of Bernoulli(e^-(num/den)) up to and including the first failure.
    count = 0
    while True:
        count += 1
        b, pos, st = _d_exp_full(buf, pos, num, den)
        if st != OK:
            return 0, pos, st
        if b == 0:
            return count, pos, OK


@njit(cache=True)
def _d_bernoulli(buf, pos, num, den):
    v, pos, st = _d_uniform(buf, pos, den)
    if st != OK:
        return 0, pos, st
    return 1 if v < num else 0, pos, OK


@njit(cache=True)
def _d_geo_bernoulli(buf, pos, num, den):
    count = 0
    while True:
        count += 1
        b, pos, st = _d_bernoulli(buf, pos, num, den)
        if st != OK:
            return 0, pos, st
        if b == 0:
            return count, pos, OK


@njit(cache=True)
def _d_laplace(buf, pos, num, den, use_algo2):
    while True:
        if use_algo2 == 0:
            v, pos, st = _d_geo_exp(buf, pos, den, num)
            if st != OK:
                return 0, pos, st
            mag = v - 1
        else:
            u = 0
            while True:
                u, pos, st = _d_uniform(buf, pos, num)
                if st != OK:
                    return 0, pos, st
                b, pos, st = _d_exp_full(buf, pos, u, num)
                if st != OK:
                    return 0, pos, st
                if b == 1:
                    break
            v, pos, st = _d_geo_exp(buf, pos, 1, 1)
            if st != OK:
                return 0, pos, st
            blocks = v - 1
            if blocks > (_LIMIT - u) // num:
                return 0, pos, BIG
            mag = (u + num * blocks) // den
        s, pos, st = _d_uniform(buf, pos, 2)
        if st != OK:
            return 0, pos, st
        negative = s < 1
        if negative and mag == 0:
            continue
        if negative:
            return -mag, pos, OK
        return mag, pos, OK


@njit(cache=True)
def _d_gaussian(buf, pos, num2, den2, t, accept_den, ybound, inner2, mu):
    while True:
        y, pos, st = _d_laplace(buf, pos, t, 1, inner2)
        if st != OK:
            return 0, pos, st
        ay = y if y >= 0 else -y
        if ay > ybound:
            return 0, pos, BIG
        gap = ay * t * den2 - num2
        b, pos, st = _d_exp_full(buf, pos, gap * gap, accept_den)
        if st != OK:
            return 0, pos, st
        if b == 1:
            return y + mu, pos, OK


@njit(cache=True)
def _uniform_batch(buf, pos, out, start, count, n):
    i = start
    while i < count:
        anchor = pos
        v, pos, st = _d_uniform(buf, pos, n)
        if st != OK:
            return i, anchor, st
        out[i] = v
        i += 1
    return i, pos, OK


@njit(cache=True)
def _bernoulli_batch(buf, pos, out, start, count, num, den):
    i = start
    while i < count:
        anchor = pos
        v, pos, st = _d_bernoulli(buf, pos, num, den)
        if st != OK:
            return i, anchor, st
        out[i] = v
        i += 1
    return i, pos, OK


@njit(cache=True)
def _exp_neg_batch(buf, pos, out, start, count, num, den):
    i = start
    while i < count:
        anchor = pos
        v, pos, st = _d_exp_full(buf, pos, num, den)
        if st != OK:
            return i, anchor, st
        out[i] = v
        i += 1
    return i, pos, OK


@njit(cache=True)
def _geometric_batch(buf, pos, out, start, count, num, den):
    i = start
    while i < count:
        anchor = pos
        v, pos, st = _d_geo_bernoulli(buf, pos, num, den)
        if st != OK:
            return i, anchor, st
        out[i] = v
        i += 1
    return i, pos, OK


@njit(cache=True)
def _laplace_batch(buf, pos, out, start, count, num, den, use_algo2):
    i = start
    while i < count:
        anchor = pos
        v, pos, st = _d_laplace(buf, pos, num, den, use_algo2)
        if st != OK:
            return i, anchor, st
        out[i] = v
        i += 1
    return i, pos, OK


@njit(cache=True)
def _gaussian_batch(buf, pos, out, start, count, num2, den2, t, accept_den, ybound, inner2, mu):
    i = start
    while i < count:
        anchor = pos
        v, pos, st = _d_gaussian(buf, pos, num2, den2, t, accept_den, ybound, inner2, mu)
        if st != OK:
            return i, anchor, st
        out[i] = v
        i += 1
    return i, pos, OK


_BATCHES = {
    "uniform": _uniform_batch,
    "bernoulli": _bernoulli_batch,
    "exp_neg": _exp_neg_batch,
    "geometric": _geometric_batch,
    "laplace": _laplace_batch,
    "gaussian": _gaussian_batch,
}


def run_batch(src, kernel_name, args, count, hint, fallback_one):
    """Fill an int64 array with `count` samples from the named kernel.

    `fallback_one` draws a single sample through the pure path, used both
    for overflow aborts and for sources that cannot refill (replay), so
    error behavior matches the pure path exactly.
    """
    kernel = _BATCHES.get(kernel_name)
    if kernel is None:
        raise InvalidParam(f"unknown batch kernel {kernel_name!r}")
    out = np.empty(count, dtype=np.int64)
    i = 0
    while i < count:
        want = min(_MAX_REQUEST, 4096 + 2 * hint * (count - i))
        available = src._ensure(want)
        view = np.frombuffer(src._buf, dtype=np.uint8)
        i, pos, status = kernel(view, src._pos, out, i, count, *args)
        # Release the buffer export before any refill: _ensure may compact
        # the bytearray, which fails while a view is alive.
        del view
        i = int(i)
        src._pos = int(pos)
        if status == OK:
            break
        if status == NEED:
            if src._ensure(available + 65536) <= available:
                # Source cannot grow; the pure path raises EntropyExhausted
                # at the same byte the kernel stopped on.
                out[i] = fallback_one(src)
                i += 1
        else:
            out[i] = fallback_one(src)
            i += 1
    return out


def warmup() -> None:
    """Force compilation of all kernels (first call per process is slow)."""
    buf = bytearray(range(256)) * 64
    from .entropy import ReplaySource

    for name, args in (
        ("uniform", (6,)),
        ("bernoulli", (1, 3)),
        ("exp_neg", (5, 2)),
        ("geometric", (1, 2)),
        ("laplace", (3, 2, 0)),
        ("laplace", (3, 2, 1)),
        ("gaussian", (4, 1, 3, 288, 100000, 0, 0)),
    ):
        src = ReplaySource(bytes(buf))
        try:
            run_batch(src, name, args, 4, 8, lambda s: 0)
        except Exception:
            pass
