"""Small shared helpers: keyed RNG, exponent arithmetic, index packing."""

import math

import numpy as np

from .errors import ParameterError


def conjugate_exponent(p):
    """Holder conjugate q of p, with q = inf at p = 1."""
    if p < 1:
        raise ParameterError(f"exponent p must satisfy p >= 1, got {p}")
    if p == 1:
        return math.inf
    return p / (p - 1.0)


def rng_for(seed, *subkeys):
    """Counter-based generator keyed by (seed, *subkeys).

    Philox is counter-based, so streams depend only on the key, never on
    draw order across threads; identical keys give identical streams.
    """
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(k) for k in subkeys))
    return np.random.Generator(np.random.Philox(ss))


def pack_rows(rows, base):
    """Pack integer index rows (E, k) into scalar int64 keys (lexicographic)."""
    rows = np.asarray(rows, dtype=np.int64)
    if rows.ndim == 1:
        rows = rows[None, :]
    k = rows.shape[1]
    if base ** k > 2 ** 62:
        raise ParameterError("index space too large to pack into int64 keys")
    keys = np.zeros(rows.shape[0], dtype=np.int64)
    for c in range(k):
        keys = keys * base + rows[:, c]
    return keys


def float_repr(x):
    """Shortest round-trip decimal representation of a float."""
    return repr(float(x))


def fit_loglog_slope(xs, ys):
    """Least-squares slope of log(y) against log(x)."""
    lx = np.log(np.asarray(xs, dtype=float))
    ly = np.log(np.asarray(ys, dtype=float))
    lx = lx - lx.mean()
    return float((lx * (ly - ly.mean())).sum() / (lx * lx).sum())
