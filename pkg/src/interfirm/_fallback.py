"""Pure-numpy implementations of the hot kernels.

These mirror ``_kernels.pyx`` operation for operation so that both backends
produce bit-identical cascade trajectories. Keep the floating point
expressions in the same order when editing either file.
"""
import numpy as np

BACKEND = "numpy"

_MASK = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
_M1 = 0xBF58476D1CE4E5B9
_M2 = 0x94D049BB133111EB
_INV53 = 1.0 / 9007199254740992.0


def mix64(z):
    """SplitMix64 finalizer on a Python int."""
    z = (z + _GOLDEN) & _MASK
    z = ((z ^ (z >> 30)) * _M1) & _MASK
    z = ((z ^ (z >> 27)) * _M2) & _MASK
    return z ^ (z >> 31)


def stream_key(seed, step):
    """Key of the uniform stream for one (seed, step) counter block."""
    return mix64(mix64(seed & _MASK) ^ (step & _MASK))


def _mix64_array(z):
    z = z + np.uint64(_GOLDEN)
    z = (z ^ (z >> np.uint64(30))) * np.uint64(_M1)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(_M2)
    return z ^ (z >> np.uint64(31))


def uniforms(key, index):
    """Uniform [0, 1) draws keyed by ``(key, index)``; 53-bit resolution."""
    z = _mix64_array(np.uint64(key) ^ np.asarray(index, dtype=np.uint64))
    return (z >> np.uint64(11)).astype(np.float64) * _INV53


def _gather_targets(indptr, indices, sources):
    starts = indptr[sources]
    counts = indptr[sources + 1] - starts
    total = int(counts.sum())
    if total == 0:
        return indices[:0]
    offsets = np.repeat(starts - (np.cumsum(counts) - counts), counts)
    return indices[offsets + np.arange(total)]


def cascade_step(indptr, indices, d_in, p, failed, newly, k_step, r_step, key):
    """Advance one cascade step in place.

    ``p`` and ``failed`` are updated in place; returns the sorted ids of the
    nodes that failed in this step.
    """
    n = p.shape[0]
    x = np.zeros(n, dtype=np.float64)
    targets = _gather_targets(indptr, indices, newly)
    if targets.size:
        m = np.bincount(targets, minlength=n)
        hit = np.flatnonzero(m)
        x[hit] = (m[hit].astype(np.float64) * k_step) / d_in[hit].astype(np.float64)
    denom = 1.0 + r_step
    p[:] = x + p * (1.0 - x) / denom
    cand = np.flatnonzero((failed == 0) & (p > 0.0))
    if cand.size == 0:
        return cand.astype(np.int64)
    z = uniforms(key, cand)
    new = cand[z < p[cand]].astype(np.int64)
    failed[new] = 1
    return new


def _clogc(n):
    c = np.arange(n + 1, dtype=np.float64)
    out = np.zeros(n + 1)
    out[1:] = c[1:] * np.log2(c[1:])
    return out


def cmi_rows(a, b, c, na, nb, nc):
    """Plug-in conditional mutual information I(a; b | c) in bits, per row.

    ``a``, ``b``, ``c`` are integer arrays of shape (rows, samples) holding
    symbols in ``[0, na)``, ``[0, nb)`` and ``[0, nc)``. Use ``nc=1`` with a
    zero ``c`` for plain mutual information.
    """
    a = np.asarray(a, dtype=np.int64)
    b = np.asarray(b, dtype=np.int64)
    c = np.asarray(c, dtype=np.int64)
    rows, n = a.shape
    out = np.zeros(rows, dtype=np.float64)
    if rows == 0 or n == 0:
        return out
    table = _clogc(n)
    width = na * nb * nc
    chunk = max(1, (1 << 22) // max(width, 1))
    for s in range(0, rows, chunk):
        e = min(rows, s + chunk)
        r = e - s
        base = np.arange(r, dtype=np.int64)[:, None]
        cs, as_, bs = c[s:e], a[s:e], b[s:e]
        ac = cs * na + as_
        abc = ac * nb + bs
        bc = cs * nb + bs

        def sum_clogc(codes, size):
            counts = np.bincount((base * size + codes).ravel(), minlength=r * size)
            return table[counts].reshape(r, size).sum(axis=1)

        out[s:e] = (
            sum_clogc(abc, width)
            + sum_clogc(cs, nc)
            - sum_clogc(ac, na * nc)
            - sum_clogc(bc, nb * nc)
        ) / n
    return out
