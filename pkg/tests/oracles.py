"""Independent brute-force references used by the tests.

Nothing here imports the estimators under test; everything is counted
with ``collections.Counter`` and evaluated with ``math``.
"""
import math
from collections import Counter

import numpy as np


def H(counter):
    n = sum(counter.values())
    return -sum(c / n * math.log2(c / n) for c in counter.values() if c)


def mi_pairs(pairs):
    pairs = list(pairs)
    joint = Counter(pairs)
    a = Counter(p[0] for p in pairs)
    b = Counter(p[1] for p in pairs)
    return H(a) + H(b) - H(joint)


def cmi_triples(triples):
    """I(A; B | C) from a list of (a, b, c)."""
    triples = list(triples)
    return (H(Counter((a, c) for a, b, c in triples)) + H(Counter((b, c) for a, b, c in triples))
            - H(Counter(triples)) - H(Counter(c for a, b, c in triples)))


def delayed_mi(x, y, u):
    """MI of x[t] with y[t+u]."""
    return mi_pairs((x[t], y[t + u]) for t in range(len(x) - u))


def ais(x, k, tau=1):
    start = (k - 1) * tau
    rows = []
    for n in range(start, len(x) - 1):
        hist = tuple(x[n - j * tau] for j in range(k))
        rows.append((hist, x[n + 1]))
    return mi_pairs(rows)


def te(y, x, k=1, l=1, tau_x=1, tau_y=1, u=1):
    """Transfer entropy from source y to target x (conditional-MI form)."""
    rows = []
    for n in range(len(x) - 1):
        xi = [n - j * tau_x for j in range(k)]
        yi = [n + 1 - u - j * tau_y for j in range(l)]
        if min(xi + yi) < 0:
            continue
        rows.append((x[n + 1], tuple(y[i] for i in yi), tuple(x[i] for i in xi)))
    return cmi_triples(rows)


def chi2_sf_even(x, df):
    """Closed-form chi-square survival for even degrees of freedom."""
    m = df // 2
    return math.exp(-x / 2) * sum((x / 2) ** i / math.factorial(i) for i in range(m))


def fisher(ps):
    return chi2_sf_even(-2 * sum(math.log(p) for p in ps), 2 * len(ps))


def cascade_phi(edges, n, alpha, gamma, T, shock_nodes, reps, rng):
    """Monte Carlo failure proportion of the cascade model, replicates in lockstep.

    ``shock_nodes`` is a fixed list, or ``None`` for one uniformly chosen
    node per replicate. Edges run investee -> shareholder.
    """
    k = 1 - (1 - alpha) ** (2 / (T + 1))
    r = math.exp(gamma / T) - 1
    A = np.zeros((n, n))
    for s, d in edges:
        A[s, d] = 1
    d_in = A.sum(axis=0)
    failed = np.zeros((reps, n), dtype=bool)
    if shock_nodes is None:
        failed[np.arange(reps), rng.integers(0, n, reps)] = True
    else:
        failed[:, shock_nodes] = True
    n_shock = failed.sum(axis=1)
    c = failed.copy()
    p = np.zeros((reps, n))
    for _ in range(T):
        m = c.astype(float) @ A
        x = np.where(d_in > 0, m * k / np.where(d_in > 0, d_in, 1), 0.0)
        p = x + p * (1 - x) / (1 + r)
        z = rng.random((reps, n))
        c = (~failed) & (z < p)
        failed |= c
    return (failed.sum(axis=1) - n_shock) / n
