"""Plug-in discrete estimators of information dynamics on binary series.

All quantities are in bits and use the maximum-likelihood (plug-in)
distribution of the observed samples, with no bias correction. Mutual
information, active information storage and transfer entropy are all
evaluated as (conditional) mutual information over integer-coded samples,
which lets one kernel serve every measure and every surrogate.
"""
from __future__ import annotations

import hashlib
import warnings
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np
from scipy import stats

from . import kernels

MI = "MI"
AIS_P = "AIS_P"
AIS_S = "AIS_S"
TE_PS = "TE_PS"
TE_SP = "TE_SP"
MEASURES = (MI, AIS_P, AIS_S, TE_PS, TE_SP)

DEFAULT_SURROGATES = 200
P_FLOOR = 1e-12
# surrogate values this close to the observed one count as ties
TIE_TOL = 1e-10
# plug-in values below this are round-off and reported as exactly 0
ZERO_TOL = 1e-12


class InsufficientDataError(ValueError):
    """Too few samples remain after embedding and alignment."""

    def __init__(self, message, available):
        super().__init__(f"{message} (available samples: {available})")
        self.available = available


@dataclass(frozen=True)
class BinarySeries:
    values: np.ndarray
    label: str | None = None
    pair: tuple | None = None

    def __post_init__(self):
        object.__setattr__(self, "values", _as_binary(self.values))

    def __array__(self, dtype=None, copy=None):
        return self.values if dtype is None else self.values.astype(dtype)

    def __len__(self):
        return self.values.shape[0]


def _as_binary(x):
    arr = np.asarray(getattr(x, "values", x))
    if arr.ndim != 1 or arr.size == 0:
        raise ValueError("expected a non-empty 1-d series")
    if not np.isin(arr, (0, 1)).all():
        raise ValueError("series must be binary")
    return arr.astype(np.int64)


@dataclass(frozen=True)
class InfoParams:
    """Embedding parameters: target history ``k`` sampled every ``tau_x``,
    source history ``l`` sampled every ``tau_y``, source-target delay ``u``."""

    k: int = 5
    l: int = 1
    tau_x: int = 1
    tau_y: int = 1
    u: int = 1

    def __post_init__(self):
        for name in ("k", "l", "tau_x", "tau_y"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if self.u < 0:
            raise ValueError("u must be >= 0")


@dataclass
class InfoResult:
    measure: str
    value_bits: float
    p_value: float | None
    n_samples: int
    params: InfoParams
    population_size: int = 1
    degenerate: int = 0
    tested: int = 0


@dataclass
class JointCounts:
    """Counts of ``(next, history, source)`` state-transition tuples."""

    counts: Counter
    n_samples: int

    def marginal(self, *axes):
        out = Counter()
        for key, c in self.counts.items():
            out[tuple(key[a] for a in axes)] += c
        return out


def entropy(counts) -> float:
    """Shannon entropy in bits of a histogram (mapping or sequence of counts)."""
    values = np.asarray(list(counts.values()) if hasattr(counts, "values") else counts, dtype=float)
    if (values < 0).any():
        raise ValueError("counts must be nonnegative")
    total = values.sum()
    if total <= 0:
        raise ValueError("entropy of an empty histogram")
    p = values[values > 0] / total
    return float(-(p * np.log2(p)).sum()) + 0.0


# ---------------------------------------------------------------------------
# sample plans: which time indices feed each coded variable


def _code(series, positions):
    """Integer code of the bits ``series[..., positions[j]]`` (bit j)."""
    out = np.zeros(series.shape[:-1] + (positions[0].shape[0],), dtype=np.int64)
    for j, pos in enumerate(positions):
        out |= series[..., pos].astype(np.int64) << j
    return out


def _mi_plan(L, u):
    n = L - abs(u)
    if n < 2:
        raise InsufficientDataError(f"mutual information at delay {u} needs 2 aligned samples", max(n, 0))
    t = np.arange(n)
    return (t, t + u) if u >= 0 else (t - u, t)


def _ais_plan(L, k, tau):
    start = (k - 1) * tau
    if L - 1 - start < 1:
        raise InsufficientDataError(f"series of length {L} too short for k={k}, tau={tau}", max(L - 1 - start, 0))
    n = np.arange(start, L - 1)
    return n + 1, [n - j * tau for j in range(k)]


def _te_plan(L, p: InfoParams):
    start = max((p.k - 1) * p.tau_x, p.u - 1 + (p.l - 1) * p.tau_y)
    if L - 1 - start < 1:
        raise InsufficientDataError(f"series of length {L} too short for {p}", max(L - 1 - start, 0))
    n = np.arange(start, L - 1)
    hist = [n - j * p.tau_x for j in range(p.k)]
    src = [n + 1 - p.u - j * p.tau_y for j in range(p.l)]
    return n + 1, hist, src


def _measure_codes(kind, source, target, params):
    """Return ``(a, b, c, na, nb, nc)`` so that the measure is I(a; b | c).

    ``source`` and ``target`` have shape (..., L). For AIS only ``target``
    is used.
    """
    L = target.shape[-1]
    if kind == MI:
        ia, ib = _mi_plan(L, params.u)
        a, b = source[..., ia], target[..., ib]
        return a, b, np.zeros_like(a), 2, 2, 1
    if kind == "AIS":
        nxt, hist = _ais_plan(L, params.k, params.tau_x)
        a = _code(target, hist)
        return a, target[..., nxt], np.zeros_like(a), 1 << params.k, 2, 1
    if kind == "TE":
        nxt, hist, src = _te_plan(L, params)
        return _code(source, src), target[..., nxt], _code(target, hist), 1 << params.l, 2, 1 << params.k
    raise ValueError(f"unknown measure {kind!r}")


def _evaluate(kind, source, target, params):
    a, b, c, na, nb, nc = _measure_codes(kind, source, target, params)
    n = a.shape[-1]
    rows = int(np.prod(a.shape[:-1], dtype=np.int64))
    vals = kernels.cmi_rows(
        np.ascontiguousarray(np.broadcast_to(a, a.shape).reshape(rows, n)),
        np.ascontiguousarray(np.broadcast_to(b, a.shape).reshape(rows, n)),
        np.ascontiguousarray(np.broadcast_to(c, a.shape).reshape(rows, n)),
        na, nb, nc,
    )
    return vals.reshape(a.shape[:-1]), n


def _report(v):
    v = float(v)
    return v if v >= ZERO_TOL else 0.0


# ---------------------------------------------------------------------------
# single-series estimators


@dataclass(frozen=True)
class _Delay:
    u: int


def mutual_information(x, y, u: int = 0) -> InfoResult:
    """MI between ``x[t]`` and ``y[t + u]`` over the aligned samples.

    A negative ``u`` pairs ``x[t - u]`` with ``y[t]``.
    """
    x, y = _as_binary(x), _as_binary(y)
    if x.shape != y.shape:
        raise ValueError("series lengths differ")
    params = InfoParams(k=1, l=1, u=abs(u))
    v, n = _evaluate(MI, x, y, _Delay(u))
    return InfoResult(MI, _report(v), None, n, params)


def active_information_storage(x, k: int = 1, tau: int = 1) -> InfoResult:
    """MI between the next value and the length-``k`` history of ``x``."""
    x = _as_binary(x)
    params = InfoParams(k=k, l=1, tau_x=tau, u=0)
    v, n = _evaluate("AIS", x, x, params)
    return InfoResult("AIS", _report(v), None, n, params)


def transfer_entropy(source, target, params: InfoParams = InfoParams()) -> InfoResult:
    """Conditional MI between the delayed source history and the target's
    next value, given the target's own history."""
    source, target = _as_binary(source), _as_binary(target)
    if source.shape != target.shape:
        raise ValueError("series lengths differ")
    v, n = _evaluate("TE", source, target, params)
    return InfoResult("TE", _report(v), None, n, params)


def te_joint_counts(source, target, params: InfoParams = InfoParams()) -> JointCounts:
    """Contingency table of ``(next, target history, source history)`` codes."""
    source, target = _as_binary(source), _as_binary(target)
    nxt, hist, src = _te_plan(target.shape[0], params)
    tuples = zip(target[nxt].tolist(), _code(target, hist).tolist(), _code(source, src).tolist())
    counts = Counter(tuples)
    return JointCounts(counts, sum(counts.values()))


def conditional_entropy(joint: Counter, given: Counter) -> float:
    """H(A | B) = H(A, B) - H(B) from the joint and conditioning histograms."""
    return entropy(joint) - entropy(given)


def transfer_entropy_from_counts(jc: JointCounts) -> float:
    """Entropy-difference form H(X'|X) - H(X'|X, Y) of transfer entropy."""
    h_next_hist = conditional_entropy(jc.marginal(0, 1), jc.marginal(1))
    h_next_all = conditional_entropy(jc.counts, jc.marginal(1, 2))
    return h_next_hist - h_next_all


# ---------------------------------------------------------------------------
# significance


def surrogate_p_value(measure, x, y, n_surrogates: int = DEFAULT_SURROGATES, seed: int = 0) -> float:
    """Permutation p-value of ``measure(x, y)`` against shuffles of ``x``.

    ``measure`` maps two binary series to a float. Shuffling preserves the
    marginal counts of ``x``. Ties with the observed value count as
    exceedances, so p = (1 + #{surrogate >= observed}) / (1 + n_surrogates).
    """
    if n_surrogates < 1:
        raise ValueError("n_surrogates must be >= 1")
    x = _as_binary(x)
    observed = measure(x, y)
    rng = np.random.default_rng(seed)
    hits = 0
    for _ in range(n_surrogates):
        if measure(rng.permutation(x), y) >= observed - TIE_TOL:
            hits += 1
    return (1 + hits) / (1 + n_surrogates)


def fisher_combine(p_values, floor: float = P_FLOOR) -> float:
    """Fisher's method: -2 sum(ln p) against chi-square with 2n dof.

    Assumes the tests are independent; edges sharing a firm break this, so
    the combined value is best read as a summary, not an exact level.
    """
    p = np.asarray(list(p_values), dtype=float)
    if p.size == 0:
        raise ValueError("no p-values to combine")
    if ((p < 0) | (p > 1) | np.isnan(p)).any():
        raise ValueError("p-values must lie in [0, 1]")
    if (p < floor).any():
        warnings.warn(f"{int((p < floor).sum())} p-values clamped to {floor}", RuntimeWarning)
        p = np.maximum(p, floor)
    chi2 = -2.0 * float(np.log(np.sort(p)).sum())
    return float(stats.chi2.sf(chi2, 2 * p.size))


# ---------------------------------------------------------------------------
# edge populations


def _columns(measure):
    """(kind, source column, target column); column 0 is P, 1 is S."""
    return {
        MI: (MI, 0, 1),
        AIS_P: ("AIS", 0, 0),
        AIS_S: ("AIS", 1, 1),
        TE_PS: ("TE", 0, 1),
        TE_SP: ("TE", 1, 0),
    }[measure]


def _stream_ids(pair, names):
    """Integers identifying a pair's surrogate stream.

    With ``names`` the stream follows the firms' external ids, so it does not
    depend on the order in which they were interned.
    """
    if names is None:
        return int(pair[0]), int(pair[1])
    out = []
    for name in sorted((str(names[pair[0]]), str(names[pair[1]]))):
        out.append(int.from_bytes(hashlib.blake2b(name.encode("utf-8"), digest_size=8).digest(), "little"))
    return tuple(out)


def _edge_permutations(seed, ids, length, n_surrogates):
    rng = np.random.default_rng([seed, *ids])
    return rng.permuted(np.tile(np.arange(length), (n_surrogates, 1)), axis=1)


def _edge_chunk(kind, src, tgt, streams, params, n_surrogates, seed, p_mode):
    observed, n = _evaluate(kind, src, tgt, params)
    if n_surrogates == 0:
        return observed, None, None, n
    L = src.shape[1]
    perms = np.stack([_edge_permutations(seed, pr, L, n_surrogates) for pr in streams])
    shuffled = np.take_along_axis(np.broadcast_to(src[:, None, :], perms.shape), perms, axis=2)
    if kind == "AIS":
        sur, _ = _evaluate(kind, shuffled, shuffled, params)
    else:
        sur, _ = _evaluate(kind, shuffled, np.broadcast_to(tgt[:, None, :], perms.shape), params)
    ge = (sur >= observed[:, None] - TIE_TOL).sum(axis=1)
    if p_mode == "mid":
        gt = (sur > observed[:, None] + TIE_TOL).sum(axis=1)
        p = (1.0 + gt + 0.5 * (ge - gt)) / (1.0 + n_surrogates)
    else:
        p = (1.0 + ge) / (1.0 + n_surrogates)
    # a point-mass permutation distribution gives p = 1 whatever the data
    informative = ~(np.abs(sur - observed[:, None]) <= TIE_TOL).all(axis=1)
    return observed, p, informative, n


def _stack(matrices):
    pairs = sorted(matrices)
    groups: dict = {}
    for key in pairs:
        m = matrices[key]
        groups.setdefault(len(m.window), []).append(key)
    return groups


def aggregate_over_edges(matrices: dict, measure: str, params: InfoParams = InfoParams(),
                         n_surrogates: int = DEFAULT_SURROGATES, seed: int = 0,
                         threads: int = 1, p_mode: str = "mid", names=None) -> InfoResult:
    """Average a measure over every pair's existence matrix.

    Per-edge values are averaged arithmetically over the edges whose series
    satisfy the estimator's length preconditions; per-edge surrogate p-values
    are combined with :func:`fisher_combine`. Each edge draws its surrogates
    from a stream keyed by ``(seed, pair)``, so the result does not depend on
    ``threads``. Edges with a constant input column contribute 0 bits and are
    counted in ``degenerate``.

    Permutation p-values of a handful of binary samples are coarse and
    conservative, and Fisher's method compounds that bias over thousands of
    edges. By default (``p_mode="mid"``) each edge therefore contributes its
    mid-p value, counting ties with the observed value as half, and edges
    whose surrogates all equal the observed value (a test that cannot
    reject) are left out of the combination; ``tested`` reports how many
    edges entered it. ``p_mode="strict"`` combines the plain
    ``(1 + #ties-or-exceedances) / (1 + n)`` values of every edge.
    """
    if p_mode not in ("mid", "strict"):
        raise ValueError("p_mode must be 'mid' or 'strict'")
    if measure not in MEASURES:
        raise ValueError(f"unknown measure {measure!r}")
    if not matrices:
        raise InsufficientDataError("empty edge population", 0)
    kind, sc, tc = _columns(measure)
    values, pvals, degenerate = [], [], 0
    n_samples = 0
    last_error = None
    for L, keys in _stack(matrices).items():
        try:
            _measure_codes(kind, np.zeros((1, L), np.int64), np.zeros((1, L), np.int64), params)
        except InsufficientDataError as exc:
            last_error = exc
            continue
        cols = np.stack([matrices[k].as_array() for k in keys]).astype(np.int64)
        src = np.ascontiguousarray(cols[:, :, sc])
        tgt = np.ascontiguousarray(cols[:, :, tc])
        const = (src.min(axis=1) == src.max(axis=1)) | (tgt.min(axis=1) == tgt.max(axis=1))
        degenerate += int(const.sum())
        step = max(1, 2_000_000 // (max(n_surrogates, 1) * L))
        bounds = [(s, min(s + step, len(keys))) for s in range(0, len(keys), step)]

        def work(bd):
            s, e = bd
            ids = [_stream_ids(k, names) for k in keys[s:e]]
            return _edge_chunk(kind, src[s:e], tgt[s:e], ids, params, n_surrogates, seed, p_mode)

        if threads > 1 and len(bounds) > 1:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                parts = list(pool.map(work, bounds))
        else:
            parts = [work(bd) for bd in bounds]
        for obs, pv, informative, n in parts:
            values.append(np.where(obs >= ZERO_TOL, obs, 0.0))
            if pv is not None:
                pvals.append(pv if p_mode == "strict" else pv[informative])
            n_samples = n
    if not values:
        available = last_error.available if last_error is not None else 0
        raise InsufficientDataError(f"no edge satisfies the {measure} preconditions", available)
    v = np.concatenate(values)
    p, tested = None, 0
    if pvals:
        pv = np.concatenate(pvals)
        tested = int(pv.size)
        p = fisher_combine(pv) if tested else 1.0
    return InfoResult(measure, float(v.mean()), p, n_samples, params, int(v.size), degenerate, tested)


def delay_curve(matrices, measure, delays, params: InfoParams = InfoParams(), **kwargs):
    """:func:`aggregate_over_edges` evaluated at each source-target delay."""
    return [aggregate_over_edges(matrices, measure, replace(params, u=u), **kwargs) for u in delays]


def select_k_by_ais(matrices, column: str, k_values=range(1, 9), tau: int = 1):
    """Pick the history length maximizing the population-average AIS.

    ``column`` is ``"P"`` or ``"S"``. Lengths too long for the window are
    skipped. Returns ``(best_k, {k: average AIS})``; ties go to the smaller k.
    """
    measure = {"P": AIS_P, "S": AIS_S}[column]
    curve = {}
    for k in k_values:
        try:
            res = aggregate_over_edges(matrices, measure, InfoParams(k=k, tau_x=tau, u=0), n_surrogates=0)
        except InsufficientDataError:
            continue
        curve[k] = res.value_bits
    if not curve:
        raise InsufficientDataError("no history length fits the window", 0)
    best = max(curve, key=lambda k: (curve[k], -k))
    return best, curve
