"""Stochastic cascading failures on directed shareholding networks.

Failure spreads along edges from an investee to its shareholders. Each step,
a node's fresh failure probability grows with the share of its investees
that failed in the previous step, and older contributions decay at the
per-step discount rate. Randomness is counter-based: node ``i`` at step
``t`` always sees the same uniform draw for a given seed, so trajectories do
not depend on scheduling or thread count.
"""
from __future__ import annotations

import math
import struct
import warnings
import zlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .graph import Network

DEFAULT_T = 50
DEFAULT_SHOCK = 0.1
# full failure matrices above this many bits are not kept (128 MiB)
DEFAULT_BIT_BUDGET = 1 << 30
DEFAULT_ALPHAS = (0.2, 0.4, 0.6, 0.8, 1.0)
DEFAULT_GAMMAS = (1.0, 2.0, 3.0, 4.0, 5.0)
FMX_MAGIC = b"FMX1"


@dataclass(frozen=True)
class CascadeParams:
    alpha: float
    gamma: float
    T: int = DEFAULT_T
    shock_fraction: float = DEFAULT_SHOCK
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError(f"alpha must lie in [0, 1], got {self.alpha}")
        if self.gamma < 0:
            raise ValueError(f"gamma must be >= 0, got {self.gamma}")
        if self.T < 1:
            raise ValueError(f"T must be >= 1, got {self.T}")
        if not 0.0 <= self.shock_fraction < 1.0:
            raise ValueError(f"shock_fraction must lie in [0, 1), got {self.shock_fraction}")
        if self.seed < 0:
            raise ValueError("seed must be nonnegative")


@dataclass(frozen=True)
class StepParams:
    k_step: float
    r_step: float


def derive_step_params(alpha: float, gamma: float, T: int) -> StepParams:
    """Per-step failure and discount rates equivalent to one-step ``alpha``, ``gamma``."""
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must lie in [0, 1], got {alpha}")
    if T < 1:
        raise ValueError(f"T must be >= 1, got {T}")
    if gamma < 0:
        raise ValueError(f"gamma must be >= 0, got {gamma}")
    k = 1.0 - (1.0 - alpha) ** (2.0 / (T + 1))
    try:
        r = math.expm1(gamma / T)
    except OverflowError:
        r = math.inf
    return StepParams(k, r)


def init_shock(n: int, shock_fraction: float, seed: int) -> np.ndarray:
    """Initial cascade vector with ``floor(shock_fraction * n)`` failed nodes."""
    if not 0.0 <= shock_fraction < 1.0:
        raise ValueError("shock_fraction must lie in [0, 1)")
    c0 = np.zeros(n, dtype=np.uint8)
    m = int(math.floor(shock_fraction * n))
    if m:
        c0[np.random.default_rng(seed).choice(n, size=m, replace=False)] = 1
    return c0


class FailureMatrix:
    """Bit-packed T x N failure record; row t holds the nodes down after step t+1."""

    def __init__(self, n: int, rows: np.ndarray):
        self.n = int(n)
        self.rows = np.asarray(rows, dtype=np.uint8).reshape(-1, (self.n + 7) // 8)

    @property
    def T(self):
        return self.rows.shape[0]

    def dense(self) -> np.ndarray:
        return np.unpackbits(self.rows, axis=1, count=self.n, bitorder="little")

    def write(self, path):
        with open(path, "wb") as fh:
            fh.write(FMX_MAGIC)
            fh.write(struct.pack("<QQ", self.n, self.T))
            fh.write(np.ascontiguousarray(self.rows).tobytes())

    @classmethod
    def read(cls, path) -> "FailureMatrix":
        with open(path, "rb") as fh:
            if fh.read(4) != FMX_MAGIC:
                raise ValueError(f"{path}: not a failure-matrix file")
            n, T = struct.unpack("<QQ", fh.read(16))
            width = (n + 7) // 8
            data = np.frombuffer(fh.read(), dtype=np.uint8)
        if data.size != T * width:
            raise ValueError(f"{path}: expected {T * width} payload bytes, got {data.size}")
        return cls(n, data.reshape(T, width))


@dataclass
class CascadeState:
    """Mutable simulation state after ``t`` steps.

    ``newly`` holds the ids that failed in the latest step (the cascade
    vector ``c_t`` in sparse form); ``failed`` is the current row of the
    failure matrix.
    """

    indptr: np.ndarray
    indices: np.ndarray
    d_in: np.ndarray
    p: np.ndarray
    failed: np.ndarray
    newly: np.ndarray
    seed: int
    t: int = 0

    @classmethod
    def initial(cls, network: Network, c0, seed: int = 0) -> "CascadeState":
        if not network.directed:
            raise ValueError("cascades run on directed networks")
        net = network.simple()
        indptr, indices = net.out_csr
        c0 = np.asarray(c0, dtype=np.uint8)
        return cls(
            indptr=indptr,
            indices=indices,
            d_in=net.in_degree,
            p=np.zeros(net.n, dtype=np.float64),
            failed=c0.copy(),
            newly=np.flatnonzero(c0).astype(np.int64),
            seed=int(seed),
        )

    @property
    def n(self):
        return self.p.shape[0]

    @property
    def c(self) -> np.ndarray:
        out = np.zeros(self.n, dtype=np.uint8)
        out[self.newly] = 1
        return out

    def copy(self) -> "CascadeState":
        return CascadeState(self.indptr, self.indices, self.d_in, self.p.copy(),
                            self.failed.copy(), self.newly.copy(), self.seed, self.t)

    def advance(self, sp: StepParams) -> np.ndarray:
        """Run one step in place; returns the ids newly failed."""
        t = self.t + 1
        key = kernels.stream_key(self.seed, t)
        self.newly = kernels.cascade_step(self.indptr, self.indices, self.d_in, self.p,
                                          self.failed, self.newly, sp.k_step, sp.r_step, key)
        self.t = t
        return self.newly


def step(state: CascadeState, sp: StepParams) -> CascadeState:
    """Return the state one step later, leaving ``state`` untouched.

    For every node: ``x = m * k_step / d_in`` where ``m`` counts its investees
    that failed in the previous step (0 when it holds no investees), then
    ``p <- x + p * (1 - x) / (1 + r_step)``. A node that has not failed yet
    fails when its uniform draw falls below ``p``; failures persist.
    """
    nxt = state.copy()
    nxt.advance(sp)
    return nxt


@dataclass
class CascadeMetrics:
    mean_downtime: float
    failure_proportion: float
    new_failures: np.ndarray = field(repr=False)
    n_nodes: int = 0
    n_shock: int = 0
    flag: str = ""


@dataclass
class RunResult:
    metrics: CascadeMetrics
    failed_per_step: np.ndarray = field(repr=False)
    matrix: FailureMatrix | None = None


def run(network: Network, params: CascadeParams, shock=None, record: bool = False,
        bit_budget: int = DEFAULT_BIT_BUDGET, debug: bool = False) -> RunResult:
    """Simulate ``params.T`` steps and compute mean downtime and failure proportion.

    ``shock`` overrides the random initial failures with explicit node ids.
    The shocked share subtracted from both metrics is the realized one,
    ``n_shock / N``. With ``record`` the bit-packed failure matrix is kept
    unless it would exceed ``bit_budget`` bits.
    """
    net = network.simple()
    n, T = net.n, params.T
    if n == 0:
        z = np.zeros(T, dtype=np.int64)
        return RunResult(CascadeMetrics(0.0, 0.0, z, 0, 0, "empty"), z)
    if shock is None:
        c0 = init_shock(n, params.shock_fraction, params.seed)
    else:
        c0 = np.zeros(n, dtype=np.uint8)
        c0[np.asarray(shock, dtype=np.int64)] = 1
    state = CascadeState.initial(net, c0, params.seed)
    sp = derive_step_params(params.alpha, params.gamma, T)
    if record and n * T > bit_budget:
        warnings.warn(f"failure matrix of {n * T} bits exceeds budget {bit_budget}; not recorded",
                      RuntimeWarning)
        record = False
    rows = np.empty((T, (n + 7) // 8), dtype=np.uint8) if record else None
    n_shock = int(c0.sum())
    new = np.zeros(T, dtype=np.int64)
    down = np.zeros(T, dtype=np.int64)
    total = n_shock
    for t in range(T):
        fresh = state.advance(sp)
        total += fresh.size
        new[t] = fresh.size
        down[t] = total
        if record:
            rows[t] = np.packbits(state.failed, bitorder="little")
        if debug:
            assert ((state.p >= 0.0) & (state.p <= 1.0)).all(), "failure probability out of [0, 1]"
    # integer numerators keep the no-propagation case exactly zero
    tau = (int(down.sum()) - n_shock * T) / (n * T)
    phi = (int(down[-1]) - n_shock) / n
    metrics = CascadeMetrics(tau, phi, new, n, n_shock)
    return RunResult(metrics, down, FailureMatrix(n, rows) if record else None)


def derive_seed(*parts: int) -> int:
    """64-bit child seed for a tuple of nonnegative integers."""
    hi, lo = np.random.SeedSequence(list(parts)).generate_state(2, dtype=np.uint32)
    return (int(hi) << 32) | int(lo)


def country_seed(seed: int, country: str) -> int:
    return derive_seed(seed, zlib.crc32(country.encode("utf-8")))


@dataclass(frozen=True)
class SweepRow:
    alpha: float
    gamma: float
    replicate: int
    seed: int
    mean_downtime: float
    failure_proportion: float


@dataclass
class SweepCell:
    alpha: float
    gamma: float
    n: int
    mean_downtime: float
    downtime_se: float
    failure_proportion: float
    failure_se: float


def _mean_se(values):
    v = np.asarray(values, dtype=float)
    se = float(v.std(ddof=1) / math.sqrt(v.size)) if v.size > 1 else math.nan
    return float(v.mean()), se


@dataclass
class SweepResult:
    rows: list

    def cells(self) -> list:
        groups: dict = {}
        for r in self.rows:
            groups.setdefault((r.alpha, r.gamma), []).append(r)
        out = []
        for (a, g), rs in groups.items():
            td, tse = _mean_se([r.mean_downtime for r in rs])
            fp, fse = _mean_se([r.failure_proportion for r in rs])
            out.append(SweepCell(a, g, len(rs), td, tse, fp, fse))
        return out


def _map(fn, items, threads):
    if threads > 1 and len(items) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(fn, items))
    return [fn(it) for it in items]


def sweep(network: Network, alphas=DEFAULT_ALPHAS, gammas=DEFAULT_GAMMAS, T: int = DEFAULT_T,
          replicates: int = 1, seed: int = 0, shock_fraction: float = DEFAULT_SHOCK,
          threads: int = 1) -> SweepResult:
    """Independent seeded runs over the ``alphas`` x ``gammas`` grid.

    Run ``(i, j, r)`` uses seed ``derive_seed(seed, i, j, r)``, recorded in
    its row so the run can be repeated on its own.
    """
    if not len(alphas) or not len(gammas):
        raise ValueError("empty parameter grid")
    net = network.simple()
    tasks = [
        (a, g, rep, derive_seed(seed, i, j, rep))
        for i, a in enumerate(alphas)
        for j, g in enumerate(gammas)
        for rep in range(replicates)
    ]

    def one(task):
        a, g, rep, s = task
        m = run(net, CascadeParams(a, g, T, shock_fraction, s)).metrics
        return SweepRow(float(a), float(g), rep, s, m.mean_downtime, m.failure_proportion)

    return SweepResult(_map(one, tasks, threads))


@dataclass
class CountryMetrics:
    country: str
    nodes: int
    edges: int
    mean_downtime: float
    failure_proportion: float
    flag: str = ""


def country_sweep(networks: dict, params: CascadeParams, replicates: int = 1,
                  threads: int = 1) -> list:
    """Run each country's network with a country-derived seed.

    Metrics are averaged over ``replicates`` runs; the output is ranked by
    mean downtime, highest first (ties by country code).
    """
    def one(item):
        country, net = item
        net = net.simple()
        if net.n == 0:
            return CountryMetrics(country, 0, 0, 0.0, 0.0, "empty")
        base = country_seed(params.seed, country)
        taus, phis = [], []
        for rep in range(replicates):
            p = CascadeParams(params.alpha, params.gamma, params.T, params.shock_fraction,
                              derive_seed(base, rep))
            m = run(net, p).metrics
            taus.append(m.mean_downtime)
            phis.append(m.failure_proportion)
        flag = "no-edges" if net.num_edges == 0 else ""
        return CountryMetrics(country, net.n, net.num_edges, float(np.mean(taus)), float(np.mean(phis)), flag)

    out = _map(one, sorted(networks.items()), threads)
    return sorted(out, key=lambda m: (-m.mean_downtime, m.country))
