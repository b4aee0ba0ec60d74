"""Seeded synthetic stand-ins for proprietary firm-level data.

``gen_coupled`` plants a patent -> shareholding dependency with a known
delay; ``gen_shareholding`` grows a sparse directed ownership forest with a
heavy-tailed in-degree and many small components.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from .countries import country_pool
from .graph import EdgeKind, EdgeTable, Multiplicity, Network, NodeTable
from .overlap import YearWindow


@dataclass(frozen=True)
class CoupledGenParams:
    n_pairs: int = 5000
    years: YearWindow = field(default_factory=YearWindow)
    p_patent: float = 0.3
    q_convert: float = 0.6
    d_delay: int = 4
    p_noise_share: float = 0.02
    n_countries: int = 5
    seed: int = 0

    def __post_init__(self):
        for name in ("p_patent", "q_convert", "p_noise_share"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {v}")
        if self.d_delay < 0:
            raise ValueError("d_delay must be >= 0")
        if self.n_pairs < 0:
            raise ValueError("n_pairs must be >= 0")
        if self.n_countries < 1:
            raise ValueError("n_countries must be >= 1")


@dataclass
class CoupledData:
    nodes: NodeTable
    patents: EdgeTable
    shares: EdgeTable
    truth: dict


def gen_coupled(params: CoupledGenParams) -> CoupledData:
    """Two-layer temporal records with a planted conversion delay.

    Each pair files patents independently each year with probability
    ``p_patent``. Every patent event converts with probability ``q_convert``
    into a shareholding link that exists from ``d_delay`` years later until the
    end of the window. Independent single-year shareholding observations are
    added with probability ``p_noise_share`` per pair-year.
    """
    rng = np.random.default_rng(params.seed)
    n, L, d = params.n_pairs, len(params.years), params.d_delay
    pool = country_pool(params.n_countries)

    nodes = NodeTable()
    countries = rng.integers(0, len(pool), size=2 * n)
    width = len(str(max(2 * n - 1, 0)))
    for i in range(2 * n):
        nodes.set_country(f"F{i:0{width}d}", pool[countries[i]])

    patents = rng.random((n, L)) < params.p_patent
    converts = patents & (rng.random((n, L)) < params.q_convert)
    noise = rng.random((n, L)) < params.p_noise_share
    flip = rng.random(n) < 0.5

    planted = np.zeros((n, L), dtype=bool)
    if d < L:
        planted[:, d:] = converts[:, : L - d]
    planted = np.logical_or.accumulate(planted, axis=1)
    shares = planted | noise

    a = 2 * np.arange(n, dtype=np.int64)
    b = a + 1
    pi, pt = np.nonzero(patents)
    si, st = np.nonzero(shares)
    # shareholding direction: investee -> shareholder, either firm may hold
    s_src = np.where(flip[si], b[si], a[si])
    s_dst = np.where(flip[si], a[si], b[si])
    y0 = params.years.start
    patent_table = EdgeTable.from_arrays(EdgeKind.PATENT, nodes, a[pi], b[pi], pt + y0)
    share_table = EdgeTable.from_arrays(EdgeKind.SHARE, nodes, s_src, s_dst, st + y0)

    converted = []
    for i in np.flatnonzero(planted.any(axis=1)).tolist():
        events = np.flatnonzero(converts[i, : L - d]) if d < L else np.zeros(0, int)
        converted.append({
            "src": nodes.keys[a[i]],
            "dst": nodes.keys[b[i]],
            "conversion_years": [int(t) + y0 for t in events],
            "share_start": int(events.min()) + d + y0,
        })
    params_echo = asdict(params)
    params_echo["years"] = [params.years.start, params.years.end]
    truth = {"generator": "coupled", "d_delay": d, "params": params_echo, "converted_pairs": converted}
    return CoupledData(nodes, patent_table, share_table, truth)


@dataclass(frozen=True)
class ShareGenParams:
    """Parameters of the ownership-forest generator.

    ``component_mix`` is the fraction of nodes placed in isolated
    investee-shareholder dyads. The rest grow by preferential attachment:
    each new firm becomes an investee of ``edges_per_node`` existing firms
    chosen with weight ``(in_degree + 1) ** attachment_exponent``, or starts
    a new tree with probability ``new_root_prob``.
    """

    n_nodes: int = 100_000
    component_mix: float = 0.6
    edges_per_node: int = 1
    attachment_exponent: float = 1.0
    new_root_prob: float = 0.05
    n_countries: int = 20
    country_weights: str = "zipf"
    assortativity: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.n_nodes < 2:
            raise ValueError("n_nodes must be >= 2")
        for name in ("component_mix", "new_root_prob", "assortativity"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {v}")
        if self.edges_per_node < 1:
            raise ValueError("edges_per_node must be >= 1")
        if self.country_weights not in ("zipf", "uniform"):
            raise ValueError("country_weights must be 'zipf' or 'uniform'")


def _grow(g, m, exponent, new_root_prob, rng):
    """Batched preferential attachment over ``g`` nodes; returns (src, dst, first_target)."""
    indeg = np.zeros(g, dtype=np.int64)
    srcs, dsts = [], []
    first = np.full(g, -1, dtype=np.int64)
    s = 1
    while s < g:
        e = min(g, s + max(1, s // 50))
        b = e - s
        w = (indeg[:s] + 1.0) ** exponent
        cum = np.cumsum(w)
        picks = np.searchsorted(cum, rng.random((b, m)) * cum[-1], side="right")
        picks = np.minimum(picks, s - 1)
        rooted = rng.random(b) < new_root_prob
        new = np.arange(s, e, dtype=np.int64)
        for j in range(m):
            keep = ~rooted
            if j:
                # drop repeats of an earlier pick for the same node
                keep &= (picks[:, :j] != picks[:, j:j + 1]).all(axis=1)
            srcs.append(new[keep])
            dsts.append(picks[keep, j])
            np.add.at(indeg, picks[keep, j], 1)
        first[s:e] = np.where(rooted, -1, picks[:, 0])
        s = e
    if not srcs:
        return np.zeros(0, np.int64), np.zeros(0, np.int64), first
    return np.concatenate(srcs), np.concatenate(dsts), first


def gen_shareholding(params: ShareGenParams) -> Network:
    """Directed shareholding network (investee -> shareholder) with countries."""
    rng = np.random.default_rng(params.seed)
    n = params.n_nodes
    n_dyads = int(params.component_mix * n) // 2
    g = n - 2 * n_dyads
    src, dst, first = _grow(g, params.edges_per_node, params.attachment_exponent,
                            params.new_root_prob, rng)
    dy = g + 2 * np.arange(n_dyads, dtype=np.int64)
    src = np.concatenate([src, dy])
    dst = np.concatenate([dst, dy + 1])

    pool = country_pool(params.n_countries)
    if params.country_weights == "zipf":
        w = 1.0 / np.arange(1, len(pool) + 1)
    else:
        w = np.ones(len(pool))
    label = rng.choice(len(pool), size=n, p=w / w.sum())
    if params.assortativity > 0:
        copy = rng.random(n) < params.assortativity
        # growth nodes attach to older nodes, so one forward pass settles labels
        for i in np.flatnonzero(copy[:g] & (first >= 0)).tolist():
            label[i] = label[first[i]]
        label[dy + 1] = np.where(copy[dy + 1], label[dy], label[dy + 1])

    perm = rng.permutation(n)
    src, dst = perm[src], perm[dst]
    countries = np.empty(n, dtype="<U2")
    countries[perm] = np.array(pool, dtype="<U2")[label]
    order = np.lexsort((dst, src))
    width = len(str(n - 1))
    keys = np.array([f"S{i:0{width}d}" for i in range(n)], dtype=object)
    return Network(n, src[order], dst[order], True, Multiplicity.SIMPLE, keys, countries)
