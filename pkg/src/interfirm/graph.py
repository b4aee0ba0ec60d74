"""Temporal interfirm edge lists and sparse network structures.

Co-patenting links are undirected; shareholding links are directed from the
investee company to its shareholder. Firms are interned to dense 0-based ids
so that per-node state vectors index by position.
"""
from __future__ import annotations

import csv
import enum
import warnings
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterator, NamedTuple

import numpy as np
from scipy import sparse
from scipy.sparse import csgraph

from .countries import ISO_ALPHA2, UNKNOWN

DEFAULT_WINDOW = (2008, 2016)
MAX_INDIRECT_DEPTH = 4


class DataWarning(UserWarning):
    """Recoverable problem in input data."""


class ParseError(ValueError):
    """Malformed input file."""

    def __init__(self, path, line, reason):
        super().__init__(f"{path}:{line}: {reason}")
        self.path = path
        self.line = line
        self.reason = reason


class EdgeKind(str, enum.Enum):
    PATENT = "patent"
    SHARE = "share"


class Multiplicity(str, enum.Enum):
    SIMPLE = "simple"
    MULTI = "multi"


class TemporalEdgeRecord(NamedTuple):
    src: int
    dst: int
    year: int
    kind: EdgeKind


class NodeTable:
    """Bijective interning of external firm keys to dense ids."""

    def __init__(self, keys=()):
        self.keys: list[str] = []
        self.countries: list[str] = []
        self._index: dict[str, int] = {}
        for k in keys:
            self.intern(k)

    def __len__(self):
        return len(self.keys)

    def __contains__(self, key):
        return key in self._index

    def intern(self, key: str) -> int:
        i = self._index.get(key)
        if i is None:
            i = len(self.keys)
            self._index[key] = i
            self.keys.append(key)
            self.countries.append(UNKNOWN)
        return i

    def lookup(self, key: str) -> int | None:
        return self._index.get(key)

    def set_country(self, key: str, country: str) -> int:
        i = self.intern(key)
        self.countries[i] = country
        return i

    def key_array(self) -> np.ndarray:
        return np.array(self.keys, dtype=object)

    def country_array(self) -> np.ndarray:
        return np.array(self.countries, dtype="<U2")


def normalize_country(code: str) -> str | None:
    """Return the canonical code, or None when it is not ISO alpha-2."""
    code = code.strip().upper()
    if not code:
        return UNKNOWN
    return code if code in ISO_ALPHA2 else None


def load_nodes(path, nodes: NodeTable | None = None) -> NodeTable:
    """Read a ``id,country`` CSV into a node table."""
    nodes = NodeTable() if nodes is None else nodes
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["id", "country"]:
            raise ParseError(path, 1, "expected header 'id,country'")
        unknown = 0
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 2 or not row[0].strip():
                raise ParseError(path, lineno, f"expected 2 fields, got {row!r}")
            code = normalize_country(row[1])
            if code is None:
                unknown += 1
                code = UNKNOWN
            nodes.set_country(row[0].strip(), code)
    if unknown:
        warnings.warn(f"{path}: {unknown} unknown country codes stored as '??'", DataWarning)
    return nodes


def write_nodes(path, nodes: NodeTable, ids=None):
    ids = range(len(nodes)) if ids is None else ids
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["id", "country"])
        for i in ids:
            c = nodes.countries[i]
            w.writerow([nodes.keys[i], "" if c == UNKNOWN else c])


@dataclass
class EdgeTable:
    """Columnar store of temporal edge records of one kind.

    Iterating yields :class:`TemporalEdgeRecord` tuples. Rows are
    canonicalized (patent pairs ordered ``src <= dst``), deduplicated per
    ``(src, dst, year)`` and sorted.
    """

    kind: EdgeKind
    nodes: NodeTable
    src: np.ndarray
    dst: np.ndarray
    year: np.ndarray
    dropped_self_loops: int = 0
    malformed: int = 0
    out_of_window: int = 0

    @classmethod
    def from_arrays(cls, kind, nodes, src, dst, year, window=None, **counters):
        kind = EdgeKind(kind)
        src = np.asarray(src, dtype=np.int64)
        dst = np.asarray(dst, dtype=np.int64)
        year = np.asarray(year, dtype=np.int64)
        loops = src == dst
        n_loops = int(loops.sum())
        keep = ~loops
        n_out = 0
        if window is not None:
            inside = (year >= window[0]) & (year <= window[1])
            n_out = int((keep & ~inside).sum())
            keep &= inside
        src, dst, year = src[keep], dst[keep], year[keep]
        if kind is EdgeKind.PATENT:
            src, dst = np.minimum(src, dst), np.maximum(src, dst)
        if src.size:
            rows = np.unique(np.stack([src, dst, year], axis=1), axis=0)
            src, dst, year = rows[:, 0].copy(), rows[:, 1].copy(), rows[:, 2].copy()
        return cls(
            kind, nodes, src, dst, year,
            dropped_self_loops=counters.get("dropped_self_loops", 0) + n_loops,
            malformed=counters.get("malformed", 0),
            out_of_window=counters.get("out_of_window", 0) + n_out,
        )

    def __len__(self):
        return int(self.src.shape[0])

    def __iter__(self) -> Iterator[TemporalEdgeRecord]:
        for s, d, y in zip(self.src.tolist(), self.dst.tolist(), self.year.tolist()):
            yield TemporalEdgeRecord(s, d, y, self.kind)

    def years(self):
        return sorted(set(self.year.tolist()))


def load_edges(path, kind, nodes: NodeTable | None = None, window=DEFAULT_WINDOW,
               max_malformed=0) -> EdgeTable:
    """Load a ``src,dst,year`` CSV of one link kind.

    Malformed rows abort with :class:`ParseError` once their number exceeds
    ``max_malformed`` (default: the first one). Self-loops are dropped and
    counted. ``window=None`` keeps every year.
    """
    nodes = NodeTable() if nodes is None else nodes
    src, dst, year = [], [], []
    malformed = 0
    intern = nodes.intern
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["src", "dst", "year"]:
            raise ParseError(path, 1, "expected header 'src,dst,year'")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            reason = None
            if len(row) != 3:
                reason = f"expected 3 fields, got {len(row)}"
            else:
                a, b, y = row[0].strip(), row[1].strip(), row[2].strip()
                if not a or not b:
                    reason = "empty firm id"
                else:
                    try:
                        y = int(y)
                    except ValueError:
                        reason = f"bad year {row[2]!r}"
            if reason is not None:
                malformed += 1
                if malformed > max_malformed:
                    raise ParseError(path, lineno, reason)
                continue
            src.append(intern(a))
            dst.append(intern(b))
            year.append(y)
    return EdgeTable.from_arrays(kind, nodes, src, dst, year, window=window, malformed=malformed)


def write_edges(path, table: EdgeTable):
    keys = table.nodes.keys
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["src", "dst", "year"])
        for s, d, y in zip(table.src.tolist(), table.dst.tolist(), table.year.tolist()):
            w.writerow([keys[s], keys[d], y])


class Network:
    """Immutable sparse network over dense node ids ``0..n-1``.

    Edges are held as parallel ``src``/``dst`` arrays; CSR views for out-,
    in- and undirected neighbourhoods are built on first use.
    """

    def __init__(self, n, src, dst, directed, multiplicity=Multiplicity.SIMPLE,
                 keys=None, countries=None):
        self.n = int(n)
        self.src = np.asarray(src, dtype=np.int64)
        self.dst = np.asarray(dst, dtype=np.int64)
        self.directed = bool(directed)
        self.multiplicity = Multiplicity(multiplicity)
        self.keys = keys
        self.countries = countries
        for a in (self.src, self.dst):
            a.setflags(write=False)

    def __repr__(self):
        kind = "directed" if self.directed else "undirected"
        return f"Network(n={self.n}, edges={self.num_edges}, {kind}, {self.multiplicity.value})"

    @property
    def num_edges(self) -> int:
        return int(self.src.shape[0])

    def key(self, i):
        return str(i) if self.keys is None else self.keys[i]

    def _csr(self, rows, cols):
        order = np.lexsort((cols, rows))
        indptr = np.zeros(self.n + 1, dtype=np.int64)
        np.cumsum(np.bincount(rows, minlength=self.n), out=indptr[1:])
        return indptr, np.ascontiguousarray(cols[order], dtype=np.int64)

    @cached_property
    def out_csr(self):
        """``(indptr, indices)`` of successors; for shares, an investee's shareholders."""
        return self._csr(self.src, self.dst)

    @cached_property
    def in_csr(self):
        return self._csr(self.dst, self.src)

    @cached_property
    def neighbor_csr(self):
        """Undirected projection, each edge listed from both ends."""
        return self._csr(np.concatenate([self.src, self.dst]), np.concatenate([self.dst, self.src]))

    @cached_property
    def in_degree(self):
        return np.bincount(self.dst, minlength=self.n).astype(np.int64)

    @cached_property
    def out_degree(self):
        return np.bincount(self.src, minlength=self.n).astype(np.int64)

    @cached_property
    def degree(self):
        """Total degree: both edge ends counted, for either orientation."""
        return self.in_degree + self.out_degree

    def edge_set(self):
        return set(zip(self.src.tolist(), self.dst.tolist()))

    def simple(self) -> "Network":
        if self.multiplicity is Multiplicity.SIMPLE:
            return self
        src, dst = _unique_pairs(self.src, self.dst)
        return Network(self.n, src, dst, self.directed, Multiplicity.SIMPLE, self.keys, self.countries)

    def subgraph(self, mask) -> "Network":
        """Induced subnetwork on ``mask``; ids re-interned densely in order."""
        mask = np.asarray(mask, dtype=bool)
        new_id = np.full(self.n, -1, dtype=np.int64)
        kept = np.flatnonzero(mask)
        new_id[kept] = np.arange(kept.size)
        e = mask[self.src] & mask[self.dst]
        src, dst = new_id[self.src[e]], new_id[self.dst[e]]
        if not self.directed:
            src, dst = np.minimum(src, dst), np.maximum(src, dst)
        keys = None if self.keys is None else np.asarray(self.keys, dtype=object)[kept]
        if self.keys is None:
            keys = kept.astype(str).astype(object)
        countries = None if self.countries is None else np.asarray(self.countries)[kept]
        return Network(kept.size, src, dst, self.directed, self.multiplicity, keys, countries)


def _unique_pairs(src, dst):
    if src.size == 0:
        return src, dst
    rows = np.unique(np.stack([src, dst], axis=1), axis=0)
    return rows[:, 0].copy(), rows[:, 1].copy()


def build_network(records: EdgeTable, years=None, multiplicity=Multiplicity.SIMPLE,
                  include_isolated=False) -> Network:
    """Build a network from temporal records.

    ``years`` is a single year or an inclusive ``(start, end)`` range. Patent
    records give an undirected network, share records a directed one. Node
    ids are those of firms incident to a kept record, unless
    ``include_isolated`` keeps the whole node table.
    """
    multiplicity = Multiplicity(multiplicity)
    src, dst, year = records.src, records.dst, records.year
    if years is not None:
        lo, hi = (years, years) if np.isscalar(years) else years
        keep = (year >= lo) & (year <= hi)
        src, dst = src[keep], dst[keep]
    if multiplicity is Multiplicity.SIMPLE:
        src, dst = _unique_pairs(src, dst)
    table = records.nodes
    if include_isolated:
        ids = np.arange(len(table), dtype=np.int64)
    else:
        ids = np.unique(np.concatenate([src, dst]))
    src = np.searchsorted(ids, src)
    dst = np.searchsorted(ids, dst)
    directed = records.kind is EdgeKind.SHARE
    if not directed:
        src, dst = np.minimum(src, dst), np.maximum(src, dst)
    keys = table.key_array()[ids] if len(table) else np.array([], dtype=object)
    countries = table.country_array()[ids] if len(table) else np.array([], dtype="<U2")
    return Network(ids.size, src, dst, directed, multiplicity, keys, countries)


@dataclass
class TopologySummary:
    nodes: int
    edges: int
    avg_degree: float
    median_degree: int
    degree_histogram: dict = field(repr=False)
    component_count: int
    largest_component_nodes: int
    largest_component_fraction: float

    def as_dict(self):
        d = dict(self.__dict__)
        d["degree_histogram"] = {str(k): v for k, v in self.degree_histogram.items()}
        return d


def component_labels(network: Network):
    """Weak component labels (undirected projection); returns (count, labels)."""
    if network.n == 0:
        return 0, np.zeros(0, dtype=np.int32)
    adj = sparse.coo_matrix(
        (np.ones(network.num_edges, dtype=np.int8), (network.src, network.dst)),
        shape=(network.n, network.n),
    ).tocsr()
    return csgraph.connected_components(adj, directed=True, connection="weak")


def summarize(network: Network) -> TopologySummary:
    n, e = network.n, network.num_edges
    if n == 0:
        return TopologySummary(0, e, 0.0, 0, {}, 0, 0, 0.0)
    deg = network.degree
    values, counts = np.unique(deg, return_counts=True)
    # lower median keeps the value integral
    median = int(np.partition(deg, (n - 1) // 2)[(n - 1) // 2])
    n_comp, labels = component_labels(network)
    largest = int(np.bincount(labels).max())
    return TopologySummary(
        nodes=n,
        edges=e,
        avg_degree=2.0 * e / n,
        median_degree=median,
        degree_histogram={int(v): int(c) for v, c in zip(values, counts)},
        component_count=int(n_comp),
        largest_component_nodes=largest,
        largest_component_fraction=largest / n,
    )


def country_partition(network: Network, country: str) -> Network:
    """Induced subnetwork on the firms registered in ``country``."""
    if network.countries is None:
        raise ValueError("network has no country annotation")
    mask = np.asarray(network.countries) == country
    if not mask.any():
        warnings.warn(f"no firms with country {country!r}", DataWarning)
    return network.subgraph(mask)


def expand_indirect(network: Network, max_depth: int, cap: int = MAX_INDIRECT_DEPTH) -> Network:
    """Add transitive shareholding edges for paths of up to ``max_depth`` hops."""
    if not network.directed:
        raise ValueError("indirect expansion needs a directed network")
    if max_depth < 1:
        raise ValueError("max_depth must be >= 1")
    if max_depth > cap:
        raise ValueError(f"max_depth {max_depth} exceeds cap {cap}")
    base = network.simple()
    if max_depth == 1:
        return base
    n = base.n
    adj = sparse.csr_matrix(
        (np.ones(base.num_edges, dtype=np.int64), (base.src, base.dst)), shape=(n, n)
    )
    reach = adj.copy()
    power = adj
    for _ in range(max_depth - 1):
        power = power @ adj
        power.data[:] = 1
        reach = reach + power
    reach = reach.tocoo()
    keep = reach.row != reach.col
    src, dst = _unique_pairs(reach.row[keep].astype(np.int64), reach.col[keep].astype(np.int64))
    return Network(n, src, dst, True, Multiplicity.SIMPLE, base.keys, base.countries)
