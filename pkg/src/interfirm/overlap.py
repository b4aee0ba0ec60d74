"""Per-pair edge-existence matrices and yearly overlap networks."""
from __future__ import annotations

import csv
import enum
import warnings
from dataclasses import dataclass

import numpy as np

from .countries import UNKNOWN
from .graph import DataWarning, EdgeTable, Multiplicity, Network, NodeTable, ParseError


@dataclass(frozen=True)
class YearWindow:
    start: int = 2008
    end: int = 2016

    def __post_init__(self):
        if self.start > self.end:
            raise ValueError(f"empty window {self.start}-{self.end}")

    def __len__(self):
        return self.end - self.start + 1

    @property
    def years(self):
        return range(self.start, self.end + 1)

    def __contains__(self, year):
        return self.start <= year <= self.end

    @classmethod
    def parse(cls, text: str) -> "YearWindow":
        a, _, b = text.partition("-")
        return cls(int(a), int(b or a))


@dataclass(frozen=True, eq=False)
class EdgeExistenceMatrix:
    """Binary years x 2 record for one unordered firm pair.

    ``P[t]`` is 1 when the pair filed a joint patent application in year t;
    ``S[t]`` is 1 when a shareholding link between them existed at the end of
    year t (either direction).
    """

    pair: tuple
    window: YearWindow
    P: np.ndarray
    S: np.ndarray

    def __eq__(self, other):
        return (
            isinstance(other, EdgeExistenceMatrix)
            and self.pair == other.pair
            and self.window == other.window
            and np.array_equal(self.P, other.P)
            and np.array_equal(self.S, other.S)
        )

    def as_array(self):
        return np.stack([self.P, self.S], axis=1)


@dataclass
class OverlapNetwork:
    year: int
    network: Network


def _pair_index(src, dst):
    lo, hi = np.minimum(src, dst), np.maximum(src, dst)
    return lo, hi


def build_existence_matrices(patents: EdgeTable, shares: EdgeTable, window=YearWindow(),
                             pairs=None) -> dict:
    """Existence matrices keyed by canonical ``(lo, hi)`` id pairs.

    With ``pairs=None`` the scope is every pair with at least one patent and
    at least one shareholding observation inside the window. Otherwise only
    the listed pairs are built, whatever their content.
    """
    if patents.nodes is not shares.nodes:
        raise ValueError("patent and share records must share one node table")
    L = len(window)
    columns = {}
    for col, table in ((0, patents), (1, shares)):
        inside = (table.year >= window.start) & (table.year <= window.end)
        lo, hi = _pair_index(table.src[inside], table.dst[inside])
        t = table.year[inside] - window.start
        for a, b, y in zip(lo.tolist(), hi.tolist(), t.tolist()):
            columns.setdefault((a, b), [set(), set()])[col].add(y)
    if pairs is None:
        scope = sorted(k for k, (p, s) in columns.items() if p and s)
    else:
        scope = sorted({(min(a, b), max(a, b)) for a, b in pairs})
    if not scope:
        warnings.warn("existence-matrix scope is empty", DataWarning)
    out = {}
    empty = (set(), set())
    for key in scope:
        p_years, s_years = columns.get(key, empty)
        P = np.zeros(L, dtype=np.uint8)
        S = np.zeros(L, dtype=np.uint8)
        P[list(p_years)] = 1
        S[list(s_years)] = 1
        out[key] = EdgeExistenceMatrix(key, window, P, S)
    return out


def build_overlap_network(matrices: dict, year: int, nodes: NodeTable | None = None) -> OverlapNetwork:
    """Pairs with both a patent and a shareholding link in ``year``."""
    if not matrices:
        return OverlapNetwork(year, Network(0, [], [], False))
    window = next(iter(matrices.values())).window
    if year not in window:
        raise ValueError(f"year {year} outside window {window.start}-{window.end}")
    t = year - window.start
    pairs = [k for k, m in matrices.items() if m.P[t] and m.S[t]]
    ids = np.unique(np.array(pairs, dtype=np.int64).ravel()) if pairs else np.zeros(0, np.int64)
    arr = np.array(pairs, dtype=np.int64).reshape(-1, 2)
    src = np.searchsorted(ids, arr[:, 0])
    dst = np.searchsorted(ids, arr[:, 1])
    keys = countries = None
    if nodes is not None:
        keys = nodes.key_array()[ids]
        countries = nodes.country_array()[ids]
    return OverlapNetwork(year, Network(ids.size, src, dst, False, Multiplicity.SIMPLE, keys, countries))


class Scope(str, enum.Enum):
    INTRA = "intra"
    INTERNATIONAL = "international"
    UNKNOWN = "unknown"


def classify_pair(pair, countries) -> Scope:
    a, b = countries[pair[0]], countries[pair[1]]
    if a == UNKNOWN or b == UNKNOWN:
        return Scope.UNKNOWN
    return Scope.INTRA if a == b else Scope.INTERNATIONAL


def split_scope(matrices: dict, countries, mode="intra", country: str | None = None) -> dict:
    """Filter pairs by whether their two firms share a country.

    ``countries`` maps node id to code (a sequence or the node table's list).
    With ``country`` set, ``intra`` keeps pairs entirely inside that country
    and ``international`` keeps pairs with exactly one firm there. Pairs with
    an unknown country on either end are never kept.
    """
    mode = Scope(mode)
    if mode is Scope.UNKNOWN:
        return {k: m for k, m in matrices.items() if classify_pair(k, countries) is Scope.UNKNOWN}
    out = {}
    for k, m in matrices.items():
        if classify_pair(k, countries) is not mode:
            continue
        if country is not None:
            inside = (countries[k[0]] == country) + (countries[k[1]] == country)
            if (mode is Scope.INTRA and inside != 2) or (mode is Scope.INTERNATIONAL and inside != 1):
                continue
        out[k] = m
    return out


def partition_scopes(matrices: dict, countries) -> dict:
    """Split into disjoint intra / international / unknown buckets."""
    buckets = {s: {} for s in Scope}
    for k, m in matrices.items():
        buckets[classify_pair(k, countries)][k] = m
    return buckets


def write_existence_csv(path, matrices: dict, nodes: NodeTable):
    keys = nodes.keys
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["src", "dst", "year", "P", "S"])
        for (a, b), m in sorted(matrices.items()):
            for t, year in enumerate(m.window.years):
                w.writerow([keys[a], keys[b], year, int(m.P[t]), int(m.S[t])])


def read_existence_csv(path, nodes: NodeTable | None = None):
    """Read a matrix dump; returns ``(matrices, nodes)``."""
    nodes = NodeTable() if nodes is None else nodes
    cells: dict = {}
    years = set()
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["src", "dst", "year", "P", "S"]:
            raise ParseError(path, 1, "expected header 'src,dst,year,P,S'")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                a, b, y, p, s = row
                y, p, s = int(y), int(p), int(s)
                if p not in (0, 1) or s not in (0, 1):
                    raise ValueError
            except ValueError:
                raise ParseError(path, lineno, f"bad row {row!r}") from None
            i, j = nodes.intern(a.strip()), nodes.intern(b.strip())
            cells.setdefault((min(i, j), max(i, j)), {})[y] = (p, s)
            years.add(y)
    if not cells:
        return {}, nodes
    window = YearWindow(min(years), max(years))
    out = {}
    for key in sorted(cells):
        P = np.zeros(len(window), dtype=np.uint8)
        S = np.zeros(len(window), dtype=np.uint8)
        for y, (p, s) in cells[key].items():
            P[y - window.start] = p
            S[y - window.start] = s
        out[key] = EdgeExistenceMatrix(key, window, P, S)
    return out, nodes
