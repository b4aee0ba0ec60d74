import numpy as np
import pytest

from interfirm import graph, overlap, synth
from interfirm.synth import CoupledGenParams, ShareGenParams


def matrices(data, pairs=None):
    return overlap.build_existence_matrices(data.patents, data.shares, overlap.YearWindow(), pairs)


class TestCoupled:
    def test_no_conversion_no_noise(self):
        data = synth.gen_coupled(CoupledGenParams(n_pairs=300, q_convert=0.0, p_noise_share=0.0, seed=1))
        assert len(data.shares) == 0 and len(data.patents) > 0
        assert data.truth["converted_pairs"] == []

    def test_zero_delay_full_conversion(self):
        data = synth.gen_coupled(CoupledGenParams(n_pairs=200, d_delay=0, q_convert=1.0, p_noise_share=0.0, seed=2))
        pairs = [(2 * i, 2 * i + 1) for i in range(200)]
        m = matrices(data, pairs)
        for mat in m.values():
            P, S = mat.P.astype(bool), mat.S.astype(bool)
            if P.any():
                first = np.argmax(P)
                assert S[first:].all() and not S[:first].any()
            else:
                assert not S.any()

    def test_truth_consistent(self):
        params = CoupledGenParams(n_pairs=500, d_delay=3, seed=5)
        data = synth.gen_coupled(params)
        lookup = data.nodes.lookup
        m = matrices(data, [(lookup(t["src"]), lookup(t["dst"])) for t in data.truth["converted_pairs"]])
        assert data.truth["d_delay"] == 3
        for t in data.truth["converted_pairs"]:
            key = tuple(sorted((lookup(t["src"]), lookup(t["dst"]))))
            start = t["share_start"] - 2008
            assert m[key].S[start:].all()
            assert min(t["conversion_years"]) + 3 == t["share_start"]

    def test_deterministic(self):
        a = synth.gen_coupled(CoupledGenParams(n_pairs=400, seed=9))
        b = synth.gen_coupled(CoupledGenParams(n_pairs=400, seed=9))
        assert np.array_equal(a.shares.src, b.shares.src) and np.array_equal(a.shares.year, b.shares.year)
        assert np.array_equal(a.patents.year, b.patents.year)
        assert a.truth == b.truth and a.nodes.countries == b.nodes.countries

    def test_bad_params(self):
        with pytest.raises(ValueError):
            CoupledGenParams(p_patent=1.5)
        with pytest.raises(ValueError):
            CoupledGenParams(d_delay=-1)


class TestShareholding:
    def test_all_dyads(self):
        net = synth.gen_shareholding(ShareGenParams(n_nodes=1000, component_mix=1.0, seed=1))
        s = graph.summarize(net)
        assert s.component_count == 500
        assert s.largest_component_fraction == pytest.approx(2 / 1000)

    def test_single_country(self):
        net = synth.gen_shareholding(ShareGenParams(n_nodes=2000, n_countries=1, seed=1))
        sub = graph.country_partition(net, net.countries[0])
        assert sub.n == net.n and sub.edge_set() == net.edge_set()

    def test_default_shape(self):
        net = synth.gen_shareholding(ShareGenParams(seed=0))
        s = graph.summarize(net)
        assert s.nodes == 100_000
        assert s.degree_histogram.get(1, 0) / s.nodes > 0.5
        assert 0.05 < s.largest_component_fraction < 0.5

    @pytest.mark.parametrize("params", [
        ShareGenParams(n_nodes=3000, seed=3),
        ShareGenParams(n_nodes=3000, edges_per_node=3, component_mix=0.2, assortativity=0.7, seed=4),
    ])
    def test_simple_and_pure(self, params):
        a = synth.gen_shareholding(params)
        b = synth.gen_shareholding(params)
        assert np.array_equal(a.src, b.src) and np.array_equal(a.dst, b.dst)
        assert np.array_equal(a.countries, b.countries)
        assert not (a.src == a.dst).any()
        assert len(a.edge_set()) == a.num_edges

    def test_assortativity_raises_intra_share(self):
        def intra(params):
            net = synth.gen_shareholding(params)
            return np.mean(net.countries[net.src] == net.countries[net.dst])
        base = ShareGenParams(n_nodes=20_000, n_countries=10, country_weights="uniform", seed=6)
        mixed = ShareGenParams(n_nodes=20_000, n_countries=10, country_weights="uniform", assortativity=0.8, seed=6)
        assert intra(mixed) > intra(base) + 0.3

    def test_bad_params(self):
        with pytest.raises(ValueError):
            ShareGenParams(n_nodes=1)
        with pytest.raises(ValueError):
            ShareGenParams(country_weights="flat")
