import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from interfirm import infodyn as d
from interfirm.infodyn import InfoParams, InsufficientDataError
from interfirm.overlap import EdgeExistenceMatrix, YearWindow

import oracles as o

# frozen oracle values (computed by tests/oracles.py, brute force)
MI_SHIFT2 = 0.9182958340544896        # x = 00110011, y_t = x_{t-2}, u = 2
AIS_011_K2 = 0.863120568566631        # x = 011011011, k = 2
H_6_2 = 0.8112781244591328            # counts {0: 6, 1: 2}

binary = st.lists(st.integers(0, 1), min_size=12, max_size=40)


def bits(s):
    return [int(c) for c in s]


class TestEntropy:
    def test_uniform(self):
        assert d.entropy({0: 4, 1: 4}) == 1.0

    def test_degenerate(self):
        assert d.entropy({0: 8, 1: 0}) == 0.0

    def test_skewed(self):
        assert d.entropy({0: 6, 1: 2}) == pytest.approx(H_6_2, abs=1e-12)
        assert H_6_2 == pytest.approx(0.811278, abs=1e-6)

    def test_empty(self):
        with pytest.raises(ValueError):
            d.entropy({0: 0})


class TestMutualInformation:
    def test_identical(self):
        x = bits("01010101")
        assert d.mutual_information(x, x).value_bits == pytest.approx(1.0, abs=1e-12)

    def test_independent(self):
        assert d.mutual_information(bits("0011"), bits("0101")).value_bits == 0.0

    def test_shifted(self):
        x = bits("00110011")
        y = [0, 0] + x[:-2]
        r = d.mutual_information(x, y, u=2)
        assert r.value_bits == pytest.approx(MI_SHIFT2, abs=1e-12)
        assert r.n_samples == 6

    def test_too_short(self):
        with pytest.raises(InsufficientDataError) as err:
            d.mutual_information(bits("0101"), bits("0101"), u=3)
        assert err.value.available == 1

    def test_rejects_non_binary(self):
        with pytest.raises(ValueError):
            d.mutual_information([0, 2, 1], [0, 1, 1])


class TestAIS:
    def test_alternating(self):
        assert d.active_information_storage(bits("010101010"), 1).value_bits == pytest.approx(1.0, abs=1e-12)

    def test_constant(self):
        assert d.active_information_storage(bits("000000000"), 1).value_bits == 0.0

    def test_period3(self):
        v = d.active_information_storage(bits("011011011"), 2).value_bits
        assert v == pytest.approx(AIS_011_K2, abs=1e-12)

    def test_too_short(self):
        with pytest.raises(InsufficientDataError):
            d.active_information_storage(bits("0101"), k=4)


class TestTransferEntropy:
    def test_constant_source(self):
        rng = np.random.default_rng(1)
        for params in [InfoParams(k=1), InfoParams(k=2, l=2, u=2), InfoParams(k=3, tau_x=2)]:
            tgt = rng.integers(0, 2, 30)
            assert d.transfer_entropy(np.zeros(30, int), tgt, params).value_bits == 0.0

    def test_copied_full_cycle(self):
        full = bits("0001011100")  # every 3-bit pattern occurs in the source
        src, tgt = full[1:], full[:-1]
        assert all(tgt[t] == src[t - 1] for t in range(1, len(src)))
        v = d.transfer_entropy(src, tgt, InfoParams(k=1, l=1, u=1)).value_bits
        assert v == pytest.approx(1.0, abs=1e-12)
        assert o.te(src, tgt) == pytest.approx(1.0, abs=1e-12)

    def test_self_alternating(self):
        x = bits("0101010101")
        assert d.transfer_entropy(x, x, InfoParams(k=1, l=1, u=1)).value_bits == pytest.approx(0.0, abs=1e-12)

    def test_bad_params(self):
        with pytest.raises(ValueError):
            InfoParams(k=0)
        with pytest.raises(ValueError):
            InfoParams(u=-1)

    def test_too_short(self):
        with pytest.raises(InsufficientDataError) as err:
            d.transfer_entropy(bits("0101"), bits("0110"), InfoParams(k=5))
        assert err.value.available == 0


@settings(max_examples=60, deadline=None)
@given(binary, binary, st.integers(0, 3))
def test_mi_matches_oracle(x, y, u):
    n = min(len(x), len(y))
    x, y = x[:n], y[:n]
    assert d.mutual_information(x, y, u).value_bits == pytest.approx(max(o.delayed_mi(x, y, u), 0), abs=1e-12)


@settings(max_examples=60, deadline=None)
@given(binary, st.integers(1, 4), st.integers(1, 2))
def test_ais_matches_oracle(x, k, tau):
    assert d.active_information_storage(x, k, tau).value_bits == pytest.approx(max(o.ais(x, k, tau), 0), abs=1e-12)


@settings(max_examples=80, deadline=None)
@given(binary, binary, st.integers(1, 3), st.integers(1, 2), st.integers(1, 2), st.integers(1, 2), st.integers(0, 3))
def test_te_matches_oracle(y, x, k, l, tau_x, tau_y, u):
    n = min(len(x), len(y))
    x, y = x[:n], y[:n]
    p = InfoParams(k=k, l=l, tau_x=tau_x, tau_y=tau_y, u=u)
    want = o.te(y, x, k, l, tau_x, tau_y, u)
    assert d.transfer_entropy(y, x, p).value_bits == pytest.approx(max(want, 0), abs=1e-12)


@settings(max_examples=60, deadline=None)
@given(binary, binary, st.integers(1, 3), st.integers(0, 2))
def test_te_forms_agree(y, x, k, u):
    n = min(len(x), len(y))
    p = InfoParams(k=k, l=1, u=u)
    cmi = d.transfer_entropy(y[:n], x[:n], p).value_bits
    jc = d.te_joint_counts(y[:n], x[:n], p)
    assert sum(jc.counts.values()) == jc.n_samples
    assert max(d.transfer_entropy_from_counts(jc), 0.0) == pytest.approx(cmi, abs=1e-12)


def test_joint_count_marginals():
    rng = np.random.default_rng(3)
    x, y = rng.integers(0, 2, 20), rng.integers(0, 2, 20)
    jc = d.te_joint_counts(y, x, InfoParams(k=2))
    m = jc.marginal(1)
    assert sum(m.values()) == jc.n_samples
    for h, c in m.items():
        assert c == sum(v for key, v in jc.counts.items() if (key[1],) == h)


@settings(max_examples=60, deadline=None)
@given(binary)
def test_identities(x):
    # MI(x, x) = H(x)
    h = d.entropy({v: x.count(v) for v in set(x)})
    assert d.mutual_information(x, x).value_bits == pytest.approx(h, abs=1e-12)
    # AIS is MI between the embedded history and the next value
    for k in (1, 2, 3):
        hist = [sum(x[n - j] << j for j in range(k)) for n in range(k - 1, len(x) - 1)]
        nxt = x[k:]
        assert d.active_information_storage(x, k).value_bits == pytest.approx(o.mi_pairs(zip(hist, nxt)), abs=1e-12)


@settings(max_examples=60, deadline=None)
@given(binary, binary)
def test_mi_symmetric_and_nonnegative(x, y):
    n = min(len(x), len(y))
    a = d.mutual_information(x[:n], y[:n]).value_bits
    b = d.mutual_information(y[:n], x[:n]).value_bits
    assert abs(a - b) < 1e-12 and a >= 0


class TestSurrogates:
    def test_independent_large_p(self):
        x, y = bits("0011"), bits("0101")
        p = d.surrogate_p_value(lambda a, b: d.mutual_information(a, b).value_bits, x, y, 50, seed=2)
        assert p >= 0.5

    def test_identical_small_p(self):
        x = bits("01101001")
        p = d.surrogate_p_value(lambda a, b: d.mutual_information(a, b).value_bits, x, x, 99, seed=0)
        assert p <= 0.05

    def test_single_surrogate(self):
        rng = np.random.default_rng(0)
        for s in range(10):
            x, y = rng.integers(0, 2, 9), rng.integers(0, 2, 9)
            p = d.surrogate_p_value(lambda a, b: d.mutual_information(a, b).value_bits, x, y, 1, seed=s)
            assert p in (0.5, 1.0)

    def test_deterministic(self):
        x, y = bits("0110100110"), bits("0110001110")
        f = lambda a, b: d.mutual_information(a, b).value_bits
        assert d.surrogate_p_value(f, x, y, 30, seed=5) == d.surrogate_p_value(f, x, y, 30, seed=5)

    def test_validity_battery(self):
        rng = np.random.default_rng(2024)
        f = lambda a, b: d.mutual_information(a, b).value_bits
        hits = 0
        for i in range(1000):
            x, y = rng.integers(0, 2, 30), rng.integers(0, 2, 30)
            hits += d.surrogate_p_value(f, x, y, 99, seed=i) <= 0.05
        assert hits / 1000 <= 0.08


class TestFisher:
    def test_ones(self):
        assert d.fisher_combine([1.0, 1.0, 1.0]) == pytest.approx(1.0, abs=1e-15)

    @pytest.mark.parametrize("p", [0.3, 0.05, 1e-6])
    def test_single(self, p):
        assert d.fisher_combine([p]) == pytest.approx(p, rel=1e-12)

    def test_pair(self):
        got = d.fisher_combine([0.05, 0.05])
        assert got == pytest.approx(o.fisher([0.05, 0.05]), rel=1e-12)
        assert abs(got - 0.0175) <= 0.0005

    def test_zero_clamped(self):
        with pytest.warns(RuntimeWarning):
            got = d.fisher_combine([0.0, 0.5])
        assert got == pytest.approx(o.fisher([1e-12, 0.5]), rel=1e-12)

    def test_empty(self):
        with pytest.raises(ValueError):
            d.fisher_combine([])

    @settings(max_examples=50, deadline=None)
    @given(st.lists(st.floats(1e-9, 1.0), min_size=1, max_size=12), st.randoms())
    def test_permutation_invariant_and_oracle(self, ps, rnd):
        shuffled = list(ps)
        rnd.shuffle(shuffled)
        assert d.fisher_combine(ps) == d.fisher_combine(shuffled)
        assert d.fisher_combine(ps) == pytest.approx(o.fisher(ps), rel=1e-9, abs=1e-300)


def mat(key, P, S, window=None):
    P, S = np.array(bits(P), np.uint8), np.array(bits(S), np.uint8)
    window = window or YearWindow(2017 - len(P), 2016)
    return EdgeExistenceMatrix(key, window, P, S)


class TestAggregate:
    def test_identical_population(self):
        m = {(i, i + 100): mat((i, i + 100), "011010011", "001101001") for i in range(5)}
        single = d.transfer_entropy(bits("011010011"), bits("001101001"), InfoParams(k=2, u=1))
        r = d.aggregate_over_edges(m, d.TE_PS, InfoParams(k=2, u=1), n_surrogates=20)
        assert r.value_bits == pytest.approx(single.value_bits, abs=1e-12)
        assert r.population_size == 5

    def test_two_edges_average(self):
        m = {(0, 1): mat((0, 1), "01010101", "01010101"), (2, 3): mat((2, 3), "00110011", "01010101")}
        r = d.aggregate_over_edges(m, d.MI, InfoParams(k=1, u=0), n_surrogates=0)
        assert r.value_bits == pytest.approx(0.5, abs=1e-12)
        assert r.p_value is None

    def test_degenerate_counted(self):
        m = {(0, 1): mat((0, 1), "000000000", "010101010"), (2, 3): mat((2, 3), "011010011", "011010011")}
        r = d.aggregate_over_edges(m, d.MI, InfoParams(u=0), n_surrogates=10)
        assert r.degenerate == 1 and r.population_size == 2
        assert r.value_bits == pytest.approx(d.mutual_information(bits("011010011"), bits("011010011")).value_bits / 2)

    def test_no_edge_fits(self):
        m = {(0, 1): mat((0, 1), "0101", "0101")}
        with pytest.raises(InsufficientDataError):
            d.aggregate_over_edges(m, d.TE_PS, InfoParams(k=5), n_surrogates=0)
        with pytest.raises(InsufficientDataError):
            d.aggregate_over_edges({}, d.MI)

    def test_ais_columns(self):
        m = {(0, 1): mat((0, 1), "010101010", "000000000")}
        assert d.aggregate_over_edges(m, d.AIS_P, InfoParams(k=1, u=0), n_surrogates=0).value_bits == pytest.approx(1.0)
        assert d.aggregate_over_edges(m, d.AIS_S, InfoParams(k=1, u=0), n_surrogates=0).value_bits == 0.0

    def test_threads_and_strict(self):
        rng = np.random.default_rng(5)
        w = YearWindow()
        m = {}
        for i in range(300):
            P = rng.integers(0, 2, 9).astype(np.uint8)
            m[(2 * i, 2 * i + 1)] = EdgeExistenceMatrix((2 * i, 2 * i + 1), w, P, np.roll(P, 2))
        a = d.aggregate_over_edges(m, d.MI, InfoParams(u=2), n_surrogates=400, seed=3, threads=1)
        b = d.aggregate_over_edges(m, d.MI, InfoParams(u=2), n_surrogates=400, seed=3, threads=4)
        assert a == b
        assert a.p_value < 1e-6
        s = d.aggregate_over_edges(m, d.MI, InfoParams(u=2), n_surrogates=50, p_mode="strict")
        assert s.tested == 300

    def test_null_population_not_significant(self):
        rng = np.random.default_rng(11)
        w = YearWindow()
        m = {(2 * i, 2 * i + 1): EdgeExistenceMatrix((2 * i, 2 * i + 1), w, rng.integers(0, 2, 9).astype(np.uint8),
                                                        rng.integers(0, 2, 9).astype(np.uint8)) for i in range(500)}
        for measure in (d.MI, d.TE_PS):
            r = d.aggregate_over_edges(m, measure, InfoParams(k=1, u=1), n_surrogates=100, seed=1)
            assert r.p_value > 0.01

    def test_null_battery(self):
        # mid-p with uninformative edges dropped must not inflate false positives
        w = YearWindow()
        ps = []
        for trial in range(40):
            rng = np.random.default_rng(100 + trial)
            P = (rng.random((200, 9)) < 0.3).astype(np.uint8)
            S = (rng.random((200, 9)) < 0.25).astype(np.uint8)
            m = {(2 * i, 2 * i + 1): EdgeExistenceMatrix((2 * i, 2 * i + 1), w, P[i], S[i]) for i in range(200)}
            ps.append(d.aggregate_over_edges(m, d.MI, InfoParams(u=2), n_surrogates=50, seed=trial).p_value)
        assert np.mean(np.array(ps) <= 0.05) <= 0.1


def test_select_k():
    w = YearWindow()
    m = {(0, 1): EdgeExistenceMatrix((0, 1), w, np.array(bits("011011011"), np.uint8),
                                     np.array(bits("010101010"), np.uint8))}
    k, curve = d.select_k_by_ais(m, "S")
    assert k == 1 and curve[1] == pytest.approx(1.0)
    assert set(curve) == set(range(1, 9))
    k, curve = d.select_k_by_ais(m, "P")
    assert curve[k] == max(curve.values())
