"""The compiled and numpy backends must agree bit for bit."""
import os
import subprocess
import sys

import numpy as np
import pytest

from interfirm import _fallback, cascade, graph, kernels

compiled = pytest.importorskip("interfirm._kernels")
BACKENDS = [_fallback, compiled]


@pytest.mark.parametrize("impl", BACKENDS, ids=lambda m: m.BACKEND)
def test_splitmix_reference(impl):
    # first two outputs of SplitMix64 started from state 0
    assert impl.mix64(0) == 0xE220A8397B1DCDAF
    assert impl.mix64(0x9E3779B97F4A7C15) == 0x6E789E6AA1B965F4


def test_streams_agree():
    for seed in (0, 1, 2**63 + 5, 2**64 - 1):
        for t in (0, 1, 49):
            key = _fallback.stream_key(seed, t)
            assert compiled.stream_key(seed, t) == key
            idx = np.arange(1000, dtype=np.uint64)
            u = _fallback.uniforms(key, idx)
            assert np.array_equal(u, compiled.uniforms(key, idx))
            assert ((u >= 0) & (u < 1)).all()


def test_uniforms_look_uniform():
    u = kernels.uniforms(kernels.stream_key(7, 1), np.arange(200_000, dtype=np.uint64))
    assert abs(u.mean() - 0.5) < 0.005
    assert np.histogram(u, bins=10, range=(0, 1))[0].min() > 19_000


def test_cmi_rows_agree():
    rng = np.random.default_rng(0)
    for na, nb, nc, n in [(2, 2, 1, 9), (8, 2, 32, 40), (2, 2, 4, 1), (4, 2, 2, 0)]:
        a = rng.integers(0, na, (50, n))
        b = rng.integers(0, nb, (50, n))
        c = rng.integers(0, nc, (50, n))
        x = _fallback.cmi_rows(a, b, c, na, nb, nc)
        y = compiled.cmi_rows(a, b, c, na, nb, nc)
        assert np.allclose(x, y, rtol=0, atol=1e-12)


def test_cascade_step_agree():
    rng = np.random.default_rng(1)
    n = 500
    src = rng.integers(0, n, 2000)
    dst = rng.integers(0, n, 2000)
    keep = src != dst
    net = graph.Network(n, src[keep], dst[keep], True).simple()
    indptr, indices = net.out_csr
    sp = cascade.derive_step_params(0.7, 1.0, 10)
    states = []
    for impl in BACKENDS:
        p = np.zeros(n)
        failed = cascade.init_shock(n, 0.1, 3)
        newly = np.flatnonzero(failed).astype(np.int64)
        trace = []
        for t in range(1, 11):
            newly = impl.cascade_step(indptr, indices, net.in_degree, p, failed, newly,
                                      sp.k_step, sp.r_step, impl.stream_key(3, t))
            trace.append((p.copy(), failed.copy(), newly.copy()))
        states.append(trace)
    for (p1, f1, n1), (p2, f2, n2) in zip(*states):
        assert np.array_equal(p1, p2) and np.array_equal(f1, f2) and np.array_equal(n1, n2)


def _run_digest(pure):
    code = (
        "import numpy as np, hashlib\n"
        "from interfirm import cascade, synth, kernels\n"
        "net = synth.gen_shareholding(synth.ShareGenParams(n_nodes=5000, seed=2))\n"
        "r = cascade.run(net, cascade.CascadeParams(0.8, 1.0, 20, 0.1, 9), record=True)\n"
        "print(kernels.BACKEND, hashlib.sha256(r.matrix.rows.tobytes()).hexdigest())\n"
    )
    env = dict(os.environ)
    env.pop("INTERFIRM_PURE", None)
    if pure:
        env["INTERFIRM_PURE"] = "1"
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    return out.stdout.split()


def test_env_switch_and_identical_runs():
    b1, h1 = _run_digest(pure=True)
    b2, h2 = _run_digest(pure=False)
    assert b1 == "numpy" and b2 == "cython"
    assert h1 == h2
