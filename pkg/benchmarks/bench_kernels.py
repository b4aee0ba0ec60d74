"""Time the compiled kernels against the numpy fallback.

    python3 benchmarks/bench_kernels.py [--repeat 5] [--nodes 100000]

Each case is timed with both backends on identical inputs; outputs are
checked for equality before timings are reported.
"""
import argparse
import contextlib
import timeit

import numpy as np

from interfirm import _fallback, cascade, infodyn, kernels, overlap, synth
from interfirm.cascade import CascadeParams
from interfirm.infodyn import InfoParams

try:
    from interfirm import _kernels
except ImportError:
    _kernels = None

NAMES = ("mix64", "stream_key", "uniforms", "cascade_step", "cmi_rows")


@contextlib.contextmanager
def backend(impl):
    saved = {n: getattr(kernels, n) for n in NAMES}
    for n in NAMES:
        setattr(kernels, n, getattr(impl, n))
    try:
        yield
    finally:
        for n, f in saved.items():
            setattr(kernels, n, f)


def cases(n_nodes):
    rng = np.random.default_rng(0)
    a = rng.integers(0, 32, (20_000, 9))
    b = rng.integers(0, 2, (20_000, 9))
    c = rng.integers(0, 32, (20_000, 9))

    net = synth.gen_shareholding(synth.ShareGenParams(n_nodes=n_nodes, seed=1))
    indptr, indices = net.out_csr
    sp = cascade.derive_step_params(0.8, 1.0, 50)
    shock = cascade.init_shock(net.n, 0.1, 1)

    def step(impl):
        p = np.zeros(net.n)
        failed = shock.copy()
        newly = np.flatnonzero(failed).astype(np.int64)
        for t in range(1, 11):
            newly = impl.cascade_step(indptr, indices, net.in_degree, p, failed, newly,
                                      sp.k_step, sp.r_step, impl.stream_key(1, t))
        return failed

    data = synth.gen_coupled(synth.CoupledGenParams(n_pairs=2000, seed=7))
    mats = overlap.build_existence_matrices(data.patents, data.shares, overlap.YearWindow())

    return {
        "cmi_rows 20k x 9": lambda impl: impl.cmi_rows(a, b, c, 32, 2, 32),
        f"cascade_step x10 ({net.n} nodes)": step,
        f"cascade run T=50 ({net.n} nodes)": lambda impl: _with(
            impl, lambda: cascade.run(net, CascadeParams(0.8, 1.0, 50, 0.1, 1)).metrics.mean_downtime),
        "TE aggregate, 100 surrogates": lambda impl: _with(
            impl, lambda: infodyn.aggregate_over_edges(mats, infodyn.TE_PS, InfoParams(k=3, u=2),
                                                       n_surrogates=100, seed=1).p_value),
    }


def _with(impl, fn):
    with backend(impl):
        return fn()


def _same(x, y):
    if isinstance(x, np.ndarray):
        return np.array_equal(x, y) or np.allclose(x, y, rtol=0, atol=1e-12)
    return x == y


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--nodes", type=int, default=100_000)
    args = ap.parse_args()
    impls = [_fallback] + ([_kernels] if _kernels is not None else [])
    if _kernels is None:
        print("compiled extension not built; timing the numpy backend only")
    print(f"{'case':40s}" + "".join(f"{m.BACKEND:>12s}" for m in impls) + f"{'speedup':>10s}")
    for name, fn in cases(args.nodes).items():
        outs = [fn(m) for m in impls]
        assert all(_same(outs[0], o) for o in outs[1:]), f"backends disagree on {name}"
        best = [min(timeit.repeat(lambda: fn(m), number=1, repeat=args.repeat)) for m in impls]
        speed = f"{best[0] / best[-1]:9.1f}x" if len(best) > 1 else ""
        print(f"{name:40s}" + "".join(f"{t * 1e3:10.2f}ms" for t in best) + speed)


if __name__ == "__main__":
    main()
