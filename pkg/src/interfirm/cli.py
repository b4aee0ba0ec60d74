"""Command-line entry point: ``interfirm <command> [options]``.

Every command writes its outputs plus a ``manifest.json`` into ``--out``.
The manifest holds the resolved configuration, so ``interfirm rerun`` can
reproduce the outputs byte for byte.

Exit codes: 0 success, 2 usage or configuration error, 3 data or
precondition error.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import json
import os
import sys
import time
import warnings
from pathlib import Path

import numpy as np
from scipy import stats

from . import __version__, cascade, graph, infodyn, kernels, overlap, synth
from .countries import TOP20

EXIT_USAGE = 2
EXIT_DATA = 3


class UsageError(Exception):
    pass


# ---------------------------------------------------------------------------
# helpers


def _sha256(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()


def _int_range(text):
    """``"0..6"`` or ``"0,2,4"`` or ``"3"`` -> list of ints."""
    out = []
    for part in text.split(","):
        part = part.strip()
        if ".." in part:
            a, b = part.split("..")
            out.extend(range(int(a), int(b) + 1))
        elif part:
            out.append(int(part))
    if not out:
        raise UsageError(f"empty integer list {text!r}")
    return out


def _grid(text):
    """``"0.2:1.0:0.2"`` (inclusive) or ``"0.2,0.4"`` -> list of floats."""
    if ":" in text:
        a, b, s = (float(v) for v in text.split(":"))
        if s <= 0:
            raise UsageError(f"grid step must be positive in {text!r}")
        n = int(np.floor((b - a) / s + 1e-9)) + 1
        return [round(a + i * s, 10) for i in range(n)]
    vals = [float(v) for v in text.split(",") if v.strip()]
    if not vals:
        raise UsageError(f"empty grid {text!r}")
    return vals


def _window(text):
    if text in (None, "", "all"):
        return None
    w = overlap.YearWindow.parse(text)
    return (w.start, w.end)


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _write_csv(path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([_fmt(v) for v in r])


class Run:
    """Tracks inputs, outputs and extras of one command for its manifest."""

    def __init__(self, args):
        self.args = args
        self.out = Path(args.out)
        self.out.mkdir(parents=True, exist_ok=True)
        self.inputs = {}
        self.outputs = []
        self.extra = {}
        self.t0 = time.perf_counter()

    def input(self, path):
        if path:
            self.inputs[str(path)] = _sha256(path)
        return path

    def path(self, name):
        self.outputs.append(name)
        return self.out / name

    def finish(self):
        config = {k: v for k, v in vars(self.args).items() if k != "func"}
        manifest = {
            "tool": "interfirm",
            "version": __version__,
            "backend": kernels.BACKEND,
            "command": config.get("command"),
            "argv": self.args._argv,
            "config": config,
            "seeds": {"seed": self.args.seed},
            "inputs": self.inputs,
            "outputs": {name: _sha256(self.out / name) for name in self.outputs},
            "extra": self.extra,
            "timings": {"wall_seconds": round(time.perf_counter() - self.t0, 6)},
        }
        manifest["config"].pop("_argv", None)
        with open(self.out / "manifest.json", "w", encoding="utf-8") as fh:
            json.dump(manifest, fh, indent=2, sort_keys=True)
            fh.write("\n")


# ---------------------------------------------------------------------------
# commands


def cmd_gen(args):
    run = Run(args)
    if args.what == "coupled":
        params = synth.CoupledGenParams(
            n_pairs=args.pairs, years=overlap.YearWindow.parse(args.window),
            p_patent=args.p_patent, q_convert=args.q_convert, d_delay=args.delay,
            p_noise_share=args.noise, n_countries=args.countries, seed=args.seed,
        )
        data = synth.gen_coupled(params)
        graph.write_edges(run.path("patents.csv"), data.patents)
        graph.write_edges(run.path("shares.csv"), data.shares)
        graph.write_nodes(run.path("nodes.csv"), data.nodes)
        truth = data.truth
    else:
        params = synth.ShareGenParams(
            n_nodes=args.nodes, component_mix=args.mix, edges_per_node=args.m,
            attachment_exponent=args.exponent, new_root_prob=args.root_prob,
            n_countries=args.countries, country_weights=args.weights,
            assortativity=args.assortativity, seed=args.seed,
        )
        net = synth.gen_shareholding(params)
        with open(run.path("shares.csv"), "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["src", "dst", "year"])
            keys = net.keys
            for s, d in zip(net.src.tolist(), net.dst.tolist()):
                w.writerow([keys[s], keys[d], args.year])
        _write_csv(run.path("nodes.csv"), ["id", "country"],
                   zip(net.keys.tolist(), net.countries.tolist()))
        from dataclasses import asdict
        truth = {"generator": "shareholding", "params": asdict(params),
                 "nodes": net.n, "edges": net.num_edges}
    with open(run.path("truth.json"), "w", encoding="utf-8") as fh:
        json.dump(truth, fh, indent=1, sort_keys=True)
        fh.write("\n")
    run.finish()


def _load_network(run, args, kind):
    nodes = None
    if args.nodes_file:
        nodes = graph.load_nodes(run.input(args.nodes_file))
    records = graph.load_edges(run.input(args.edges), kind, nodes, window=_window(args.window),
                               max_malformed=args.max_malformed)
    run.extra["records"] = {"kept": len(records), "self_loops": records.dropped_self_loops,
                            "malformed": records.malformed, "out_of_window": records.out_of_window}
    years = None
    if args.years:
        w = overlap.YearWindow.parse(args.years)
        years = (w.start, w.end)
    multiplicity = graph.Multiplicity.MULTI if getattr(args, "multigraph", False) else graph.Multiplicity.SIMPLE
    net = graph.build_network(records, years, multiplicity,
                              include_isolated=args.include_isolated or bool(args.nodes_file))
    if args.expand_depth > 1:
        net = graph.expand_indirect(net, args.expand_depth)
    return net


def cmd_build(args):
    run = Run(args)
    net = _load_network(run, args, args.kind)
    if args.country:
        net = graph.country_partition(net, args.country)
    summary = graph.summarize(net)
    with open(run.path("summary.json"), "w", encoding="utf-8") as fh:
        json.dump(summary.as_dict(), fh, indent=1, sort_keys=True)
        fh.write("\n")
    _write_csv(run.path("degree_histogram.csv"), ["degree", "count"],
               sorted(summary.degree_histogram.items()))
    _write_csv(run.path("network.csv"), ["src", "dst"],
               ((net.key(s), net.key(d)) for s, d in zip(net.src.tolist(), net.dst.tolist())))
    run.finish()


def _load_matrices(run, args):
    nodes = graph.load_nodes(run.input(args.nodes_file)) if args.nodes_file else graph.NodeTable()
    if getattr(args, "existence", None):
        matrices, nodes = overlap.read_existence_csv(run.input(args.existence), nodes)
        return matrices, nodes
    if not (args.patents and args.shares):
        raise UsageError("need --patents and --shares, or --existence")
    window = overlap.YearWindow.parse(args.window)
    patents = graph.load_edges(run.input(args.patents), "patent", nodes, window=None,
                               max_malformed=args.max_malformed)
    shares = graph.load_edges(run.input(args.shares), "share", nodes, window=None,
                              max_malformed=args.max_malformed)
    pairs = None
    if args.pairs:
        pairs = []
        with open(run.input(args.pairs), newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            next(reader, None)
            for row in reader:
                if row:
                    pairs.append((nodes.intern(row[0].strip()), nodes.intern(row[1].strip())))
    return overlap.build_existence_matrices(patents, shares, window, pairs), nodes


def cmd_overlap(args):
    run = Run(args)
    matrices, nodes = _load_matrices(run, args)
    overlap.write_existence_csv(run.path("existence.csv"), matrices, nodes)
    rows = []
    if matrices:
        window = next(iter(matrices.values())).window
        for year in window.years:
            net = overlap.build_overlap_network(matrices, year, nodes).network
            rows.append((year, net.n, net.num_edges))
    _write_csv(run.path("overlap.csv"), ["year", "nodes", "edges"], rows)
    run.extra["pairs"] = len(matrices)
    run.finish()


_MEASURE_ALIASES = {
    "mi": [infodyn.MI],
    "ais": [infodyn.AIS_P, infodyn.AIS_S],
    "ais-p": [infodyn.AIS_P],
    "ais-s": [infodyn.AIS_S],
    "te": [infodyn.TE_PS, infodyn.TE_SP],
    "te-ps": [infodyn.TE_PS],
    "te-sp": [infodyn.TE_SP],
}


def _scopes(args, matrices, nodes):
    if not args.split:
        return [(None, matrices)]
    countries = nodes.countries
    out = []
    for item in args.split.split(","):
        item = item.strip()
        if item == "all":
            out.append((item, matrices))
        elif item in ("intra", "international", "unknown"):
            out.append((item, overlap.split_scope(matrices, countries, item)))
        elif item.startswith("country:"):
            _, code, mode = (item.split(":") + ["intra"])[:3]
            out.append((item, overlap.split_scope(matrices, countries, mode, code.upper())))
        else:
            raise UsageError(f"unknown scope {item!r}")
    return out


def cmd_infodyn(args):
    run = Run(args)
    matrices, nodes = _load_matrices(run, args)
    measures = []
    for m in args.measure.split(","):
        m = m.strip().lower()
        if m not in _MEASURE_ALIASES:
            raise UsageError(f"unknown measure {m!r}")
        measures.extend(x for x in _MEASURE_ALIASES[m] if x not in measures)
    delays = _int_range(args.delays)
    common = dict(n_surrogates=args.surrogates, seed=args.seed, threads=args.threads,
                  p_mode=args.p_mode, names=nodes.keys)
    header = ["measure", "u", "k", "l", "tau_x", "tau_y", "value_bits", "p_combined",
              "population", "degenerate"]
    rows = []
    chosen = {}
    for scope, subset in _scopes(args, matrices, nodes):
        for measure in measures:
            if measure == infodyn.MI:
                plans = [infodyn.InfoParams(k=1, l=1, u=u) for u in delays]
            elif measure in (infodyn.AIS_P, infodyn.AIS_S):
                ks = list(range(1, 9)) if args.k == "auto-ais" else _int_range(args.k)
                plans = [infodyn.InfoParams(k=k, tau_x=args.tau_x, u=0) for k in ks]
            else:
                if args.k == "auto-ais":
                    target = "S" if measure == infodyn.TE_PS else "P"
                    k, curve = infodyn.select_k_by_ais(subset, target, tau=args.tau_x)
                    chosen[f"{scope or 'all'}:{measure}"] = {"k": k, "ais_curve": curve}
                else:
                    ks = _int_range(args.k)
                    if len(ks) != 1:
                        raise UsageError("transfer entropy takes a single --k or auto-ais")
                    k = ks[0]
                plans = [infodyn.InfoParams(k=k, l=args.l, tau_x=args.tau_x, tau_y=args.tau_y, u=u)
                         for u in delays]
            for p in plans:
                res = infodyn.aggregate_over_edges(subset, measure, p, **common)
                row = [measure, p.u, p.k, p.l, p.tau_x, p.tau_y, res.value_bits, res.p_value,
                       res.population_size, res.degenerate]
                rows.append(row if scope is None else [scope] + row)
    if args.split:
        header = ["scope"] + header
    _write_csv(run.path("results.csv"), header, rows)
    run.extra["pairs"] = len(matrices)
    if chosen:
        run.extra["chosen_k"] = {k: {"k": v["k"], "ais_curve": {str(a): b for a, b in v["ais_curve"].items()}}
                                 for k, v in chosen.items()}
    run.finish()


SWEEP_HEADER = ["alpha", "gamma", "replicate", "seed", "mean_downtime", "failure_proportion"]


def cmd_cascade(args):
    if args.mode == "country" and not args.nodes_file:
        raise UsageError("country mode needs --nodes with country codes")
    run = Run(args)
    net = _load_network(run, args, "share")
    if args.mode == "run":
        params = cascade.CascadeParams(args.alpha, args.gamma, args.T, args.shock, args.seed)
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            res = cascade.run(net, params, record=args.dump_fmx, bit_budget=args.bit_budget)
        for w in caught:
            print(f"warning: {w.message}", file=sys.stderr)
            run.extra.setdefault("warnings", []).append(str(w.message))
        m = res.metrics
        _write_csv(run.path("run.csv"), SWEEP_HEADER,
                   [(float(args.alpha), float(args.gamma), 0, args.seed, m.mean_downtime, m.failure_proportion)])
        _write_csv(run.path("steps.csv"), ["t", "new_failures", "failed_total"],
                   ((t + 1, int(a), int(b)) for t, (a, b) in enumerate(zip(m.new_failures, res.failed_per_step))))
        if res.matrix is not None:
            res.matrix.write(run.path("failure.fmx"))
    elif args.mode == "sweep":
        result = cascade.sweep(net, _grid(args.alphas), _grid(args.gammas), args.T, args.replicates,
                               args.seed, args.shock, args.threads)
        _write_csv(run.path("sweep.csv"), SWEEP_HEADER,
                   ((r.alpha, r.gamma, r.replicate, r.seed, r.mean_downtime, r.failure_proportion)
                    for r in result.rows))
        _write_csv(run.path("cells.csv"),
                   ["alpha", "gamma", "n", "mean_downtime", "downtime_se", "failure_proportion", "failure_se"],
                   ((c.alpha, c.gamma, c.n, c.mean_downtime, c.downtime_se, c.failure_proportion, c.failure_se)
                    for c in result.cells()))
    else:
        codes = [c.strip().upper() for c in args.countries.split(",") if c.strip()]
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", graph.DataWarning)
            nets = {c: graph.country_partition(net, c) for c in codes}
        params = cascade.CascadeParams(args.alpha, args.gamma, args.T, args.shock, args.seed)
        result = cascade.country_sweep(nets, params, args.replicates, args.threads)
        _write_csv(run.path("countries.csv"), ["country", "nodes", "edges", "mean_downtime", "failure_proportion"],
                   ((r.country, r.nodes, r.edges, r.mean_downtime, r.failure_proportion) for r in result))
    run.finish()


def _read_csv(path):
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


def cmd_report(args):
    run = Run(args)
    lines = ["# interfirm report", ""]
    found = False
    for d in args.inputs:
        d = Path(d)
        res = d / "results.csv"
        if res.exists():
            found = True
            rows = _read_csv(run.input(res))
            lines += [f"## information dynamics ({res})", ""]
            groups = {}
            for r in rows:
                groups.setdefault((r.get("scope", ""), r["measure"]), []).append(r)
            for (scope, measure), rs in groups.items():
                key = "k" if measure.startswith("AIS") else "u"
                best = max(rs, key=lambda r: float(r["value_bits"]))
                label = f"{scope}/{measure}" if scope else measure
                curve = ", ".join(f"{key}={r[key]}: {float(r['value_bits']):.4f}" for r in rs)
                p = f"{float(best['p_combined']):.3g}" if best["p_combined"] else "n/a"
                lines.append(f"- {label}: max {float(best['value_bits']):.4f} bits at {key}={best[key]} "
                             f"(p={p}); {curve}")
            lines.append("")
        sw = d / "sweep.csv"
        if sw.exists():
            found = True
            rows = _read_csv(run.input(sw))
            result = cascade.SweepResult([
                cascade.SweepRow(float(r["alpha"]), float(r["gamma"]), int(r["replicate"]), int(r["seed"]),
                                 float(r["mean_downtime"]), float(r["failure_proportion"])) for r in rows])
            cells = result.cells()
            _write_csv(run.path("cells.csv"),
                       ["alpha", "gamma", "n", "mean_downtime", "downtime_se", "failure_proportion", "failure_se"],
                       ((c.alpha, c.gamma, c.n, c.mean_downtime, c.downtime_se, c.failure_proportion, c.failure_se)
                        for c in cells))
            lines += [f"## cascade sweep ({sw})", "", "| alpha | gamma | n | mean downtime | failure proportion |",
                      "|---|---|---|---|---|"]
            for c in cells:
                lines.append(f"| {c.alpha:g} | {c.gamma:g} | {c.n} | {c.mean_downtime:.5f} "
                             f"| {c.failure_proportion:.5f} |")
            lines.append("")
        co = d / "countries.csv"
        if co.exists():
            found = True
            rows = _read_csv(run.input(co))
            tau = [float(r["mean_downtime"]) for r in rows]
            phi = [float(r["failure_proportion"]) for r in rows]
            lines += [f"## country cascades ({co})", ""]
            if len(rows) > 2:
                rho = stats.spearmanr(tau, phi).statistic
                lines += [f"Spearman rank correlation of the two metrics: {rho:.4f}", ""]
            lines += ["| rank | country | nodes | edges | mean downtime | failure proportion |",
                      "|---|---|---|---|---|---|"]
            for i, r in enumerate(rows, 1):
                lines.append(f"| {i} | {r['country']} | {r['nodes']} | {r['edges']} "
                             f"| {float(r['mean_downtime']):.5f} | {float(r['failure_proportion']):.5f} |")
            lines.append("")
    if not found:
        raise FileNotFoundError("no results.csv, sweep.csv or countries.csv in the inputs")
    with open(run.path("report.md"), "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines))
    run.finish()


COMMANDS = {
    "gen": cmd_gen,
    "build": cmd_build,
    "overlap": cmd_overlap,
    "infodyn": cmd_infodyn,
    "cascade": cmd_cascade,
    "report": cmd_report,
}


# ---------------------------------------------------------------------------
# parser


def _parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--threads", type=int, default=os.cpu_count() or 1)
    common.add_argument("--out", help="output directory (required)")
    common.add_argument("--config", help="flat 'key = value' file; flags take precedence")

    ingest = argparse.ArgumentParser(add_help=False)
    ingest.add_argument("--max-malformed", type=int, default=0,
                        help="tolerated malformed rows before aborting")

    net = argparse.ArgumentParser(add_help=False, parents=[ingest])
    net.add_argument("--edges", help="src,dst,year CSV")
    net.add_argument("--nodes", dest="nodes_file", help="id,country CSV")
    net.add_argument("--window", default="all", help="load filter, e.g. 2008-2016, or 'all'")
    net.add_argument("--years", help="build filter: a year or an inclusive range")
    net.add_argument("--include-isolated", action="store_true")
    net.add_argument("--expand-depth", type=int, default=1, help="indirect shareholding hops (1 = off)")

    pairs = argparse.ArgumentParser(add_help=False, parents=[ingest])
    pairs.add_argument("--patents")
    pairs.add_argument("--shares")
    pairs.add_argument("--nodes", dest="nodes_file")
    pairs.add_argument("--window", default="2008-2016")
    pairs.add_argument("--pairs", help="explicit pair list CSV (src,dst); default: observed pairs")

    p = argparse.ArgumentParser(prog="interfirm", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen", help="synthetic data")
    gsub = gen.add_subparsers(dest="what", required=True)
    gc = gsub.add_parser("coupled", parents=[common], help="two-layer records with planted delay")
    gc.add_argument("--pairs", type=int, default=5000)
    gc.add_argument("--delay", type=int, default=4)
    gc.add_argument("--p-patent", type=float, default=0.3)
    gc.add_argument("--q-convert", type=float, default=0.6)
    gc.add_argument("--noise", type=float, default=0.02)
    gc.add_argument("--window", default="2008-2016")
    gc.add_argument("--countries", type=int, default=5)
    gs = gsub.add_parser("shareholding", parents=[common], help="directed ownership network")
    gs.add_argument("--nodes", type=int, default=100_000)
    gs.add_argument("--mix", type=float, default=0.6, help="fraction of nodes in isolated dyads")
    gs.add_argument("--m", type=int, default=1, help="edges per grown node")
    gs.add_argument("--exponent", type=float, default=1.0)
    gs.add_argument("--root-prob", type=float, default=0.05)
    gs.add_argument("--countries", type=int, default=20)
    gs.add_argument("--weights", choices=["zipf", "uniform"], default="zipf")
    gs.add_argument("--assortativity", type=float, default=0.0)
    gs.add_argument("--year", type=int, default=2016)

    b = sub.add_parser("build", parents=[common, net], help="build and summarize a network")
    b.add_argument("--kind", choices=["patent", "share"], default="share")
    b.add_argument("--multigraph", action="store_true")
    b.add_argument("--country", help="restrict to one country's firms")

    o = sub.add_parser("overlap", parents=[common, pairs], help="existence matrices and overlap networks")
    o.add_argument("--existence", help=argparse.SUPPRESS)

    i = sub.add_parser("infodyn", parents=[common, pairs], help="MI / AIS / TE over edge populations")
    i.add_argument("--existence", help="existence-matrix CSV instead of raw records")
    i.add_argument("--measure", default="mi", help="comma list of mi, ais, ais-p, ais-s, te, te-ps, te-sp")
    i.add_argument("--delays", default="0..6")
    i.add_argument("--k", default="5", help="history length, list/range, or auto-ais")
    i.add_argument("--l", type=int, default=1)
    i.add_argument("--tau-x", type=int, default=1)
    i.add_argument("--tau-y", type=int, default=1)
    i.add_argument("--surrogates", type=int, default=infodyn.DEFAULT_SURROGATES)
    i.add_argument("--p-mode", choices=["mid", "strict"], default="mid")
    i.add_argument("--split", help="comma list of all, intra, international, unknown, country:XX[:intra|international]")

    c = sub.add_parser("cascade", parents=[common, net], help="cascading failure simulation")
    c.add_argument("--mode", choices=["run", "sweep", "country"], default="run")
    c.add_argument("--alpha", type=float, default=0.6)
    c.add_argument("--gamma", type=float, default=1.0)
    c.add_argument("--alphas", default="0.2:1.0:0.2")
    c.add_argument("--gammas", default="1:5:1")
    c.add_argument("--T", type=int, default=cascade.DEFAULT_T)
    c.add_argument("--shock", type=float, default=cascade.DEFAULT_SHOCK)
    c.add_argument("--replicates", type=int, default=1)
    c.add_argument("--countries", default=",".join(TOP20))
    c.add_argument("--dump-fmx", action="store_true", help="write the bit-packed failure matrix")
    c.add_argument("--bit-budget", type=int, default=cascade.DEFAULT_BIT_BUDGET)

    r = sub.add_parser("report", parents=[common], help="summarize result directories")
    r.add_argument("inputs", nargs="+", help="directories holding results/sweep/countries CSVs")

    rr = sub.add_parser("rerun", help="repeat a command from its manifest")
    rr.add_argument("manifest")
    rr.add_argument("--out", required=True)
    rr.add_argument("--threads", type=int)
    return p


def _subparser(parser, args):
    action = next(a for a in parser._actions if isinstance(a, argparse._SubParsersAction))
    sp = action.choices[args.command]
    if args.command == "gen":
        inner = next(a for a in sp._actions if isinstance(a, argparse._SubParsersAction))
        sp = inner.choices[args.what]
    return sp


def _read_config(path):
    cfg = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{lineno}: expected 'key = value'")
            k, v = (s.strip() for s in line.split("=", 1))
            cfg[k.replace("-", "_")] = v
    return cfg


def _apply_config(parser, args, argv):
    sp = _subparser(parser, args)
    cfg = _read_config(args.config)
    actions = {a.dest: a for a in sp._actions}
    defaults = {}
    for k, v in cfg.items():
        action = actions.get(k)
        if action is None or k in ("config", "help"):
            raise UsageError(f"unknown config key {k!r}")
        if action.nargs == 0:
            defaults[k] = v.lower() in ("1", "true", "yes", "on")
        else:
            defaults[k] = action.type(v) if action.type else v
    sp.set_defaults(**defaults)
    return parser.parse_args(argv)


_REQUIRED = {
    "gen": ["out"],
    "build": ["out", "edges"],
    "overlap": ["out"],
    "infodyn": ["out"],
    "cascade": ["out", "edges"],
    "report": ["out"],
}


def _rerun(args):
    with open(args.manifest, encoding="utf-8") as fh:
        manifest = json.load(fh)
    for path, digest in manifest.get("inputs", {}).items():
        if not os.path.exists(path) or _sha256(path) != digest:
            print(f"warning: input {path} differs from the recorded run", file=sys.stderr)
    config = dict(manifest["config"])
    config["out"] = args.out
    if args.threads is not None:
        config["threads"] = args.threads
    ns = argparse.Namespace(**config)
    ns._argv = manifest.get("argv", [])
    return _dispatch(ns)


def _dispatch(args):
    try:
        COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"interfirm: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (graph.ParseError, infodyn.InsufficientDataError, FileNotFoundError) as exc:
        print(f"interfirm: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except ValueError as exc:
        print(f"interfirm: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return 0


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = _parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if args.command == "rerun":
        return _rerun(args)
    try:
        if args.config:
            args = _apply_config(parser, args, argv)
        missing = [k for k in _REQUIRED[args.command] if not getattr(args, k, None)]
        if missing:
            raise UsageError("missing required option(s): " + ", ".join("--" + m for m in missing))
        if args.threads < 1:
            raise UsageError("--threads must be >= 1")
    except UsageError as exc:
        print(f"interfirm: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError, ValueError) as exc:
        print(f"interfirm: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    args._argv = argv
    return _dispatch(args)


if __name__ == "__main__":
    sys.exit(main())
