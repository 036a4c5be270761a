"""Command-line entry point.

Every run writes ``result.json`` and ``manifest.json`` (plus ``trace.csv`` for
traces) to ``<out>/<command>-<timestamp>/`` and prints the result JSON.

Exit codes: 0 success, 1 domain error, 2 resource or numeric error, 64 usage.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import shlex
import sys
import time
from datetime import datetime
from pathlib import Path

import numpy as np

from . import __version__, models
from .decision import (DecisionConfig, decide_n, first_dip_times, fit_exponent,
                       ramsey_search, readout_ground_states, scan_ground_energy)
from .dynamics import ModelParams, apply_H, init_state, trace_dynamics
from .errors import NumericError, ProbeError, ResourceError
from .graphs import GraphCode, energy_h, num_pairs
from .report import figure2_traces, figure3_traces, plot_traces, traces_csv
from .spectrum import (Spectrum, build_diagonal, extract_levels, load_table, save_table)

EXIT_DOMAIN = 1
EXIT_RESOURCE = 2
EXIT_USAGE = 64

log = logging.getLogger("ramsey_probe")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def canonical_json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True)


class Run:
    """Collects artifacts for one command invocation."""

    def __init__(self, args, argv):
        self.args = args
        self.argv = list(argv)
        self.files: dict[str, str | bytes] = {}
        self.spectrum_digest = None
        self.backend = None
        self.started = time.perf_counter()
        self.out_dir = _make_out_dir(Path(args.out), args.command) if not args.no_write else None

    def add(self, name: str, content) -> Path | None:
        self.files[name] = content
        if self.out_dir is None:
            return None
        path = self.out_dir / name
        if isinstance(content, bytes):
            path.write_bytes(content)
        else:
            path.write_text(content)
        return path

    def finish(self, result: dict) -> dict:
        text = canonical_json(result)
        self.add("result.json", text + "\n")
        manifest = {
            "command": self.args.command,
            "argv": self.argv,
            "params": {k: v for k, v in vars(self.args).items()
                       if k not in ("out", "no_write", "func", "verbose")},
            "seed": getattr(self.args, "seed", None),
            "backend": self.backend,
            "version": __version__,
            "spectrum_digest": self.spectrum_digest,
            "duration_s": round(time.perf_counter() - self.started, 6),
            "result_digest": hashlib.sha256(text.encode()).hexdigest(),
        }
        self.add("manifest.json", canonical_json(manifest) + "\n")
        print(text)
        return manifest


def _make_out_dir(root: Path, command: str) -> Path:
    stamp = datetime.now().strftime("%Y%m%dT%H%M%S")
    path = root / f"{command}-{stamp}"
    k = 1
    while path.exists():
        path = root / f"{command}-{stamp}-{k}"
        k += 1
    path.mkdir(parents=True)
    return path


def _table(args):
    if getattr(args, "load", None):
        return load_table(args.load, n=args.n, x=args.x, y=args.y)
    return build_diagonal(args.n, args.x, args.y, cap=args.max_L)


def _config(args) -> DecisionConfig:
    return DecisionConfig(
        threshold=args.threshold, points=args.points, backend=args.backend,
        omega=args.omega, epsilon0=args.eps0, c=args.c, shots=args.shots, seed=args.seed,
        oracle=getattr(args, "oracle", False), cap=args.max_L,
        scan=getattr(args, "scan", "omega"), slope_window=args.slope_window)


def _grid(tmax, points):
    return np.linspace(0.0, tmax, points)


def cmd_count(args, run):
    code = GraphCode(args.code, args.n)
    ct = energy_h(code, args.x, args.y)
    return {"graph": code.to_text(), "edges": code.edge_list(), "x": args.x, "y": args.y,
            "cliques": ct.cliques, "independents": ct.independents, "energy": ct.energy}


def cmd_spectrum(args, run):
    table = _table(args)
    if args.save:
        save_table(table, args.save)
    run.spectrum_digest = table.digest()
    spec = extract_levels(table)
    result = spec.to_json()
    if args.minimizers:
        result["minimizers"] = [g.bits for g in spec.minimizers()]
    return result


def _emit_trace(run, trace, plot):
    run.add("trace.csv", trace.to_csv())
    if plot and run.out_dir is not None:
        plot_traces({trace.backend: trace}, run.out_dir / "trace.png")
    run.spectrum_digest = trace.spectrum_digest
    run.backend = trace.backend
    return trace.to_json()


def cmd_dynamics(args, run):
    params = ModelParams(args.n, args.x, args.y, args.omega, args.eps0, args.c)
    table = _table(args)
    trace = trace_dynamics(params, table, _grid(args.tmax, args.points), method=args.method,
                           tol=args.tol, shots=args.shots, seed=args.seed)
    return _emit_trace(run, trace, args.plot)


def cmd_model(args, run):
    t = _grid(args.tmax, args.points)
    if args.kind == "three-level":
        trace = models.three_level_trace(args.N, args.m1, args.Eprime, args.c, t)
    elif args.kind == "two-level":
        spec = Spectrum.synthetic([(args.Edoubleprime, args.N)])
        trace = models.multilevel_trace(spec, None, t, omega=1.0, epsilon0=-1.0, c=args.c)
        trace.meta["closed_form"] = models.nonres_probability(args.Edoubleprime, args.c, t).tolist()
    else:
        if args.n is None:
            raise UsageError("--kind arrow needs --n, --x and --y")
        params = ModelParams(args.n, args.x, args.y, args.omega, args.eps0, args.c)
        trace = models.multilevel_trace(extract_levels(_table(args)), params, t)
    return _emit_trace(run, trace, args.plot)


def cmd_decide(args, run):
    cfg = _config(args)
    d = decide_n(args.n, args.x, args.y, cfg, table=_table(args))
    run.backend = d.backend
    run.spectrum_digest = d.trace.spectrum_digest
    run.add("trace.csv", d.trace.to_csv())
    return {"x": args.x, "y": args.y, **d.record(cfg.oracle), "config": cfg.to_json()}


def cmd_scan(args, run):
    cfg = _config(args)
    table = _table(args)
    run.spectrum_digest = table.digest()
    run.backend = cfg.backend_for(args.n)
    res = scan_ground_energy(args.n, args.x, args.y, cfg, table=table)
    return {"n": args.n, "x": args.x, "y": args.y, **res.to_json()}


def cmd_ramsey(args, run):
    cfg = _config(args)
    run.backend = cfg.backend
    try:
        res = ramsey_search(args.x, args.y, cfg)
    except ResourceError as exc:
        if exc.partial is not None:
            run.add("partial.json", canonical_json(exc.partial.to_json()) + "\n")
        raise
    summary = res.summary()
    run.add("summary.txt", summary + "\n")
    print(summary, file=sys.stderr)
    return {**res.to_json(), "config": cfg.to_json()}


def cmd_readout(args, run):
    cfg = _config(args)
    table = _table(args)
    run.spectrum_digest = table.digest()
    run.backend = cfg.backend_for(args.n)
    res = readout_ground_states(args.n, args.x, args.y, args.samples, args.seed, cfg,
                                table=table)
    return res.to_json()


def cmd_bench(args, run):
    rows = []
    for L in args.L:
        n = next((k for k in range(2, 12) if num_pairs(k) == L), None)
        if n is None:
            raise UsageError(f"L={L} is not n(n-1)/2 for any n")
        params = ModelParams(n, 3, 3)
        table = build_diagonal(n, 3, 3, cap=args.max_L)
        psi = init_state(params)
        times = []
        for _ in range(args.repeat):
            t0 = time.perf_counter()
            apply_H(psi, params, table)
            times.append(time.perf_counter() - t0)
        rows.append({"L": L, "n": n, "dim": 4 * params.N,
                     "apply_H_s_median": float(np.median(times))})
    Ns = [2**6, 2**8, 2**10]
    dips = first_dip_times(Ns, c=args.c)
    return {"apply_H": rows, "first_dip": {"N": Ns, "t": dips, "alpha": fit_exponent(Ns, dips)}}


def cmd_figures(args, run):
    out = {}
    for name, traces in (("fig2", figure2_traces()), ("fig3", figure3_traces())):
        run.add(f"{name}.csv", traces_csv(traces))
        if run.out_dir is not None:
            plot_traces(traces, run.out_dir / f"{name}.png")
        out[name] = {label: {"min_p": tr.min_prob, "backend": tr.backend}
                     for label, tr in traces.items()}
    return out


def cmd_replay(args, run):
    manifest = json.loads(Path(args.manifest).read_text())
    argv = manifest["argv"] + ["--no-write"]
    buf = _capture(argv)
    digest = hashlib.sha256(buf.encode()).hexdigest()
    same = digest == manifest["result_digest"]
    return {"manifest": str(args.manifest), "replayed": shlex.join(manifest["argv"]),
            "result_digest": digest, "expected_digest": manifest["result_digest"],
            "identical": same}


def _capture(argv) -> str:
    args = build_parser().parse_args(argv)
    run = Run(args, argv)
    return canonical_json(args.func(args, run))


def _physics(p, with_shots=True):
    p.add_argument("--omega", type=float, default=1.0)
    p.add_argument("--eps0", type=float, default=-1.0)
    p.add_argument("--c", type=float, default=0.02)
    if with_shots:
        p.add_argument("--shots", type=int)
        p.add_argument("--seed", type=int)


def _problem(p, required=True):
    p.add_argument("--n", type=int, required=required)
    p.add_argument("--x", type=int, required=required)
    p.add_argument("--y", type=int, required=required)
    p.add_argument("--load", help="read the diagonal from a cache file")


def _decision(p):
    p.add_argument("--backend", choices=["auto", "full", "arrow"], default="auto")
    p.add_argument("--threshold", type=float, default=0.5)
    p.add_argument("--points", type=int, default=400)
    p.add_argument("--slope-window", type=float)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="ramsey-probe", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    common = _Parser(add_help=False)
    common.add_argument("--out", default="out", help="output root directory")
    common.add_argument("--no-write", action="store_true", help="print only, write no files")
    common.add_argument("--max-L", type=int, help="override the register-width cap")
    common.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("count", parents=[common], help="clique/independent-set counts of one graph")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--code", type=int, required=True)
    p.add_argument("--x", type=int, default=3)
    p.add_argument("--y", type=int, default=3)
    p.set_defaults(func=cmd_count)

    p = sub.add_parser("spectrum", parents=[common], help="level structure of H_P")
    _problem(p)
    p.add_argument("--save", help="write the diagonal to a cache file")
    p.add_argument("--minimizers", action="store_true")
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("dynamics", parents=[common], help="full-space probe trace")
    _problem(p)
    _physics(p)
    p.add_argument("--tmax", type=float, required=True)
    p.add_argument("--points", type=int, required=True)
    p.add_argument("--method", choices=["krylov", "trotter"], default="krylov")
    p.add_argument("--tol", type=float, default=1e-8)
    p.add_argument("--plot", action="store_true", help="also render trace.png")
    p.set_defaults(func=cmd_dynamics)

    p = sub.add_parser("model", parents=[common], help="reduced-model trace")
    p.add_argument("--kind", choices=["three-level", "two-level", "arrow"], required=True)
    _problem(p, required=False)
    _physics(p, with_shots=False)
    p.add_argument("--N", type=int, default=2**10)
    p.add_argument("--m1", type=int, default=1)
    p.add_argument("--Eprime", type=float, default=1.0)
    p.add_argument("--Edoubleprime", type=float, default=1.0)
    p.add_argument("--tmax", type=float, default=3000.0)
    p.add_argument("--points", type=int, default=3001)
    p.add_argument("--plot", action="store_true")
    p.set_defaults(func=cmd_model)

    for name, func, help_ in (("decide", cmd_decide, "probe verdict for one n"),
                              ("scan", cmd_scan, "ground energy by frequency sweep"),
                              ("readout", cmd_readout, "sample ground-state graphs")):
        p = sub.add_parser(name, parents=[common], help=help_)
        _problem(p)
        _physics(p)
        _decision(p)
        p.add_argument("--oracle", action="store_true")
        if name == "scan":
            p.add_argument("--scan", choices=["omega", "epsilon0"], default="omega")
        if name == "readout":
            p.add_argument("--samples", type=int, required=True)
        p.set_defaults(func=func)
    # readout's --seed is required for a reproducible histogram
    sub.choices["readout"].set_defaults(seed=0)

    p = sub.add_parser("ramsey", parents=[common], help="incremental search for R(x,y)")
    p.add_argument("--x", type=int, required=True)
    p.add_argument("--y", type=int, required=True)
    _physics(p)
    _decision(p)
    p.add_argument("--oracle", action="store_true")
    p.set_defaults(func=cmd_ramsey)

    p = sub.add_parser("bench", parents=[common], help="matvec timing and scaling fit")
    p.add_argument("--L", type=int, nargs="+", default=[6, 10, 15])
    p.add_argument("--repeat", type=int, default=5)
    p.add_argument("--c", type=float, default=0.02)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("figures", parents=[common], help="render the reference figures")
    p.set_defaults(func=cmd_figures)

    p = sub.add_parser("replay", parents=[common], help="re-run a manifest and compare results")
    p.add_argument("manifest")
    p.set_defaults(func=cmd_replay)
    return parser


def run(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"ramsey-probe: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        r = Run(args, argv)
        result = args.func(args, r)
        r.finish(result)
        if args.command == "replay" and not result["identical"]:
            return EXIT_DOMAIN
    except UsageError as exc:
        print(f"ramsey-probe: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ResourceError, NumericError) as exc:
        print(f"ramsey-probe: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except ProbeError as exc:
        print(f"ramsey-probe: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    return 0


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
