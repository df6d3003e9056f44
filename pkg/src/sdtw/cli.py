"""Command-line interface: ``sdtw {sdtw,gradcheck,bench,generate,barycenter}``.

Exit codes: 0 success, 1 check failure, 2 usage or parse error.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from collections import defaultdict
from contextlib import contextmanager
from pathlib import Path

import numpy as np

from . import bench as benchmod
from .backward import value_and_grad
from .barycenter import BarycenterProblem, solve_barycenter
from .errors import SdtwError
from .forward import forward, forward_normalized
from .generate import KINDS, generate
from .gradcheck import run_gradcheck, summarize
from .io import encode_binary, format_series_text, read_manifest, read_series, write_series
from .tensor import SdtwConfig, SeriesBatch

log = logging.getLogger("sdtw")

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2
PRECISIONS = {"f32": np.float32, "f64": np.float64}


class UsageError(Exception):
    pass


def _common(p, precision="f64", output_help="output path (default: stdout)", gammas=False):
    if gammas:
        p.add_argument("--gamma", type=float, nargs="+", default=[0.1, 1.0, 10.0])
    else:
        p.add_argument("--gamma", type=float, default=1.0)
    p.add_argument("--bandwidth", type=int, default=0, help="Sakoe-Chiba band, 0 = none")
    p.add_argument("--mode", choices=("unfused", "fused"), default=None,
                   help="cost mode (default: unfused)")
    p.add_argument("--backward", choices=("log", "linear"), default="log")
    p.add_argument("--threads", type=int, default=None, help="cap on worker threads")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--precision", choices=tuple(PRECISIONS), default=precision)
    p.add_argument("--output", "-o", default=None, help=output_help)


@contextmanager
def _open_out(path):
    if path is None or path == "-":
        yield sys.stdout
    else:
        with open(path, "w", newline="") as fh:
            yield fh


def _config(args, **kw) -> SdtwConfig:
    return SdtwConfig(gamma=args.gamma, bandwidth=args.bandwidth,
                      cost_mode=args.mode or "unfused",
                      backward_space=args.backward, workers=args.threads, **kw)


# -- sdtw ---------------------------------------------------------------------

def cmd_sdtw(args) -> int:
    if args.manifest:
        pairs = read_manifest(args.manifest)
    elif len(args.inputs) == 2:
        pairs = [(Path(args.inputs[0]), Path(args.inputs[1]))]
    else:
        raise UsageError("give two series files or --manifest")
    dtype = PRECISIONS[args.precision]
    loaded = [(read_series(a).astype(dtype), read_series(b).astype(dtype)) for a, b in pairs]
    cfg = _config(args, normalized=args.normalized)

    # pairs sharing (N, M, D) go through one batched call
    groups = defaultdict(list)
    for k, (x, y) in enumerate(loaded):
        if x.shape[1] != y.shape[1]:
            raise UsageError(f"pair {k}: feature dims differ ({x.shape[1]} vs {y.shape[1]})")
        groups[(x.shape, y.shape)].append(k)
    losses = np.empty(len(loaded))
    grads = {}
    for idx in groups.values():
        xs = SeriesBatch(np.stack([loaded[k][0] for k in idx]))
        ys = SeriesBatch(np.stack([loaded[k][1] for k in idx]))
        if args.grad:
            loss, g = value_and_grad(xs, ys, cfg)
            for pos, k in enumerate(idx):
                grads[k] = (g.grad_x[pos], g.grad_y[pos])
        elif cfg.normalized:
            loss = forward_normalized(xs, ys, cfg)
        else:
            loss = forward(xs, ys, cfg)[0]
        losses[idx] = loss

    with _open_out(args.output) as fh:
        fh.write("pair_index,loss\n")
        for k, v in enumerate(losses):
            fh.write(f"{k},{float(v)!r}\n")
    if args.grad:
        out = Path(args.grad)
        out.mkdir(parents=True, exist_ok=True)
        for k, (gx, gy) in grads.items():
            (out / f"grad_x_{k:04d}.sdtw").write_bytes(encode_binary(gx))
            (out / f"grad_y_{k:04d}.sdtw").write_bytes(encode_binary(gy))
    return EXIT_OK


# -- gradcheck ----------------------------------------------------------------

def cmd_gradcheck(args) -> int:
    if args.witness:
        from .witness import run_witness
        res = run_witness(gamma=args.gamma[0], length=args.witness_length, seed=args.seed,
                          dtype=np.float32, workers=args.threads)
        print(f"witness: costs in [{res['cost_min']:.3g}, {res['cost_max']:.3g}], "
              f"gamma={args.gamma[0]}, float32")
        for space in ("log", "linear"):
            r = res[space]
            print(f"  backward={space}: non-finite E entries {r['nonfinite_e']}, "
                  f"non-finite gradient entries {r['nonfinite_grad']}")
        bad = res[args.backward]["nonfinite_grad"]
        print("FAIL" if bad else "ok", f"(backward={args.backward})")
        return EXIT_FAIL if bad else EXIT_OK

    cases = run_gradcheck(sizes=args.sizes, gammas=args.gamma, dims=args.dims,
                          modes=[args.mode] if args.mode else args.modes, backward_space=args.backward, seed=args.seed,
                          scale=args.scale, step=args.step, dtype=PRECISIONS[args.precision],
                          workers=args.threads)
    failed = [c for c in cases if not c.passed(args.tolerance)]
    with _open_out(args.output) as fh:
        for (gamma, mode), (err, nonfinite) in sorted(summarize(cases).items()):
            fh.write(f"gamma={gamma:g} mode={mode} worst_rel_err={err:.3e} "
                     f"nonfinite={nonfinite}\n")
        for c in failed:
            what = "non-finite gradient" if not c.finite else f"rel_err={c.max_rel_err:.3e}"
            fh.write(f"FAIL n={c.n} m={c.m} d={c.dim} gamma={c.gamma:g} mode={c.mode}: {what}\n")
        fh.write(f"{len(cases) - len(failed)}/{len(cases)} checks within {args.tolerance:g}\n")
    return EXIT_FAIL if failed else EXIT_OK


# -- bench --------------------------------------------------------------------

def _bench_rows(args):
    modes = args.modes or ([args.mode] if args.mode else ["unfused", "fused"])
    common = dict(gamma=args.gamma, backward_space=args.backward, repeats=args.repeats,
                  warmup=args.warmup, precision=args.precision, bandwidth=args.bandwidth)
    if args.config:
        rows = json.loads(Path(args.config).read_text())
        return [benchmod.BenchConfigRow(**{**common, **row}) for row in rows]
    if args.preset == "large":
        grid = benchmod.LARGE_GRID
        return benchmod.expand_grid(grid["batch"], grid["length"], grid["feature_dim"],
                                    modes=modes, **common)
    return benchmod.expand_grid(args.batch, args.length, args.dim, modes=modes, **common)


def cmd_bench(args) -> int:
    try:
        rows = _bench_rows(args)
    except (TypeError, ValueError) as exc:
        raise UsageError(str(exc)) from None
    results = []
    for row in rows:
        res = benchmod.run_bench_row(row, seed=args.seed, workers=args.threads,
                                     mem_limit=args.mem_limit)
        log.info("B=%d L=%d D=%d %s: %.2f ms, peak %d bytes, %s", row.batch, row.length,
                 row.feature_dim, row.cost_mode, res.mean_runtime_ms, res.peak_ledger_bytes,
                 res.status)
        results.append(res)
    with _open_out(args.output) as fh:
        benchmod.write_bench_csv(results, fh)
    return EXIT_OK


# -- generate -----------------------------------------------------------------

def cmd_generate(args) -> int:
    data = generate(args.kind, args.count, args.length, args.dim, args.noise, args.seed)
    if args.output is None:
        raise UsageError("generate needs --output DIR")
    out = Path(args.output)
    out.mkdir(parents=True, exist_ok=True)
    ext = "sdtw" if args.binary else "csv"
    for k, series in enumerate(data):
        write_series(out / f"{args.kind}_{k:03d}.{ext}", series, binary=args.binary)
    return EXIT_OK


# -- barycenter ---------------------------------------------------------------

def _collect_inputs(inputs, manifest):
    paths = []
    if manifest:
        base = Path(manifest).parent
        for line in Path(manifest).read_text().splitlines():
            line = line.strip()
            if line and not line.startswith("#"):
                paths.append(base / line)
    for item in inputs:
        p = Path(item)
        if p.is_dir():
            paths.extend(sorted(q for q in p.iterdir() if q.suffix in (".csv", ".sdtw")))
        else:
            paths.append(p)
    return paths


def cmd_barycenter(args) -> int:
    paths = _collect_inputs(args.inputs, args.manifest)
    if not paths:
        raise UsageError("no input series")
    series = [read_series(p) for p in paths]
    length = args.length or len(series[0])
    prob = BarycenterProblem(series, length, gamma=args.gamma, bandwidth=args.bandwidth,
                             cost_mode=args.mode or "unfused", workers=args.threads)
    trace = solve_barycenter(prob, args.init, init_index=args.init_index,
                             max_iters=args.iters, lr=args.lr, tol=args.tol)
    z = trace.final_z.data[0]
    if args.output:
        write_series(args.output, z, binary=args.binary)
    else:
        sys.stdout.write(format_series_text(z))
    if args.trace:
        with open(args.trace, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["iteration", "objective"])
            for it, v in enumerate(trace.objective_per_iteration):
                w.writerow([it, repr(float(v))])
    log.info("objective %.6g -> best %.6g after %d iterations%s",
             trace.objective_per_iteration[0], trace.best_objective, trace.iterations_run,
             " (converged)" if trace.converged else "")
    return EXIT_OK


# -- parser -------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sdtw", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sdtw", help="losses (and gradients) for series files")
    p.add_argument("inputs", nargs="*", help="x and y series files")
    p.add_argument("--manifest", help="file of 'x_path,y_path' lines")
    p.add_argument("--normalized", action="store_true",
                   help="sdtw(x,y) - (sdtw(x,x) + sdtw(y,y))/2; needs N == M")
    p.add_argument("--grad", metavar="DIR", help="write binary gradient files to DIR")
    _common(p, output_help="loss CSV path (default: stdout)")
    p.set_defaults(func=cmd_sdtw)

    p = sub.add_parser("gradcheck", help="finite-difference gradient check")
    p.add_argument("--sizes", type=int, nargs="+", default=list(range(1, 7)))
    p.add_argument("--dims", type=int, nargs="+", default=[1, 3])
    p.add_argument("--modes", nargs="+", choices=("unfused", "fused"),
                   default=["unfused", "fused"])
    p.add_argument("--scale", type=float, default=1.0, help="input scale")
    p.add_argument("--step", type=float, default=1e-5)
    p.add_argument("--tolerance", type=float, default=1e-5)
    p.add_argument("--witness", action="store_true",
                   help="run the long float32 overflow witness instead of the grid")
    p.add_argument("--witness-length", type=int, default=30_000)
    _common(p, output_help="report path (default: stdout)", gammas=True)
    p.set_defaults(func=cmd_gradcheck)

    p = sub.add_parser("bench", help="runtime / ledger-memory benchmark, CSV out")
    p.add_argument("--batch", type=int, nargs="+", default=[8])
    p.add_argument("--length", type=int, nargs="+", default=[128, 256, 512])
    p.add_argument("--dim", type=int, nargs="+", default=[16])
    p.add_argument("--modes", nargs="+", choices=("unfused", "fused"), default=None,
                   help="cost modes to run (default: both, or --mode)")
    p.add_argument("--repeats", type=int, default=5)
    p.add_argument("--warmup", type=int, default=1)
    p.add_argument("--mem-limit", type=int, default=None, help="ledger byte limit per run")
    p.add_argument("--preset", choices=("large",), default=None,
                   help="B in {16,32}, L in {128,512,1024,2048}, D = 64")
    p.add_argument("--config", help="JSON list of row objects (BenchConfigRow fields)")
    _common(p, precision="f32", output_help="CSV path (default: stdout)")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("generate", help="write a synthetic dataset")
    p.add_argument("--kind", choices=KINDS, default="blockwave")
    p.add_argument("--count", type=int, default=10)
    p.add_argument("--length", type=int, default=128)
    p.add_argument("--dim", type=int, default=1)
    p.add_argument("--noise", type=float, default=0.05)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--binary", action="store_true", help="SDTW binary instead of CSV")
    p.add_argument("--output", "-o", default=None, help="output directory")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("barycenter", help="Soft-DTW barycenter of a set of series")
    p.add_argument("inputs", nargs="*", help="series files or directories")
    p.add_argument("--manifest", help="file listing one series path per line")
    p.add_argument("--length", type=int, default=None, help="barycenter length")
    p.add_argument("--iters", type=int, default=200)
    p.add_argument("--lr", type=float, default=0.01)
    p.add_argument("--tol", type=float, default=1e-6)
    p.add_argument("--init", choices=("auto", "euclidean_mean", "member_copy"), default="auto")
    p.add_argument("--init-index", type=int, default=0)
    p.add_argument("--trace", help="objective trace CSV path")
    p.add_argument("--binary", action="store_true")
    _common(p, output_help="barycenter series path (default: stdout)")
    p.set_defaults(func=cmd_barycenter)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (UsageError, SdtwError, OSError, ValueError) as exc:
        print(f"sdtw {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
