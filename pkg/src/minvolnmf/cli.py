"""Command-line surface: separate, synth-demo, eval, bench, replay.

Every command writes a ``manifest.json`` (arguments, config, input hash,
output paths, wall time per phase) into its output directory; ``replay``
re-executes the command recorded in a manifest, reproducing the CSV
artifacts byte for byte for a fixed seed.  Exit codes: 0 ok, 1 usage,
2 runtime failure.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .evaluation import bss_eval, count_zero_sources, match_factors, synth_scattered_instance
from .separation import separate
from .signal_io import read_wav, write_wav
from .solvers import SolverConfig, solve
from .tf_transform import WindowSpec

_CSV_FMT = "%.17g"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _positive_int(text):
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text!r}")
    return value


def _nonneg_float(text):
    value = float(text)
    if value < 0:
        raise argparse.ArgumentTypeError(f"expected a nonnegative number, got {text!r}")
    return value


def _lambda_value(text):
    if text == "auto":
        return None
    value = float(text)
    if value <= 0:
        raise argparse.ArgumentTypeError("--lambda must be 'auto' or a positive number")
    return value


def _size_triple(text):
    try:
        f, n, k = (int(part) for part in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected F,N,K, got {text!r}")
    if min(f, n, k) < 1:
        raise argparse.ArgumentTypeError("sizes must be positive")
    return f, n, k


def _write_matrix_csv(path, matrix):
    np.savetxt(path, np.asarray(matrix, dtype=float), delimiter=",", fmt=_CSV_FMT)


def _write_trace_csv(path, trace):
    with open(path, "w", encoding="utf-8") as handle:
        handle.write("iter,total,fit,volume,gamma,backtracks\n")
        for row in trace.csv_rows():
            cells = [str(row[0])] + [_CSV_FMT % value for value in row[1:5]] + [str(row[5])]
            handle.write(",".join(cells) + "\n")


def _hash_files(paths):
    digest = hashlib.sha256()
    for path in paths:
        digest.update(Path(path).read_bytes())
    return digest.hexdigest()


def _hash_config(payload):
    return hashlib.sha256(json.dumps(payload, sort_keys=True).encode()).hexdigest()


def _write_manifest(out_dir, argv, config, input_hash, outputs, phases):
    manifest = {
        "command": ["minvolnmf"] + list(argv),
        "config": config,
        "input_hash": input_hash,
        "outputs": sorted(str(p) for p in outputs),
        "phase_seconds": phases,
        "version": __version__,
    }
    path = Path(out_dir) / "manifest.json"
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(manifest, handle, indent=2, sort_keys=True)
        handle.write("\n")
    return path


def _solver_config(args):
    return SolverConfig(
        beta=args.beta,
        rank=args.rank,
        lam=args.lam,
        delta=args.delta,
        max_iters=args.iters,
        seed=args.seed,
        variant=args.variant,
        sparse_weight=args.mu,
    )


def _config_dict(args, extra=None):
    payload = {key: value for key, value in vars(args).items() if key != "func"}
    if extra:
        payload.update(extra)
    return payload


def _cmd_separate(args, argv):
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    phases = {}

    start = time.perf_counter()
    mixture = read_wav(args.input)
    phases["read"] = time.perf_counter() - start

    window = WindowSpec(window_size=args.window, hop=args.hop)
    config = _solver_config(args)

    start = time.perf_counter()
    result = separate(mixture, window, config)
    phases["separate"] = time.perf_counter() - start

    start = time.perf_counter()
    outputs = []
    for k, source in enumerate(result.sources):
        path = out / f"source_{k}.wav"
        write_wav(path, source)
        outputs.append(path)
    _write_matrix_csv(out / "W.csv", result.factors.W)
    _write_matrix_csv(out / "H.csv", result.factors.H)
    outputs += [out / "W.csv", out / "H.csv"]
    for k, mask in enumerate(result.masks):
        path = out / f"masks_{k}.csv"
        _write_matrix_csv(path, mask)
        outputs.append(path)
    _write_trace_csv(out / "trace.csv", result.trace)
    outputs.append(out / "trace.csv")
    phases["write"] = time.perf_counter() - start

    _write_manifest(out, argv, _config_dict(args), _hash_files([args.input]), outputs, phases)
    print(json.dumps({"zeroed_sources": result.zeroed_sources}))
    return 0


def _cmd_synth_demo(args, argv):
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    phases = {}

    start = time.perf_counter()
    instance = synth_scattered_instance(args.f, args.n, args.true_rank, args.seed, args.noise)
    config = _solver_config(args)
    factors, trace = solve(instance.V, config)
    phases["solve"] = time.perf_counter() - start

    zeroed = count_zero_sources(factors.H)
    match_error = None
    if args.rank == args.true_rank:
        _, match_error = match_factors(factors.W, instance.W_true)
    else:
        active = [k for k in range(args.rank) if k not in zeroed]
        if len(active) == args.true_rank:
            W_active = factors.W[:, active]
            W_active = W_active / W_active.sum(axis=0, keepdims=True)
            _, match_error = match_factors(W_active, instance.W_true)

    report = {
        "match_error": match_error,
        "zero_sources": zeroed,
        "n_zero": len(zeroed),
        "final_objective": trace.total[-1] if trace.total else None,
    }
    config_payload = _config_dict(args)
    _write_manifest(out, argv, config_payload, _hash_config(config_payload), [], phases)
    print(json.dumps(report))
    return 0


def _cmd_eval(args, argv):
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    phases = {}

    start = time.perf_counter()
    estimates = [read_wav(path) for path in args.estimates]
    references = [read_wav(path) for path in args.references]
    phases["read"] = time.perf_counter() - start

    start = time.perf_counter()
    metrics = bss_eval(estimates, references)
    phases["eval"] = time.perf_counter() - start

    records = [
        {
            "source": i,
            "sdr_db": metrics.sdr[i],
            "sir_db": metrics.sir[i],
            "sar_db": metrics.sar[i],
            "permutation": metrics.permutation[i],
        }
        for i in range(len(metrics.permutation))
    ]
    _write_manifest(
        out, argv, _config_dict(args),
        _hash_files(list(args.estimates) + list(args.references)), [], phases,
    )
    print(json.dumps(records))
    return 0


def _cmd_bench(args, argv):
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(args.seed)
    rows = []
    start_all = time.perf_counter()
    for f, n, k in args.sizes:
        V = rng.random((f, n)) + 0.1
        for variant in ("baseline", "minvol", "sparse"):
            config = SolverConfig(
                beta=1, rank=k, lam=args.lam, max_iters=args.iters,
                seed=args.seed, variant=variant, sparse_weight=args.mu,
                objective_log=False,
            )
            times = []
            for _ in range(args.repeats):
                t0 = time.perf_counter()
                solve(V, config)
                times.append(time.perf_counter() - t0)
            rows.append(
                {
                    "F": f, "N": n, "K": k, "variant": variant,
                    "iters": args.iters,
                    "mean_seconds": float(np.mean(times)),
                    "std_seconds": float(np.std(times)),
                }
            )
            print(
                f"F={f} N={n} K={k} variant={variant:8s} "
                f"{np.mean(times):.3f} s +/- {np.std(times):.3f} s "
                f"({args.iters} iters, {args.repeats} repeats)"
            )
    phases = {"bench": time.perf_counter() - start_all}
    config_payload = _config_dict(args, extra={"sizes": [list(s) for s in args.sizes]})
    _write_manifest(out, argv, config_payload, _hash_config(config_payload), [], phases)
    return 0


def _cmd_replay(args, argv):
    with open(args.manifest, encoding="utf-8") as handle:
        manifest = json.load(handle)
    recorded = manifest.get("command", [])
    if len(recorded) < 2:
        raise ValueError("manifest does not record a replayable command")
    return main(recorded[1:])


def _build_parser():
    parser = _Parser(prog="minvolnmf", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    sep = sub.add_parser("separate", help="separate a WAV mixture into sources")
    sep.add_argument("--input", required=True)
    sep.add_argument("--rank", type=_positive_int, required=True)
    sep.add_argument("--beta", type=int, choices=(0, 1), default=1)
    sep.add_argument("--lambda", dest="lam", type=_lambda_value, default=None,
                     help="volume penalty weight, or 'auto' (default)")
    sep.add_argument("--delta", type=float, default=1.0)
    sep.add_argument("--iters", type=_positive_int, default=200)
    sep.add_argument("--seed", type=int, default=0)
    sep.add_argument("--window", type=_positive_int, default=1024)
    sep.add_argument("--hop", type=_positive_int, default=512)
    sep.add_argument("--variant", choices=("minvol", "baseline", "sparse"), default="minvol")
    sep.add_argument("--mu", type=_nonneg_float, default=0.0,
                     help="activation sparsity weight for the sparse variant")
    sep.add_argument("--out", required=True)
    sep.set_defaults(func=_cmd_separate)

    demo = sub.add_parser("synth-demo", help="recovery/zeroing demo on synthetic data")
    demo.add_argument("--f", type=_positive_int, default=40)
    demo.add_argument("--n", type=_positive_int, default=60)
    demo.add_argument("--rank", type=_positive_int, default=4)
    demo.add_argument("--true-rank", dest="true_rank", type=_positive_int, default=4)
    demo.add_argument("--seed", type=int, default=0)
    demo.add_argument("--noise", type=_nonneg_float, default=0.0)
    demo.add_argument("--variant", choices=("minvol", "baseline", "sparse"), default="minvol")
    demo.add_argument("--beta", type=int, choices=(0, 1), default=1)
    demo.add_argument("--lambda", dest="lam", type=_lambda_value, default=None)
    demo.add_argument("--delta", type=float, default=1.0)
    demo.add_argument("--iters", type=_positive_int, default=500)
    demo.add_argument("--mu", type=_nonneg_float, default=0.0)
    demo.add_argument("--out", default=".")
    demo.set_defaults(func=_cmd_synth_demo)

    ev = sub.add_parser("eval", help="SDR/SIR/SAR of estimate WAVs against references")
    ev.add_argument("--estimates", nargs="+", required=True)
    ev.add_argument("--references", nargs="+", required=True)
    ev.add_argument("--out", default=".")
    ev.set_defaults(func=_cmd_eval)

    bench = sub.add_parser("bench", help="solver wall-time comparison")
    bench.add_argument("--sizes", type=_size_triple, nargs="+", required=True,
                       metavar="F,N,K")
    bench.add_argument("--iters", type=_positive_int, default=200)
    bench.add_argument("--repeats", type=_positive_int, default=3)
    bench.add_argument("--seed", type=int, default=0)
    bench.add_argument("--lambda", dest="lam", type=_lambda_value, default=None)
    bench.add_argument("--mu", type=_nonneg_float, default=0.0)
    bench.add_argument("--out", default=".")
    bench.set_defaults(func=_cmd_bench)

    rep = sub.add_parser("replay", help="re-run the command recorded in a manifest")
    rep.add_argument("--manifest", required=True)
    rep.set_defaults(func=_cmd_replay)

    return parser


def main(argv=None):
    argv = list(sys.argv[1:]) if argv is None else list(argv)
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args, argv)
    except UsageError as exc:
        print(str(exc), file=sys.stderr)
        return 1
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
