"""Command line: ``tensorcp detect | simulate | bench | plot``.

Exit codes: 0 success, 2 invalid input or configuration, 3 runtime failure.
"""

from __future__ import annotations

import argparse
import json
import sys
import warnings
from dataclasses import replace
from pathlib import Path

from .confidence import brownian_argmax_quantiles, ci_for_changepoint
from .detector import PRESETS, Detection, DetectorConfig, detect
from .harness import format_table, run_experiment
from .io import FormatError, load_config, read_sequence, write_tcpd
from .mosum import SequenceTooShort
from .screening import ConfigError
from .simgen import SimSpec, gen_custom, gen_dense_order1, gen_null, gen_order2, gen_sparse_order1

SCHEMA_VERSION = 1
EXIT_OK, EXIT_INVALID, EXIT_RUNTIME = 0, 2, 3
DESIGNS = ("dense", "sparse", "order2-sym", "order2-asym", "null")
FULL_REPS = 200


class InputError(Exception):
    """Bad user input detected after argument parsing."""


class OutputError(Exception):
    """An output file could not be written."""


def _writing(path, write):
    try:
        return write()
    except OSError as exc:
        raise OutputError(f"cannot write {path}: {exc}") from exc


def _shape_arg(text: str) -> tuple[int, ...]:
    try:
        dims = tuple(int(d) for d in text.lower().replace(",", "x").split("x"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"shape must look like 12x192, got {text!r}") from None
    if not dims or min(dims) < 1:
        raise argparse.ArgumentTypeError(f"shape dims must be positive, got {text!r}")
    return dims


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("detector configuration (flags override the config file)")
    g.add_argument("--config", help="key = value config file (default: $TENSORCP_CONFIG)")
    g.add_argument("--preset", choices=sorted(PRESETS), help="named constant set")
    g.add_argument("--mode", choices=("sfd", "msfd"), help="pooled (sfd) or slice-wise (msfd) statistic")
    g.add_argument("--structural-mode", type=int, help="1-based mode sliced by msfd (default: last)")
    g.add_argument("--alpha", type=int, help="window size (default: floor(2 n^0.75 / 9))")
    g.add_argument("--tau", type=float, help="crossing threshold in (0, 1)")
    g.add_argument("--s", type=float, help="screening threshold constant")
    g.add_argument("--s1", type=float, help="ridge constant")
    g.add_argument("--nu", type=float, help="ridge growth exponent (> 1/2)")
    g.add_argument("--eps", type=float, help="exponent offset in eps_n")
    g.add_argument("--ridge-growth", choices=("log", "power"), help="ridge factor (log n)^nu or n^nu")
    g.add_argument("--sfd-pruning", choices=("probe", "spacing"), help="spurious-interval rule for sfd")


def _resolve_config(args) -> tuple[DetectorConfig, dict]:
    config, opts = load_config(args.config)
    base = config.to_dict()
    if args.preset is not None:
        preset = DetectorConfig.preset(args.preset, args.mode or base["mode"])
        base = preset.to_dict()
    flag_map = {
        "mode": args.mode,
        "structural_mode": args.structural_mode,
        "alpha": args.alpha,
        "tau": args.tau,
        "s": args.s,
        "s1": args.s1,
        "nu": args.nu,
        "eps": args.eps,
        "ridge_growth": args.ridge_growth,
        "sfd_pruning": args.sfd_pruning,
    }
    base.update({k: v for k, v in flag_map.items() if v is not None})
    return DetectorConfig(**base), dict(opts)


def _design(args, seed: int) -> SimSpec:
    if args.spec:
        spec = SimSpec.from_json(Path(args.spec).read_text())
        return replace(spec, seed=seed)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        if args.design == "dense":
            return gen_dense_order1(args.p, args.signal, seed=seed)[1]
        if args.design == "sparse":
            return gen_sparse_order1(args.p, args.signal, args.fraction, seed=seed)[1]
        if args.design == "order2-sym":
            return gen_order2(args.p, args.p, "symmetric", not args.independent_rows, seed=seed)[1]
        if args.design == "order2-asym":
            return gen_order2(args.p, 16 * args.p, "asymmetric", not args.independent_rows, seed=seed)[1]
        shape = args.shape or (args.p,)
        return gen_null(shape, seed=seed)[1]


def _add_design_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("simulation design")
    g.add_argument("--design", choices=DESIGNS, default="dense", help="built-in design (default: dense)")
    g.add_argument("--spec", help="SimSpec JSON file; overrides --design")
    g.add_argument("--p", type=int, default=50, help="vector length, or p1 for order-2 designs (default: 50)")
    g.add_argument("--signal", type=float, default=0.4, help="mean shift of order-1 designs (default: 0.4)")
    g.add_argument("--fraction", type=float, default=0.1, help="changed share for --design sparse")
    g.add_argument("--shape", type=_shape_arg, help="tensor shape for --design null, e.g. 12x192")
    g.add_argument("--independent-rows", action="store_true", help="N(0, I) rows for order-2 designs")


def _detection_payload(det: Detection, seq, cis, rate) -> dict:
    payload = {"schema_version": SCHEMA_VERSION, "n": seq.n, "shape": list(seq.shape.dims), **det.to_dict()}
    if rate:
        payload["times"] = [z / rate for z in det.locations]
    if cis is not None:
        payload["confidence_intervals"] = [ci.to_dict() for ci in cis]
    return payload


def _print_detection(det: Detection, seq, cis, rate, out) -> None:
    print(f"n = {seq.n}, shape = {seq.shape.dims}, mode = {det.config.mode.value}, "
          f"alpha = {det.alpha}, tau = {det.tau:g}", file=out)
    print(f"K_hat = {det.k_hat}", file=out)
    for k, z in enumerate(det.locations, start=1):
        line = f"  z_{k} = {z}"
        if rate:
            line += f"  (t = {z / rate:.6g})"
        if cis is not None:
            ci = cis[k - 1]
            line += f"  CI[{ci.level:g}] = [{ci.lower}, {ci.upper}]" if ci.available else "  CI unavailable"
        print(line, file=out)
    print("intervals:", file=out)
    for iv in det.intervals:
        status = f"pruned: {iv.reason}" if iv.pruned else "kept"
        edge = " (edge)" if iv.edge else ""
        print(f"  ({iv.m}, {iv.M}){edge} {status}", file=out)
    for note in det.notes:
        print(f"note: {note}", file=out)


def cmd_detect(args, out=None) -> int:
    out = out or sys.stdout
    config, opts = _resolve_config(args)
    seq = read_sequence(args.input, shape=args.shape)
    det = detect(seq, config)
    cis = None
    if args.ci:
        level = args.ci_level or opts.get("ci.level", 0.95)
        paths = args.ci_paths or opts.get("ci.paths", 100_000)
        seed = args.seed if args.seed is not None else opts.get("seed", 0)
        cis = []
        unit = brownian_argmax_quantiles(1.0, 1 - level, paths, seed=seed, workers=args.threads) if det.k_hat else None
        for k in range(1, det.k_hat + 1):
            try:
                cis.append(ci_for_changepoint(seq, det, k, level=level, paths=paths, seed=seed, quantiles=unit))
            except ValueError as exc:
                raise InputError(f"confidence interval for change {k}: {exc}") from exc
    if args.json:
        print(json.dumps(_detection_payload(det, seq, cis, args.rate)), file=out)
    else:
        _print_detection(det, seq, cis, args.rate, out)
    return EXIT_OK


def cmd_simulate(args, out=None) -> int:
    out = out or sys.stdout
    seed = args.seed if args.seed is not None else 0
    spec = _design(args, seed)
    seq = gen_custom(spec, seed=seed)
    _writing(args.out, lambda: write_tcpd(args.out, seq))
    sidecar = Path(str(args.out) + ".spec.json")
    _writing(sidecar, lambda: sidecar.write_text(spec.to_json()))
    print(f"wrote {args.out} (n = {seq.n}, shape = {seq.shape.dims}) and {sidecar}", file=out)
    return EXIT_OK


def cmd_bench(args, out=None) -> int:
    out = out or sys.stdout
    config, opts = _resolve_config(args)
    seed = args.seed if args.seed is not None else opts.get("seed", 0)
    reps = FULL_REPS if args.full else args.reps
    spec = _design(args, seed)
    report = run_experiment(spec, config, reps=reps, parallelism=args.threads, master_seed=seed)
    if args.jsonl:
        _writing(args.jsonl, lambda: Path(args.jsonl).write_text(report.to_jsonl()))
    if args.json:
        print(json.dumps({"schema_version": SCHEMA_VERSION, **report.summary()}), file=out)
    else:
        print(format_table([report]), file=out)
        if report.failures:
            print(f"{report.failures} replications failed; see the record stream", file=out)
    return EXIT_OK


def cmd_plot(args, out=None) -> int:
    out = out or sys.stdout
    from .plot import plot_detection

    config, _ = _resolve_config(args)
    seq = read_sequence(args.input, shape=args.shape)
    det = detect(seq, config)
    _writing(args.out, lambda: plot_detection(det, args.out, title=args.title))
    print(f"wrote {args.out} (K_hat = {det.k_hat})", file=out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tensorcp", description="Mean change-point detection for tensor sequences."
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("detect", help="detect change points in a TCPD or CSV file")
    p.add_argument("input", help="TCPD binary or CSV (long or wide layout)")
    p.add_argument("--shape", type=_shape_arg, help="reshape flat rows into tensors, e.g. 12x192")
    p.add_argument("--ci", action="store_true", help="add confidence intervals for each location")
    p.add_argument("--ci-level", type=float, help="confidence level (default 0.95)")
    p.add_argument("--ci-paths", type=int, help="Monte Carlo paths for the quantiles (default 100000)")
    p.add_argument("--seed", type=int, help="seed for the quantile simulation")
    p.add_argument("--rate", type=float, help="samples per time unit; adds converted times")
    p.add_argument("--threads", type=int, default=1, help="worker cap (default 1)")
    p.add_argument("--json", action="store_true", help="machine-readable output")
    _add_config_flags(p)
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("simulate", help="write a simulated sequence and its SimSpec sidecar")
    _add_design_flags(p)
    p.add_argument("--seed", type=int, help="noise seed (default 0)")
    p.add_argument("--out", required=True, help="output TCPD path; sidecar is <out>.spec.json")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("bench", help="replicate a design and report detection metrics")
    _add_design_flags(p)
    _add_config_flags(p)
    p.add_argument("--reps", type=int, default=50, help="replications (default 50)")
    p.add_argument("--full", "--paper", dest="full", action="store_true",
                   help=f"full-scale run with {FULL_REPS} replications")
    p.add_argument("--seed", type=int, help="master seed (default 0)")
    p.add_argument("--threads", type=int, default=1, help="worker processes (default 1)")
    p.add_argument("--jsonl", help="write the per-replication record stream here")
    p.add_argument("--json", action="store_true", help="machine-readable summary")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("plot", help="render T with detections to SVG")
    p.add_argument("input", help="TCPD binary or CSV")
    p.add_argument("--out", required=True, help="output SVG path")
    p.add_argument("--shape", type=_shape_arg, help="reshape flat rows into tensors")
    p.add_argument("--title", help="figure title")
    _add_config_flags(p)
    p.set_defaults(func=cmd_plot)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except OutputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except SequenceTooShort as exc:
        print(f"error: {exc} (minimum n = {exc.minimum})", file=sys.stderr)
        return EXIT_INVALID
    except (ConfigError, FormatError, InputError, FileNotFoundError, IsADirectoryError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except Exception as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
