"""Command-line interface: CSV ingestion, scenario runs, oracle runs, reports and plots."""
from __future__ import annotations

import argparse
import csv
import json
import sys
import time
from pathlib import Path

import numpy as np

from .core import DataError, Dataset, EstimatorConfig, prepare, standardize, validate
from .decomp import bootstrap_decompose, decompose_all, simulate_repeats
from .oracle import GmmSpec, SpecError, oracle_decompose_all
from .report import build_report, export_csv, read_report, write_report
from .scenarios import GAUSSIAN, SCENARIOS, gen_nongauss, generate

EXIT_OK, EXIT_USAGE, EXIT_DATA = 0, 1, 2


class ParseError(DataError):
    """A cell that is not a real number; ``row`` is the 1-based file line."""

    def __init__(self, row: int, col, message: str = ""):
        self.row, self.col = row, col
        super().__init__(message or f"cannot parse row {row}, column {col!r}")


class MissingColumn(DataError):
    def __init__(self, column):
        self.column = column
        super().__init__(f"class column {column!r} not found")


class UsageError(Exception):
    pass


def _resolve_column(header, class_column) -> int:
    if isinstance(class_column, str) and class_column in header:
        return header.index(class_column)
    try:
        idx = int(class_column)
    except (TypeError, ValueError):
        raise MissingColumn(class_column) from None
    if not -len(header) <= idx < len(header):
        raise MissingColumn(class_column)
    return idx % len(header)


def ingest_csv(path, class_column, header: bool = True, delimiter: str = ",") -> Dataset:
    """Read a delimited file into a :class:`Dataset`.

    ``class_column`` is a header name or a 0-based column index (negative
    counts from the end). Every other column must parse as a real number.
    Class labels are kept as text and indexed in first-appearance order.
    """
    with open(path, newline="", encoding="utf-8-sig") as fh:
        rows = list(csv.reader(fh, delimiter=delimiter))
    first = 1
    if header:
        if not rows:
            raise ParseError(1, None, "file is empty; a header row is expected")
        names = [h.strip() for h in rows[0]]
        rows = rows[1:]
        first = 2
    else:
        width = len(rows[0]) if rows else 0
        names = [str(j) for j in range(width)]
    cls = _resolve_column(names, class_column)
    feat_cols = [j for j in range(len(names)) if j != cls]
    if not header:
        feature_names = [f"X{i + 1}" for i in range(len(feat_cols))]
    else:
        feature_names = [names[j] for j in feat_cols]
    values = np.empty((len(rows), len(feat_cols)))
    labels = []
    for i, row in enumerate(rows):
        line = first + i
        if len(row) != len(names):
            raise ParseError(line, None,
                             f"row {line} has {len(row)} fields, expected {len(names)}")
        for out, j in enumerate(feat_cols):
            try:
                values[i, out] = float(row[j])
            except ValueError:
                raise ParseError(line, names[j] if header else j,
                                 f"row {line}, column {names[j] if header else j!r}: "
                                 f"not a number: {row[j]!r}") from None
        labels.append(row[cls].strip())
    if not rows:
        raise ParseError(first, None, "file has no data rows")
    return Dataset.from_arrays(values, labels, feature_names)


def write_csv(dataset: Dataset, path, class_name: str = "class") -> Path:
    """Write features (shortest round-trip repr) and text labels with a header row."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(list(dataset.feature_names) + [class_name])
        for row, y in zip(dataset.features.tolist(), dataset.labels.tolist()):
            w.writerow([repr(v) for v in row] + [dataset.class_alphabet[y]])
    return path


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: error: {message}")


def _positive(flag):
    def conv(text):
        try:
            v = int(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"{flag} expects an integer, got {text!r}") from None
        if v < 1:
            raise argparse.ArgumentTypeError(f"{flag} must be positive, got {v}")
        return v
    return conv


def _seed(text):
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"--seed expects an integer, got {text!r}") from None
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("--seed must lie in [0, 2**64)")
    return v


def _alpha(text):
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"--alpha expects a number, got {text!r}") from None
    if not 0.0 < v < 1.0:
        raise argparse.ArgumentTypeError("--alpha must lie in (0, 1)")
    return v


def _surrogates(text):
    v = _positive("--surrogates")(text)
    if v < 19:
        raise argparse.ArgumentTypeError("--surrogates must be at least 19")
    return v


def _jitter(text):
    v = float(text)
    if not 0.0 <= v < 1e-6:
        raise argparse.ArgumentTypeError("--jitter must lie in [0, 1e-6)")
    return v


def _tol(text):
    v = float(text)
    if v < 0:
        raise argparse.ArgumentTypeError("--tol must be nonnegative")
    return v


def _estimator_flags(p, seed_default=0):
    p.add_argument("--k", type=_positive("--k"), default=10, help="neighbors (default 10)")
    p.add_argument("--surrogates", type=_surrogates, default=100,
                   help="permutation surrogates per test (default 100)")
    p.add_argument("--alpha", type=_alpha, default=0.05, help="test level (default 0.05)")
    p.add_argument("--seed", type=_seed, default=seed_default)
    p.add_argument("--jitter", type=_jitter, default=1e-10,
                   help="tie-breaking noise, fraction of column SD (default 1e-10)")
    p.add_argument("--no-standardize", action="store_true",
                   help="skip the per-column z-scoring")
    p.add_argument("--threads", type=_positive("--threads"), default=1)


def _input_flags(p):
    p.add_argument("--input", required=True, help="CSV file with a header row")
    p.add_argument("--class-col", default="class",
                   help="class column name or 0-based index (default 'class')")
    p.add_argument("--no-header", action="store_true", help="the CSV has no header row")
    p.add_argument("--delimiter", default=",")


def _output_flags(p, default):
    p.add_argument("--out", default=default, help=f"report file (default {default})")
    p.add_argument("--plot", default=None,
                   help="also render figures to this path (e.g. fig.svg)")
    p.add_argument("--clip-zero", action="store_true", help="clip negative bars when plotting")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="infodecomp",
                     description="Unique/redundant/synergistic information of features "
                                 "about a class label.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("simulate", help="write a synthetic scenario to CSV")
    p.add_argument("--scenario", required=True, choices=SCENARIOS)
    p.add_argument("--samples-per-class", type=_positive("--samples-per-class"), default=1000,
                   help="rows per class (total rows for nongauss)")
    p.add_argument("--seed", type=_seed, default=0)
    p.add_argument("--out", default=None, help="CSV path (default <scenario>.csv)")
    p.add_argument("--spec-out", default=None,
                   help="also write the Gaussian-mixture spec file (Gaussian scenarios)")

    p = sub.add_parser("analyze", help="decompose every feature of a CSV dataset")
    _input_flags(p)
    _estimator_flags(p)
    _output_flags(p, "report.json")

    p = sub.add_parser("batch", help="repeat the analysis on fresh scenario datasets")
    p.add_argument("--scenario", required=True, choices=SCENARIOS)
    p.add_argument("--repeats", type=_positive("--repeats"), default=100)
    p.add_argument("--samples-per-class", type=_positive("--samples-per-class"), default=1000)
    _estimator_flags(p)
    p.add_argument("--mc-samples", type=_positive("--mc-samples"), default=10**6,
                   help="oracle Monte-Carlo samples per class (default 1e6)")
    p.add_argument("--tol", type=_tol, default=1e-3, help="oracle acceptance margin")
    p.add_argument("--no-oracle", action="store_true", help="skip the oracle overlay")
    _output_flags(p, None)

    p = sub.add_parser("bootstrap", help="class-stratified bootstrap of a CSV dataset")
    _input_flags(p)
    p.add_argument("--repeats", type=_positive("--repeats"), default=100)
    _estimator_flags(p)
    _output_flags(p, "bootstrap.json")

    p = sub.add_parser("oracle", help="Monte-Carlo ground truth for a Gaussian-mixture spec")
    p.add_argument("--spec", required=True, help="spec file, or a Gaussian scenario name")
    p.add_argument("--mc-samples", type=_positive("--mc-samples"), default=10**6)
    p.add_argument("--tol", type=_tol, default=1e-3)
    p.add_argument("--seed", type=_seed, default=0)
    _output_flags(p, "oracle.json")

    p = sub.add_parser("plot", help="render figures from a report file")
    p.add_argument("--report", required=True)
    p.add_argument("--out", default=None, help="figure path (default <report>.svg)")
    p.add_argument("--clip-zero", action="store_true")
    return parser


def _config(args, **extra) -> EstimatorConfig:
    return EstimatorConfig(k=args.k, n_surrogates=args.surrogates, alpha=args.alpha,
                           seed=args.seed, standardize=not args.no_standardize,
                           jitter_scale=args.jitter, **extra)


def _print_table(report):
    rows = report.get("features")
    if report.get("aggregate"):
        print(f"{'feature':>10} {'U':>9} {'R':>9} {'S':>9}   (mean ± SD)")
        for f in report["aggregate"]["features"]:
            print(f"{f['feature']:>10} " + " ".join(
                f"{f[c + '_mean']:>9.4f}±{f[c + '_sd']:.3f}"
                for c in ("unique", "redundant", "synergistic")))
        return
    if not rows:
        rows = report.get("oracle") or []
    print(f"{'feature':>10} {'MI':>9} {'U':>9} {'R':>9} {'S':>9}  zmin | zmax")
    for f in rows:
        print(f"{f['source']:>10} {f['mi']:>9.4f} {f['unique']:>9.4f} {f['redundant']:>9.4f} "
              f"{f['synergistic']:>9.4f}  {','.join(f['zmin']) or '-'} | "
              f"{','.join(f['zmax']) or '-'}")


def _emit(report, args):
    path = write_report(report, args.out)
    written = [path] + export_csv(report, path)
    if getattr(args, "plot", None):
        from .plotting import render_report
        written += render_report(report, args.plot, clip_zero=args.clip_zero)
    _print_table(report)
    for w in written:
        print(f"wrote {w}")
    print(f"determinism hash {report['determinism_hash']}")


def _load_input(args) -> Dataset:
    return ingest_csv(args.input, args.class_col, header=not args.no_header,
                      delimiter=args.delimiter)


def _class_counts(ds: Dataset) -> dict:
    return {lab: int(n) for lab, n in zip(ds.class_alphabet, ds.class_counts)}


def cmd_simulate(args, argv):
    ds, spec = generate(args.scenario, args.samples_per_class, args.seed)
    out = args.out or f"{args.scenario}.csv"
    print(f"wrote {write_csv(ds, out)}")
    if args.spec_out:
        if spec is None:
            raise UsageError("--spec-out: the nongauss scenario has no Gaussian-mixture spec")
        spec.save(args.spec_out)
        print(f"wrote {args.spec_out}")


def cmd_analyze(args, argv):
    cfg = _config(args)
    ds = _load_input(args)
    prepared = prepare(ds, cfg)
    results = decompose_all(prepared, cfg, threads=args.threads)
    report = build_report(
        "analyze", cfg, ds.feature_names, results=results, argv=argv, threads=args.threads,
        extra={"input": str(args.input), "class_column": str(args.class_col),
               "n_samples": ds.n_samples, "class_counts": _class_counts(ds)})
    _emit(report, args)


def _oracle_for(spec, args):
    return oracle_decompose_all(spec, tol=args.tol, n_mc=args.mc_samples, seed=args.seed)


def cmd_batch(args, argv):
    cfg = _config(args, mc_samples=args.mc_samples)
    gen = GAUSSIAN.get(args.scenario, gen_nongauss)
    agg, runs = simulate_repeats(gen, args.samples_per_class, cfg, args.repeats, args.threads)
    oracle = None
    spec = None
    if args.scenario in GAUSSIAN and not args.no_oracle:
        spec = generate(args.scenario, 1, 0)[1]
        oracle = _oracle_for(spec, args)
    extra = {"scenario": args.scenario, "samples_per_class": args.samples_per_class,
             "repeats": args.repeats}
    if oracle is not None:
        extra.update(oracle_tol=args.tol, oracle_mc_samples=args.mc_samples)
    report = build_report("batch", cfg, agg.feature_names, aggregate=agg, repeats=runs,
                          oracle=oracle, argv=argv, threads=args.threads, extra=extra)
    if args.out is None:
        args.out = f"batch_{args.scenario}.json"
    _emit(report, args)


def cmd_bootstrap(args, argv):
    cfg = _config(args)
    ds = _load_input(args)
    validate(ds, cfg)
    base = standardize(ds) if cfg.standardize else ds
    agg, runs = bootstrap_decompose(base, cfg, args.repeats, threads=args.threads)
    report = build_report(
        "bootstrap", cfg, ds.feature_names, aggregate=agg, repeats=runs, argv=argv,
        threads=args.threads,
        extra={"input": str(args.input), "class_column": str(args.class_col),
               "n_samples": ds.n_samples, "class_counts": _class_counts(ds),
               "repeats": args.repeats})
    _emit(report, args)


def cmd_oracle(args, argv):
    if args.spec in GAUSSIAN and not Path(args.spec).exists():
        spec = generate(args.spec, 1, 0)[1]
    else:
        try:
            spec = GmmSpec.load(args.spec)
        except json.JSONDecodeError as exc:
            raise SpecError(f"{args.spec}: not a valid spec document ({exc})") from None
    oracle = _oracle_for(spec, args)
    cfg = EstimatorConfig(seed=args.seed, mc_samples=args.mc_samples)
    report = build_report("oracle", cfg, spec.feature_names, oracle=oracle, argv=argv,
                          extra={"spec": spec.to_dict(), "oracle_tol": args.tol,
                                 "oracle_mc_samples": args.mc_samples})
    _emit(report, args)


def cmd_plot(args, argv):
    from .plotting import render_report
    try:
        report = read_report(args.report)
    except json.JSONDecodeError as exc:
        raise DataError(f"{args.report}: not a valid report ({exc})") from None
    out = args.out or str(Path(args.report).with_suffix(".svg"))
    for w in render_report(report, out, clip_zero=args.clip_zero):
        print(f"wrote {w}")


COMMANDS = {
    "simulate": cmd_simulate,
    "analyze": cmd_analyze,
    "batch": cmd_batch,
    "bootstrap": cmd_bootstrap,
    "oracle": cmd_oracle,
    "plot": cmd_plot,
}


def run(argv=None) -> int:
    """Parse ``argv`` and dispatch; returns 0, 1 (usage error) or 2 (data error)."""
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help
        return EXIT_OK if not exc.code else EXIT_USAGE
    start = time.perf_counter()
    try:
        COMMANDS[args.command](args, argv)
    except UsageError as exc:
        print(f"infodecomp {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, SpecError, OSError, KeyError, ValueError) as exc:
        print(f"infodecomp {args.command}: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    print(f"done in {time.perf_counter() - start:.1f} s", file=sys.stderr)
    return EXIT_OK


def main() -> None:
    sys.exit(run())
