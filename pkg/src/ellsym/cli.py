"""Command-line entry point ``ellsym``.

Exit codes: 0 success, 1 usage or configuration error, 2 data error,
3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import logging
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .are import are_grid, published_are
from .errors import ConfigError, DataError, EllsymError, InsufficientSample, NumericalFailure
from .estimators import EstimatorChoice
from .procedures import run_test, validate_test_name
from .radial import DENSITY_SCALES
from .simulate import PRESETS, SimulationConfig, run_pitfall, run_simulation, with_overrides

log = logging.getLogger("ellsym")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERICAL = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


# ---------------------------------------------------------------------------
# data input
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Dataset:
    values: np.ndarray
    labels: tuple | None = None  # leading date/label column, if any
    columns: tuple | None = None


def _is_number(s: str) -> bool:
    try:
        float(s)
    except ValueError:
        return False
    return True


def read_data(path) -> Dataset:
    """Numeric CSV with an optional header row and an optional leading label column."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from None
    rows = [(i + 1, [c.strip() for c in rec]) for i, rec in enumerate(csv.reader(io.StringIO(text))) if any(c.strip() for c in rec)]
    if not rows:
        raise DataError(f"{path}: no data rows")
    columns = None
    if not all(_is_number(c) for c in rows[0][1][1:]) or (len(rows[0][1]) == 1 and not _is_number(rows[0][1][0])):
        columns = tuple(rows[0][1])
        rows = rows[1:]
    if not rows:
        raise DataError(f"{path}: header but no data rows")
    has_labels = not _is_number(rows[0][1][0])
    start = 1 if has_labels else 0
    width = len(rows[0][1])
    values, labels = [], []
    for lineno, rec in rows:
        if len(rec) != width:
            raise DataError(f"{path}, line {lineno}: expected {width} fields, found {len(rec)}")
        try:
            values.append([float(c) for c in rec[start:]])
        except ValueError:
            raise DataError(f"{path}, line {lineno}: non-numeric value in {rec[start:]}") from None
        if has_labels:
            labels.append(rec[0])
    x = np.asarray(values, dtype=float)
    if x.shape[1] == 0:
        raise DataError(f"{path}: no numeric columns")
    if not np.all(np.isfinite(x)):
        raise DataError(f"{path}: data contain non-finite values")
    return Dataset(x, tuple(labels) if has_labels else None, columns)


def _float_list(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise ConfigError(f"cannot parse numeric list {text!r}") from None


def _name_list(text: str) -> list[str]:
    names = [v.strip() for v in text.split(",") if v.strip()]
    if not names:
        raise ConfigError("empty list")
    return names


def _write(text: str, out) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _choice(args) -> EstimatorChoice:
    return EstimatorChoice(args.location_estimator, args.scatter_estimator)


def _run_battery(x, tests, theta0, choice, scaling):
    return [run_test(t, x, theta0, choice, reference_scaling=scaling) for t in tests]


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def cmd_test(args) -> int:
    data = read_data(args.data)
    x = data.values
    tests = _name_list(args.tests)
    for t in tests:
        validate_test_name(t, x.shape[1])
    theta0 = _float_list(args.theta0) if args.theta0 else None
    if theta0 is not None and len(theta0) != x.shape[1]:
        raise ConfigError(f"--theta0 has {len(theta0)} entries, data have {x.shape[1]} columns")
    results = _run_battery(x, tests, theta0, _choice(args), args.reference_scaling)
    rows = [r.as_row() for r in results]
    fields = list(rows[0])
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=fields, lineterminator="\n")
    w.writeheader()
    w.writerows(rows)
    if args.out:
        Path(args.out).write_text(buf.getvalue(), encoding="utf-8")
    width = max(len(r["test"]) for r in rows)
    print(f"{'test':<{width}}  {'statistic':>12}  {'df':>10}  {'p_value':>10}  estimators")
    for r in rows:
        print(f"{r['test']:<{width}}  {r['statistic']:>12.6g}  {r['df']!s:>10}  {r['p_value']:>10.4g}  {r['estimators']}")
    return EXIT_OK


def rolling_windows(n: int, window: int, step: int) -> list[tuple[int, int]]:
    """``[start, stop)`` row ranges; ``floor((n - window)/step) + 1`` of them."""
    if window < 1 or step < 1:
        raise ConfigError("window and step must be positive")
    if window > n:
        raise ConfigError(f"window {window} exceeds the {n} available rows")
    return [(s, s + window) for s in range(0, n - window + 1, step)]


def cmd_rolling(args) -> int:
    data = read_data(args.data)
    x = data.values
    tests = _name_list(args.tests)
    for t in tests:
        validate_test_name(t, x.shape[1])
    theta0 = _float_list(args.theta0) if args.theta0 else None
    choice = _choice(args)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["window_start", "window_end", "test", "p_value"])
    for start, stop in rolling_windows(x.shape[0], args.window, args.step):
        lo, hi = (data.labels[start], data.labels[stop - 1]) if data.labels else (start, stop - 1)
        for t in tests:
            try:
                res = run_test(t, x[start:stop], theta0, choice, reference_scaling=args.reference_scaling)
            except (InsufficientSample, DataError, NumericalFailure) as exc:
                log.warning("window %s-%s, %s skipped: %s", lo, hi, t, exc)
                continue
            w.writerow([lo, hi, t, repr(res.p_value)])
    _write(buf.getvalue(), args.out)
    return EXIT_OK


def cmd_are(args) -> int:
    dims = [int(v) for v in _float_list(args.d)]
    rows = are_grid(dims, _name_list(args.ref), _name_list(args.under))
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["d", "reference", "g", "are", "published", "error"])
    for r in rows:
        pub = None
        if r.reference.startswith("t") and r.g.startswith("t"):
            try:
                pub = published_are(r.d, float(r.reference[1:]), float(r.g[1:]))
            except ValueError:
                pub = None
        w.writerow([r.d, r.reference, r.g, "" if r.are is None else f"{r.are:.6f}", "" if pub is None else pub, r.error])
    _write(buf.getvalue(), args.out)
    return EXIT_OK


def cmd_simulate(args) -> int:
    if bool(args.config) == bool(args.preset):
        raise ConfigError("give exactly one of --config and --preset")
    if args.config:
        cfg = SimulationConfig.load(args.config, seed=args.seed, output=args.out, replications=args.reps, workers=args.workers)
    else:
        cfg = with_overrides(PRESETS[args.preset](), seed=args.seed, output=args.out, replications=args.reps, workers=args.workers)
    table = run_simulation(cfg)
    if not cfg.output:
        sys.stdout.write(table.to_csv())
    if table.failed_cells:
        for r in table.failed_cells:
            log.error("cell %s / %s: %s", r.alternative, r.test, r.error)
        return EXIT_NUMERICAL
    return EXIT_OK


def cmd_pitfall(args) -> int:
    report = run_pitfall(args.reps, args.seed, args.n, args.workers)
    print(report.render())
    return EXIT_NUMERICAL if report.table.failed_cells else EXIT_OK


def _add_estimator_args(p) -> None:
    p.add_argument("--location-estimator", default="mean", help="mean | spatial-median | hr")
    p.add_argument("--scatter-estimator", default="tyler", help="tyler | cov")
    p.add_argument("--reference-scaling", default="standardized", choices=DENSITY_SCALES)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="ellsym", description="Tests for elliptical symmetry.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("simulate", help="run a Monte Carlo study")
    s.add_argument("--config")
    s.add_argument("--preset", choices=sorted(PRESETS))
    s.add_argument("--seed", type=int)
    s.add_argument("--reps", type=int)
    s.add_argument("--workers", type=int)
    s.add_argument("--out")
    s.set_defaults(func=cmd_simulate)

    t = sub.add_parser("test", help="run tests on a CSV dataset")
    t.add_argument("--data", required=True)
    t.add_argument("--tests", required=True, help="comma-separated test names")
    t.add_argument("--theta0", help="comma-separated center for specified-location tests")
    t.add_argument("--out", help="also write the results as CSV")
    _add_estimator_args(t)
    t.set_defaults(func=cmd_test)

    r = sub.add_parser("rolling", help="rolling-window p-values")
    r.add_argument("--data", required=True)
    r.add_argument("--window", type=int, required=True)
    r.add_argument("--step", type=int, required=True)
    r.add_argument("--tests", required=True)
    r.add_argument("--theta0")
    r.add_argument("--out")
    _add_estimator_args(r)
    r.set_defaults(func=cmd_rolling)

    a = sub.add_parser("are", help="asymptotic relative efficiencies as CSV")
    a.add_argument("--d", required=True, help="comma-separated dimensions")
    a.add_argument("--ref", required=True, help="comma-separated reference densities")
    a.add_argument("--under", required=True, help="comma-separated underlying densities")
    a.add_argument("--out")
    a.set_defaults(func=cmd_are)

    f = sub.add_parser("pitfall", help="two-scenario mixture experiment in dimension 10")
    f.add_argument("--reps", type=int, default=500)
    f.add_argument("--seed", type=int, default=0)
    f.add_argument("--n", type=int, default=100)
    f.add_argument("--workers", type=int, default=1)
    f.set_defaults(func=cmd_pitfall)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    try:
        return args.func(args)
    except EllsymError as exc:
        print(f"ellsym: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
