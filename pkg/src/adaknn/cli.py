"""Command-line front end: rates, tune, sweep, fit, plot, table.

All experiment subcommands read one JSON config file (see README for the
schema).  Exit codes: 0 on success, 2 for bad flags or malformed configs,
1 for runtime failures; errors print a one-line diagnostic to stderr.
"""

from __future__ import annotations

import argparse
import json
import sys

from .harness import (
    ConfigError,
    ExperimentConfig,
    emit_csv,
    fit_rate,
    group_rows,
    read_csv,
    sweep,
    tune,
)
from .plotting import emit_svg
from .theory import (
    EXPERIMENT_MARGIN,
    Rate,
    classification_rate_adaptive,
    classification_rate_minimax,
    classification_rate_standard,
    feature_tail_exponent,
    optimal_growth,
    regression_rate_adaptive,
    regression_rate_minimax,
    regression_rate_standard,
)
from .worlds import EtaFunc, FeatureDist, WorldSpec

__all__ = [
    "main",
    "classification_suite",
    "regression_suite",
    "theory_rates_for",
]


# ---------------------------------------------------------------------------
# benchmark suites (the worlds whose rate columns the `table` command prints)


def classification_suite() -> list[WorldSpec]:
    return [
        WorldSpec(FeatureDist.laplace(1), EtaFunc("cos5x"), "classification"),
        WorldSpec(FeatureDist.student_t(5, 1), EtaFunc("cos5x"), "classification"),
        WorldSpec(FeatureDist.student_t(2, 1), EtaFunc("cos5x"), "classification"),
        WorldSpec(FeatureDist.laplace(1), EtaFunc("piecewise_periodic"), "classification"),
        WorldSpec(FeatureDist.gaussian(2), EtaFunc("cos2sum"), "classification"),
        WorldSpec(FeatureDist.gaussian(2), EtaFunc("cos2first"), "classification"),
    ]


def regression_suite() -> list[WorldSpec]:
    return [
        WorldSpec(FeatureDist.laplace(1), EtaFunc("sinx"), "regression"),
        WorldSpec(FeatureDist.laplace(1), EtaFunc("identity"), "regression"),
        WorldSpec(FeatureDist.student_t(2, 1), EtaFunc("sinx"), "regression"),
        WorldSpec(FeatureDist.cauchy(1), EtaFunc("sinx"), "regression"),
        WorldSpec(FeatureDist.laplace(2), EtaFunc("identity"), "regression"),
        WorldSpec(FeatureDist.laplace(3), EtaFunc("identity"), "regression"),
    ]


def theory_rates_for(world: WorldSpec) -> tuple[Rate, Rate]:
    """(standard, adaptive-at-optimal-growth) theoretical rates of a world."""
    dim = world.dim
    if world.task == "classification":
        tail = feature_tail_exponent(world.features.kind, nu=world.features.nu)
        return (
            classification_rate_standard(EXPERIMENT_MARGIN, tail, dim),
            classification_rate_adaptive(EXPERIMENT_MARGIN, tail, dim),
        )
    strong = not world.eta.bounded
    tail = feature_tail_exponent(world.features.kind, nu=world.features.nu, strong=strong)
    if tail is None:
        raise ValueError(f"no tail exponent for unbounded targets on {world.features.name}")
    return (
        regression_rate_standard(tail, dim),
        regression_rate_adaptive(tail, dim),
    )


# ---------------------------------------------------------------------------
# subcommands


def _load_config(path: str) -> ExperimentConfig:
    try:
        with open(path) as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON in {path}: {exc}") from exc
    return ExperimentConfig.from_dict(data)


def _fmt_rate(rate: Rate) -> str:
    note = " (up to log factors)" if rate.log_factor else ""
    return f"{rate.exponent:.4f}{note}"


def _cmd_rates(args) -> int:
    margin, tail, dim = args.alpha, args.beta, args.d
    growth = args.q
    q_used = growth if growth is not None else optimal_growth(dim)
    print(f"alpha={margin:g} beta={tail:g} d={dim} q={q_used:g}")
    print(f"classification standard  {_fmt_rate(classification_rate_standard(margin, tail, dim))}")
    print(
        "classification adaptive  "
        f"{_fmt_rate(classification_rate_adaptive(margin, tail, dim, growth=growth))}"
    )
    try:
        print(f"classification minimax   {_fmt_rate(classification_rate_minimax(margin, tail, dim))}")
    except ValueError as exc:
        print(f"classification minimax   n/a ({exc})")
    print(f"regression standard      {_fmt_rate(regression_rate_standard(tail, dim))}")
    print(
        "regression adaptive      "
        f"{_fmt_rate(regression_rate_adaptive(tail, dim, growth=growth))}"
    )
    print(f"regression minimax       {_fmt_rate(regression_rate_minimax(tail, dim))}")
    return 0


def _cmd_tune(args) -> int:
    config = _load_config(args.config)
    best = tune(config)
    if config.method == "standard":
        print(f"k = {best}")
    else:
        print(f"K = {best:g}")
    return 0


def _cmd_sweep(args) -> int:
    config = _load_config(args.config)
    result = sweep(config, workers=args.workers)
    emit_csv(result, args.out)
    if args.svg:
        emit_svg([result], args.svg)
    parts = [f"{result.method} on {result.world_name}"]
    if result.tuned_param is not None:
        parts.append(f"tuned={result.tuned_param:g}")
    if result.rate is not None:
        parts.append(f"rate={result.rate:.4f} (stderr {result.slope_stderr:.4f})")
    else:
        parts.append("rate=n/a")
    print(", ".join(parts))
    return 0


def _cmd_fit(args) -> int:
    rows = read_csv(args.csv)
    failures = 0
    for (method, world), group in group_rows(rows).items():
        positive = [(r.N, r.mean_excess) for r in group if r.mean_excess > 0]
        try:
            slope, stderr, intercept = fit_rate(positive)
        except ValueError as exc:
            print(f"{method} {world}: {exc}", file=sys.stderr)
            failures += 1
            continue
        print(
            f"{method} {world}: rate {-slope:.4f} "
            f"(stderr {stderr:.4f}, intercept {intercept:.4f})"
        )
    return 1 if failures else 0


def _cmd_plot(args) -> int:
    rows = []
    for path in args.csv:
        rows.extend(read_csv(path))
    emit_svg(rows, args.out)
    print(f"wrote {args.out}")
    return 0


def _cmd_table(args) -> int:
    suite = classification_suite() if args.suite == "classification" else regression_suite()
    empirical: dict = {}
    for path in args.csv:
        for (method, world), group in group_rows(read_csv(path)).items():
            positive = [(r.N, r.mean_excess) for r in group if r.mean_excess > 0]
            if len(positive) >= 3:
                slope, _, _ = fit_rate(positive)
                empirical[(method, world)] = -slope

    def cell(method: str, world: WorldSpec, theory: Rate) -> str:
        emp = empirical.get((method, world.name))
        emp_txt = f"{emp:.2f}" if emp is not None else "-"
        return f"{emp_txt}/{theory.exponent:.2f}"

    name_width = max(len(w.name) for w in suite)
    print(f"{'world':<{name_width}}  {'standard':>12}  {'adaptive':>12}")
    print(f"{'':<{name_width}}  {'emp/theory':>12}  {'emp/theory':>12}")
    for world in suite:
        std, ada = theory_rates_for(world)
        print(
            f"{world.name:<{name_width}}  {cell('standard', world, std):>12}  "
            f"{cell('adaptive', world, ada):>12}"
        )
    return 0


# ---------------------------------------------------------------------------
# parser


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="adaknn",
        description="Adaptive nearest-neighbor rate experiments.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("rates", help="print theoretical rate exponents")
    p.add_argument("--alpha", type=float, required=True, help="margin exponent")
    p.add_argument("--beta", type=float, required=True, help="tail exponent (inf allowed)")
    p.add_argument("--d", type=int, required=True, help="feature dimension")
    p.add_argument("--q", type=float, default=None, help="growth exponent (default: optimal)")
    p.set_defaults(func=_cmd_rates)

    p = sub.add_parser("tune", help="grid-search k or K at the anchor size")
    p.add_argument("--config", required=True, help="JSON experiment config")
    p.set_defaults(func=_cmd_tune)

    p = sub.add_parser("sweep", help="run an N-sweep and write CSV")
    p.add_argument("--config", required=True, help="JSON experiment config")
    p.add_argument("--out", required=True, help="output CSV path")
    p.add_argument("--svg", default=None, help="also plot to this SVG path")
    p.add_argument("--workers", type=int, default=1, help="parallel trial processes")
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("fit", help="fit empirical rates from a sweep CSV")
    p.add_argument("csv", help="CSV produced by `sweep`")
    p.set_defaults(func=_cmd_fit)

    p = sub.add_parser("plot", help="plot one or more sweep CSVs to SVG")
    p.add_argument("csv", nargs="+", help="CSV files produced by `sweep`")
    p.add_argument("-o", "--out", required=True, help="output SVG path")
    p.set_defaults(func=_cmd_plot)

    p = sub.add_parser("table", help="print the benchmark rate table")
    p.add_argument(
        "--suite", choices=("classification", "regression"), required=True
    )
    p.add_argument("csv", nargs="*", help="optional sweep CSVs for empirical columns")
    p.set_defaults(func=_cmd_table)

    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # runtime failure: one-line diagnostic, not a traceback
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
