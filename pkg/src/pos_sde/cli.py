"""``pos-sde`` command line entry point.

Exit codes: 0 success, 2 configuration error, 3 numeric failure.
"""

from __future__ import annotations

import argparse
import sys

from . import bench
from .errors import ConfigError, InvalidInput, NumericError
from .summary import emit_summary

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3


def _int_list(text: str) -> list[int]:
    try:
        return [int(float(v)) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _float_list(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _add_run_options(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="flat JSON file with RunConfig keys")
    p.add_argument("--preset", choices=("desk", "full"), default="desk")
    p.add_argument("--n-samples", type=_int_list, help="ensemble size(s), comma separated")
    p.add_argument("--n-steps", type=int)
    p.add_argument("--dt", type=_float_list, help="step size(s), comma separated")
    p.add_argument("--horizon", type=float, help="integration time T")
    p.add_argument("--attempts", type=int)
    p.add_argument("--runs", type=int)
    p.add_argument("--max-moment", type=int)
    p.add_argument("--method", choices=("euler", "combined", "individual"))
    p.add_argument("--noise-levels", type=_float_list, help="laser noise amplitudes b")
    p.add_argument("--budget", type=_int_list, help="plan: total sample-steps N")
    p.add_argument("--order", type=float, help="plan: truncation order p")
    p.add_argument("--trunc-const", type=float, help="plan: truncation constant c")
    p.add_argument("--sample-sigma", type=float, help="plan: sampling constant sigma")
    p.add_argument("--seed", type=int)
    p.add_argument("--workers", type=int)
    p.add_argument("--timing", action="store_true", default=None, help="add wall-clock columns")
    p.add_argument("--out", help="CSV path (default: stdout)")
    p.add_argument("--summary", action="store_true", help="print a summary table to stderr")


_OVERRIDE_KEYS = (
    "n_samples", "n_steps", "dt", "horizon", "attempts", "runs", "max_moment", "method", "noise_levels",
    "budget", "order", "trunc_const", "sample_sigma", "seed", "workers", "timing", "out",
)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pos-sde", description="Parallel optimized sampling benchmarks")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in bench.SCENARIOS:
        _add_run_options(sub.add_parser(name, help=f"run the {name} benchmark"))
    s = sub.add_parser("summary", help="summarise a benchmark CSV")
    s.add_argument("csv", help="CSV file written by a benchmark run ('-' for stdin)")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "summary":
            if args.csv == "-":
                text = sys.stdin.read()
            else:
                try:
                    with open(args.csv, encoding="utf-8") as fh:
                        text = fh.read()
                except OSError as exc:
                    raise ConfigError(f"cannot read {args.csv}: {exc.strerror}") from None
            print(emit_summary(text))
            return EXIT_OK
        file_values = bench.load_config_file(args.config) if args.config else None
        overrides = {k: getattr(args, k) for k in _OVERRIDE_KEYS}
        cfg = bench.make_config(args.command, file_values, overrides, preset=args.preset)
        table = bench.run(cfg)
        text = table.to_csv()
        if not cfg.out:
            sys.stdout.write(text)
        if args.summary:
            print(emit_summary(text), file=sys.stderr)
        return EXIT_OK
    except NumericError as exc:
        print(f"pos-sde: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except InvalidInput as exc:
        print(f"pos-sde: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
