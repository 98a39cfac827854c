"""``plotkit render --kind <k> --in <csv> --out <img>``.

Exit codes: 0 success, 2 unknown kind / bad usage, 3 malformed CSV,
4 missing input file, 1 unexpected failure.
"""

from __future__ import annotations

import argparse
import sys

from .render import KINDS, CsvShapeError, PlotSpec, render


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="plotkit",
                                     description="render ttlroute experiment CSVs")
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("render", help="render one figure from CSV input(s)")
    p.add_argument("--kind", required=True, choices=list(KINDS) + ["?"],
                   metavar="KIND", help=f"one of: {', '.join(KINDS)}")
    p.add_argument("--in", dest="inputs", action="append", required=True,
                   metavar="CSV", help="input CSV (repeat for convergence overlays)")
    p.add_argument("--out", required=True, metavar="IMG")
    p.add_argument("--label", dest="labels", action="append", default=[],
                   help="series label per --in (convergence)")
    p.add_argument("--lifetime", type=int, default=None, help="boxplot filter")
    p.add_argument("--rate", type=float, default=None, help="boxplot filter (aggregate)")
    p.add_argument("--smooth", type=int, default=1, help="convergence rolling window")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        spec = PlotSpec(kind=args.kind, inputs=args.inputs, out=args.out,
                        labels=args.labels, lifetime=args.lifetime,
                        aggregate_rate=args.rate, smooth=args.smooth)
        render(spec)
        print(f"wrote {args.out}")
        return 0
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4
    except CsvShapeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3 if "unknown figure kind" not in str(exc) else 2
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"unexpected failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
