"""Command line front end: one plot per invocation.

Exit codes: 0 on success, 2 for bad usage, unknown columns, or malformed
jobs (the schema diff goes to stderr).
"""

import argparse
import sys

from .render import KINDS, PlotError, PlotJob, render
from .schema import SchemaMismatch


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="collarplots",
        description="render collarlab sweep exports into figures",
    )
    parser.add_argument("--kind", required=True, choices=KINDS, help="plot kind")
    parser.add_argument("--csv", required=True, help="input CSV (sweep or curve table)")
    parser.add_argument("--out", required=True, help="output image (.svg or .png)")
    parser.add_argument("--summary", help="sweep summary JSON (deviation label)")
    parser.add_argument("--x-column", default="ell")
    parser.add_argument("--column", default="tension_l2", help="y column for decay plots")
    parser.add_argument(
        "--reference",
        type=float,
        help="draw a reference power law with this slope",
    )
    parser.add_argument("--no-fit", action="store_true", help="skip the fitted line")
    parser.add_argument("--title")
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        job = PlotJob(
            inputs=(args.csv,),
            kind=args.kind,
            out=args.out,
            x_column=args.x_column,
            y_column=args.column,
            reference_slope=args.reference,
            fit=not args.no_fit,
            summary=args.summary,
            title=args.title,
        )
        info = render(job)
    except (SchemaMismatch, PlotError, OSError) as exc:
        print(f"collarplots: {exc}", file=sys.stderr)
        return 2
    detail = info.annotation or info.kind
    print(f"wrote {info.out} ({detail})")
    for note in info.notes:
        print(f"note: {note}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
