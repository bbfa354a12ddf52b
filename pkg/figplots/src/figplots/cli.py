"""Command line: figplots render --fig fig1 --in fig1.csv --out fig1.png"""

from __future__ import annotations

import argparse
import sys

from .render import FigureSpec, SchemaError, render


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="figplots", description="Render flockcert CSV outputs into figure images."
    )
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("render", help="render one CSV into a PNG or SVG image")
    p.add_argument("--fig", required=True, help="figure id: fig1..fig4 or decay")
    p.add_argument("--in", dest="input_csv", required=True, help="input CSV path")
    p.add_argument("--out", required=True, help="output image path (.png or .svg)")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    spec = FigureSpec(figure_id=args.fig, input_csv=args.input_csv, output_path=args.out)
    try:
        render(spec)
    except (SchemaError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
