"""Command line: `ceitplots <figure-id> input.csv [more.csv] --out fig.png`."""

from __future__ import annotations

import argparse
import sys

from .render import FIGURE_IDS, FigureSpec, SchemaError, render


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="ceitplots",
        description="Render figures from ceitsim CSV outputs")
    parser.add_argument("figure_id", choices=FIGURE_IDS)
    parser.add_argument("inputs", nargs="+", help="input CSV file(s)")
    parser.add_argument("--out", required=True, help="output PNG path")
    args = parser.parse_args(argv)
    try:
        spec = FigureSpec(args.figure_id, tuple(args.inputs), args.out)
        render(spec)
    except SchemaError as exc:
        print(f"schema error: {exc}", file=sys.stderr)
        return 2
    print(args.out)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
