"""`plots render` command: regenerate figures from a rainbowbf output directory."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .figures import FIGURE_IDS, FigureSpec, render
from .schemas import SchemaError


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="plots", description="figure regeneration")
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("render", help="render figures from CSV outputs")
    p.add_argument("--in", dest="input_dir", required=True, help="rainbowbf output directory")
    p.add_argument("--out", dest="output_dir", required=True, help="image output directory")
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--all", action="store_true", help="render every figure id")
    group.add_argument("--figure", choices=FIGURE_IDS, help="render one figure id")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    indir = Path(args.input_dir)
    outdir = Path(args.output_dir)
    ids = FIGURE_IDS if args.all else (args.figure,)
    status = 0
    for figure_id in ids:
        spec = FigureSpec(figure_id, indir, outdir / f"{figure_id}.png")
        try:
            path = render(spec)
            print(f"rendered {figure_id} -> {path}")
        except SchemaError as exc:
            print(f"error: figure={figure_id} {exc}", file=sys.stderr)
            status = 2
    return status


if __name__ == "__main__":
    sys.exit(main())
