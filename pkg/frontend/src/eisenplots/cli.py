"""`plots render --spec <path>` or `plots <csv> <kind> [--out FILE]`."""

from __future__ import annotations

import argparse
import sys

from .render import FigureSpec, SchemaError, render


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        if argv and argv[0] == "render":
            parser = argparse.ArgumentParser(prog="plots render")
            parser.add_argument("--spec", required=True)
            args = parser.parse_args(argv[1:])
            spec = FigureSpec.load(args.spec)
        else:
            parser = argparse.ArgumentParser(prog="plots", description=__doc__)
            parser.add_argument("csv")
            parser.add_argument("kind", choices=["decay", "trace", "counting"])
            parser.add_argument("--out", default=None)
            parser.add_argument("--manifest", default="")
            if not argv:
                parser.print_usage(sys.stderr)
                return 2
            args = parser.parse_args(argv)
            out = args.out or f"{args.kind}.png"
            spec = FigureSpec(csv=args.csv, kind=args.kind, out=out,
                              manifest=args.manifest)
        path = render(spec)
    except (SchemaError, FileNotFoundError, OSError) as exc:
        print(f"plots: {exc}", file=sys.stderr)
        return 1
    print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
