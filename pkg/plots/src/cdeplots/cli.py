"""Standalone figure script: ``cdeplot BUNDLE KIND -o OUT.png``."""

import argparse
import sys

from .figures import FIGURE_KINDS, EmptyInputError, MissingTableError, \
    PlotSpec, render


def main(argv=None):
    parser = argparse.ArgumentParser(
        description="Render a figure from an experiment result bundle.")
    parser.add_argument("bundle", help="bundle directory written by the runner")
    parser.add_argument("kind", choices=FIGURE_KINDS)
    parser.add_argument("-o", "--out", required=True, help="output image path")
    parser.add_argument("--dpi", type=int, default=150)
    args = parser.parse_args(argv)
    spec = PlotSpec(bundle=args.bundle, kind=args.kind, out=args.out,
                    options={"dpi": args.dpi})
    try:
        out = render(spec)
    except (MissingTableError, EmptyInputError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
