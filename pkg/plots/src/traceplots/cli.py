"""Flag-based entry point: traceplots --trace T.csv --kind positions_coord1 --out fig.png"""

from __future__ import annotations

import argparse
import sys

from .render import FIGURE_KINDS, PlotError, PlotSpec, render


def make_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="traceplots",
        description="Render simulation trace CSV / summary JSON files into figures.",
    )
    p.add_argument("--trace", action="append", required=True,
                   help="input trace CSV (or probe/summary JSON for gain_curve); repeatable")
    p.add_argument("--kind", required=True, choices=list(FIGURE_KINDS))
    p.add_argument("--out", required=True, help="output image path (.png, .svg, ...)")
    p.add_argument("--label", action="append", default=[], help="curve label; repeatable")
    p.add_argument("--target", default=None,
                   help="comma-separated reference position, drawn as dashed lines")
    return p


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    target = tuple(float(v) for v in args.target.split(",")) if args.target else None
    try:
        spec = PlotSpec(traces=args.trace, kind=args.kind, out=args.out,
                        labels=args.label, target=target)
        out = render(spec)
    except (PlotError, OSError) as exc:
        print(f"traceplots: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
