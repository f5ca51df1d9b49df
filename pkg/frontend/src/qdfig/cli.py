"""qdfig render --spec fig.json --out fig.png"""

import argparse
import sys

from .render import RenderError, render
from .spec import SpecError, load_figure_spec


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="qdfig", description="Render simulator CSV output to figures."
    )
    sub = parser.add_subparsers(dest="command", required=True)
    p_render = sub.add_parser("render", help="render one figure spec")
    p_render.add_argument("--spec", required=True, help="figure spec JSON")
    p_render.add_argument(
        "--out", default=None, help="output image path (overrides the spec)"
    )
    args = parser.parse_args(argv)

    try:
        spec = load_figure_spec(args.spec)
        target = render(spec, out=args.out)
    except (SpecError, RenderError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(target)
    return 0


if __name__ == "__main__":
    sys.exit(main())
