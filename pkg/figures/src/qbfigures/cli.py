"""Command line for rendering figure jobs."""

from __future__ import annotations

import argparse
import sys

from . import __version__
from .jobs import JobError, load_job
from .render import render


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="figures",
        description="Render a figure from simulation CSV artifacts.",
    )
    parser.add_argument("--job", required=True, help="path to the figure job file")
    parser.add_argument("--out", help="output image path (overrides the job's)")
    parser.add_argument(
        "--dump-plotted",
        metavar="CSV",
        help="also write the exact plotted values to this CSV",
    )
    parser.add_argument("--version", action="version", version=__version__)
    args = parser.parse_args(argv)

    try:
        job = load_job(args.job)
        target = render(job, out=args.out, dump=args.dump_plotted)
    except JobError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(f"wrote {target}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
