"""CLI: plots --kind boxplot|scatter|trajectory --in results.csv --out fig.svg"""

from __future__ import annotations

import argparse
import sys

from .reader import CsvFormatError
from .render import KINDS, PlotJob, render


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


class _UsageError(Exception):
    pass


def cli_main(argv=None) -> int:
    parser = _Parser(prog="plots",
                     description="Render figures from bench result files")
    parser.add_argument("--kind", required=True, choices=list(KINDS))
    parser.add_argument("--in", dest="input_csv", required=True,
                        help="results or trajectory CSV")
    parser.add_argument("--out", required=True, help="output SVG or PNG")
    parser.add_argument("--title", default="")
    parser.add_argument("--log", action="store_true",
                        help="logarithmic error axes")
    try:
        args = parser.parse_args(argv)
        job = PlotJob(input_csv=args.input_csv, kind=args.kind,
                      output=args.out, title=args.title, log_scale=args.log)
        path = render(job)
        print(f"wrote {path}")
        return 0
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (CsvFormatError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(cli_main())


if __name__ == "__main__":
    main()
