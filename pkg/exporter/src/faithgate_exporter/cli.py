"""Command-line entry point: score a dataset and write the prediction CSV."""

import argparse
import sys

from .export import ExportJob, export_to_file


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _parse_variants(pairs) -> dict:
    out = {}
    for item in pairs:
        name, sep, path = item.partition("=")
        if not sep or not name or not path:
            raise ValueError(f"--variant expects NAME=PATH, got {item!r}")
        if name in out:
            raise ValueError(f"duplicate variant name {name!r}")
        out[name] = path
    return out


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(
        prog="faithgate-export",
        description="Run saved models over a dataset and emit the audit prediction CSV.",
    )
    p.add_argument("--baseline", required=True, help="baseline model checkpoint (JSON)")
    p.add_argument("--variant", action="append", default=[], metavar="NAME=PATH",
                   help="compressed variant checkpoint; repeatable")
    p.add_argument("--data", required=True, help="dataset CSV to score")
    p.add_argument("--label", required=True, help="name of the 0/1 label column")
    p.add_argument("--subgroups", default="", metavar="COLS",
                   help="comma-separated demographic columns copied to the output")
    p.add_argument("--split", default="test", help="split tag for every row (val or test)")
    p.add_argument("--threshold", type=float, default=0.5,
                   help="label cutoff: probability >= threshold reads as 1 (default 0.5)")
    p.add_argument("--probs", action="store_true",
                   help="also write raw probabilities to <out>.probs.csv")
    p.add_argument("--out", required=True, help="output CSV path")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        job = ExportJob(
            baseline_path=args.baseline,
            data_path=args.data,
            label_column=args.label,
            variants=_parse_variants(args.variant),
            subgroup_columns=tuple(c.strip() for c in args.subgroups.split(",") if c.strip()),
            split_tag=args.split,
            threshold=args.threshold,
        )
        written = export_to_file(job, args.out, probabilities=args.probs)
    except (ValueError, OSError, KeyError) as exc:
        print(f"faithgate-export: {exc}", file=sys.stderr)
        return 2
    for path in written:
        print(path)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
