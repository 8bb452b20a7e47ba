"""Shared plumbing for the experiment scripts: data loading and table printing."""

import argparse
import logging

from seaqual.dataio import read_dataset, remove_outliers
from seaqual.splits import SplitSpec
from seaqual.synth import default_config, generate_dataset


def add_data_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--input", help="dataset CSV; omit to generate the calibrated "
                                   "synthetic corpus")
    p.add_argument("--seed", type=int, default=0, help="base seed (default 0)")
    p.add_argument("--split", default="uniform:k=5,offset=4",
                   help="train/test split spec (default uniform:k=5,offset=4)")
    p.add_argument("--remove-outliers", action="store_true")
    p.add_argument("--quick", action="store_true",
                   help="small forests / few runs, for smoke-testing the script")
    p.add_argument("--verbose", action="store_true")


def load_split(args):
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.input:
        d = read_dataset(args.input)
    else:
        d = generate_dataset(default_config(seed=args.seed))
    if args.remove_outliers:
        d = remove_outliers(d)
    return SplitSpec.parse(args.split).apply(d)


def print_table(headers, rows) -> None:
    cells = [[str(h) for h in headers]] + [[str(c) for c in row] for row in rows]
    widths = [max(len(r[i]) for r in cells) for i in range(len(headers))]
    for j, row in enumerate(cells):
        print("  ".join(c.ljust(w) for c, w in zip(row, widths)).rstrip())
        if j == 0:
            print("  ".join("-" * w for w in widths))
