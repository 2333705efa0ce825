"""Regenerate the method comparison tables for the bundled scenarios.

Usage: python3 scripts/reproduce_tables.py [--out results] [s1 s2 open]
"""
import argparse
import sys
from pathlib import Path

from bslnav.cli import cmd_compare, configure_logging


def main(argv=None):
    ap = argparse.ArgumentParser()
    ap.add_argument("scenarios", nargs="*", default=["s1", "s2", "open"])
    ap.add_argument("--out", default="results")
    args = ap.parse_args(argv)
    configure_logging()
    status = 0
    for name in args.scenarios:
        print(f"== {name}")
        code = cmd_compare(name, Path(args.out) / Path(name).stem)
        status = status or code
        print()
    return status


if __name__ == "__main__":
    sys.exit(main())
