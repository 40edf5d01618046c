"""Run the built-in experiment suites and print their summary tables.

Usage: python3 scripts/reproduce_tables.py [--suite NAME ...] [--jobs N] [--out DIR]
"""

import argparse
import sys
import time

from iwcsim.experiments import SUITES, run_suite, summary_table, write_suite
from iwcsim.output import default_out_dir


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--suite", action="append", choices=sorted(SUITES), help="suite to run (repeatable; default all)")
    ap.add_argument("--jobs", type=int, default=1)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out", default=None)
    args = ap.parse_args(argv)
    out = args.out or default_out_dir()
    for name in args.suite or list(SUITES):
        t0 = time.perf_counter()

        def progress(i, n, name=name):
            print(f"\r{name}: {i}/{n} runs", end="", file=sys.stderr, flush=True)

        result = run_suite(SUITES[name], jobs=args.jobs, seed=args.seed, progress=progress)
        print(file=sys.stderr)
        write_suite(result, out)
        print(f"## {name} ({time.perf_counter() - t0:.0f} s)\n")
        print(summary_table(result))
        print()
    return 0


if __name__ == "__main__":
    sys.exit(main())
