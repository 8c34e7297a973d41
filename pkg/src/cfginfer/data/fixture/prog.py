"""A tiny configurable program used to exercise the external runner.

Every reached block appends its name to the file in ``CFGINFER_SINK``.
Input ``two`` without ``--b`` exits with status 1 after recording coverage.
"""

import argparse
import os
import sys


def main() -> int:
    p = argparse.ArgumentParser()
    p.add_argument("--a", action="store_true")
    p.add_argument("--b", action="store_true")
    p.add_argument("--c", action="store_true")
    p.add_argument("--mode", choices=["fast", "slow", "auto"], required=True)
    p.add_argument("--input", choices=["one", "two"], required=True)
    args = p.parse_args()
    hits = ["main"]
    if args.a and args.b:
        hits.append("ab")
    if args.mode == "fast" or args.c:
        hits.append("fast_or_c")
    if args.input == "one":
        hits.append("in_one")
        if args.a and args.mode != "slow":
            hits.append("one_a")
    else:
        hits.append("in_two")
        if not args.b:
            hits.append("two_nb")
    with open(os.environ["CFGINFER_SINK"], "a", encoding="utf-8") as fh:
        fh.write("\n".join(hits) + "\n")
    return 1 if args.input == "two" and not args.b else 0


if __name__ == "__main__":
    sys.exit(main())
