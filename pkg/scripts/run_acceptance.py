"""Run the acceptance suite and print one PASS/FAIL line per criterion.

    python scripts/run_acceptance.py            # all ten criteria
    python scripts/run_acceptance.py --fast     # skip the synthetic training runs (7 to 9)
"""
import argparse
import sys
from pathlib import Path

import pytest


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--fast", action="store_true")
    args = ap.parse_args()
    target = str(Path(__file__).resolve().parent.parent / "tests" / "test_acceptance.py")
    argv = [target, "-q"]
    if args.fast:
        argv += ["-k", "not end_to_end and not no_gaze_at_test_time and not determinism"]
    sys.exit(pytest.main(argv))


if __name__ == "__main__":
    main()
