"""Run every CLI command on every problem file and print a verdict table.

    python3 scripts/run_examples.py [problems_dir] [--reports OUTDIR]

Commands whose required problem sections are missing show as "-".
"""

import argparse
import io
from pathlib import Path

from projfiber.cli import COMMANDS, main

VERDICT = {0: "Pass", 1: "Fail", 3: "Inconclusive"}


def run(command, path, reports):
    out = io.StringIO()
    code = main([command, str(path)], stdout=out, stderr=io.StringIO())
    if code == 2:
        return "-"
    if reports is not None:
        (reports / f"{path.stem}.{command}.json").write_text(out.getvalue())
    return VERDICT.get(code, f"exit {code}")


def main_():
    ap = argparse.ArgumentParser()
    ap.add_argument("problems", nargs="?", default=str(Path(__file__).resolve().parents[1] / "problems"))
    ap.add_argument("--reports", help="directory for the JSON reports")
    args = ap.parse_args()
    reports = None
    if args.reports:
        reports = Path(args.reports)
        reports.mkdir(parents=True, exist_ok=True)
    files = sorted(Path(args.problems).glob("*.json"))
    width = max(len(f.stem) for f in files)
    print(" " * width, *(c.ljust(17) for c in COMMANDS))
    for f in files:
        print(f.stem.ljust(width), *(run(c, f, reports).ljust(17) for c in COMMANDS))


if __name__ == "__main__":
    main_()
