"""Run validate -> merge -> score over the toy fixtures and print each step's exit code.

    python scripts/toy_pipeline.py [--out DIR]
"""

import argparse
import subprocess
import sys
import tempfile
from pathlib import Path

TOY = Path(__file__).resolve().parent.parent / "tests" / "fixtures" / "toy"


def step(*argv) -> int:
    cmd = [sys.executable, "-m", "tempoeval", *map(str, argv)]
    print("$ tempoeval " + " ".join(map(str, argv)), flush=True)
    return subprocess.run(cmd).returncode


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", type=Path, help="where the merged corpus goes (default: a temporary directory)")
    args = ap.parse_args()
    out = args.out or Path(tempfile.mkdtemp(prefix="tempoeval-silver-"))

    codes = [
        step("validate", "--quiet", TOY / "TIPSem", TOY / "TIPSemB", TOY / "TRIOS", TOY / "gold"),
        step("merge", "--config", TOY / "merge_config.json", "--out", out),
        step("score", "--reference", TOY / "gold", "--response", out),
    ]
    print(f"exit codes: {codes}")
    sys.exit(max(codes))


if __name__ == "__main__":
    main()
