"""Compare the closure engine with the brute-force interval oracle on random link sets.

    python scripts/oracle_sweep.py --cases 50000 --max-links 4 --seed 7

Prints the first few disagreements (if any) and a one-line summary; exits 1
when any case disagrees.
"""

import argparse
import random
import sys
import time

from tempoeval.bruteforce import IntervalOracle
from tempoeval.closure import closure, holds, is_consistent
from tempoeval.model import INTERVAL_RELATIONS, TemporalLink

NAMES = ("A", "B", "C", "D")


def sweep(cases: int, max_links: int, seed: int, max_point: int, show: int = 5) -> int:
    oracle = IntervalOracle(len(NAMES), max_point)
    rng = random.Random(seed)
    bad = 0
    for _ in range(cases):
        n = rng.randint(2, len(NAMES))
        triples = [(*rng.sample(range(n), 2), rng.choice(INTERVAL_RELATIONS)) for _ in range(rng.randint(0, max_links))]
        premises = [TemporalLink(f"l{k}", NAMES[i], NAMES[j], r) for k, (i, j, r) in enumerate(triples)]
        models = oracle.models(triples)
        problems = []
        if is_consistent(premises, NAMES[:n]) != (len(models) > 0):
            problems.append("consistency")
        elif len(models):
            closed = closure(premises, NAMES[:n])
            for i in range(n):
                for j in range(n):
                    for rel in INTERVAL_RELATIONS if i != j else ():
                        if holds(closed, NAMES[i], rel, NAMES[j]) != oracle.entailed(triples, i, j, rel, models):
                            problems.append(f"{NAMES[i]} {rel.value} {NAMES[j]}")
        if problems:
            bad += 1
            if bad <= show:
                stated = ", ".join(f"{NAMES[i]} {r.value} {NAMES[j]}" for i, j, r in triples)
                print(f"disagree on {{{stated}}}: {'; '.join(problems[:3])}")
    return bad


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--cases", type=int, default=10_000)
    ap.add_argument("--max-links", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--max-point", type=int, default=8, help="endpoints range over 0..max_point")
    args = ap.parse_args()
    started = time.perf_counter()
    bad = sweep(args.cases, args.max_links, args.seed, args.max_point)
    print(f"{args.cases} cases, {bad} disagreements, {time.perf_counter() - started:.1f} s")
    sys.exit(1 if bad else 0)


if __name__ == "__main__":
    main()
