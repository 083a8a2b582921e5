"""Offline calibration of the seeded expert-poll file.

Only the 5-year horizon has known bar fractions (6, 4 and 1 of 11
experts).  For the remaining horizons this script searches expert counts
(out of 11) and bin representatives inside each legend interval so that
the expectation at every horizon lands on its target.  Counts must be stochastically nondecreasing from one
horizon to the next (opinions only shift toward higher likelihood bins).

Run:  python3 tools/calibrate_poll.py > /tmp/poll.json
"""

from __future__ import annotations

import itertools
import json
import sys

EXPERTS = 11
HORIZONS = (5, 10, 15, 20, 30)
TARGETS = (0.05, 0.22, 0.42, 0.63, 0.76)
LABELS = ("<0.01", "~0.05", "<0.30", "~0.50", ">0.70", ">0.95")
FIVE_YEAR = (6, 4, 1, 0, 0, 0)
FIT_TOL = 0.01

# Candidate representatives per legend interval.
REP_GRID = (
    (0.005,),
    (0.05,),
    (0.30,),
    (0.45, 0.50, 0.55),
    (0.70, 0.75, 0.80, 0.85),
    (0.95, 0.975, 0.99),
)


def compositions(total: int, parts: int):
    for cuts in itertools.combinations(range(total + parts - 1), parts - 1):
        prev = -1
        out = []
        for c in cuts:
            out.append(c - prev - 1)
            prev = c
        out.append(total + parts - 1 - prev - 1)
        yield tuple(out)


def dominates(later, earlier) -> bool:
    """Upper-tail counts of `later` are >= those of `earlier` at every cut."""
    for k in range(1, len(later)):
        if sum(later[k:]) < sum(earlier[k:]):
            return False
    return True


def shift(later, earlier) -> int:
    """Earth mover's distance between two count vectors over ordered bins."""
    moved = 0
    run = 0
    for a, b in zip(later, earlier):
        run += a - b
        moved += abs(run)
    return moved


def expectation(counts, reps) -> float:
    return sum(c / EXPERTS * r for c, r in zip(counts, reps))


def calibrate():
    comps = list(compositions(EXPERTS, len(LABELS)))
    best = None
    for reps in itertools.product(*REP_GRID):
        chain = [FIVE_YEAR]
        worst = abs(expectation(FIVE_YEAR, reps) - TARGETS[0])
        for target in TARGETS[1:]:
            prev = chain[-1]
            candidates = [c for c in comps if dominates(c, prev)]
            close = [c for c in candidates if abs(expectation(c, reps) - target) <= FIT_TOL]
            if close:
                # least opinion mass moved, penalising piled-up bars
                pick = min(close, key=lambda c: (shift(c, prev) + 2 * max(c), c))
            else:
                pick = min(candidates, key=lambda c: (abs(expectation(c, reps) - target), c))
            worst = max(worst, abs(expectation(pick, reps) - target))
            chain.append(pick)
        moved = sum(shift(b, a) for a, b in zip(chain, chain[1:]))
        key = (worst > FIT_TOL, moved, round(worst, 6), reps)
        if best is None or key < best[0]:
            best = (key, reps, chain)
    return best


def main() -> int:
    key, reps, chain = calibrate()
    worst = key[2]
    horizons = []
    for years, counts, target in zip(HORIZONS, chain, TARGETS):
        horizons.append(
            {
                "years": years,
                "bins": [
                    {"label": lab, "representative": rep, "fraction": c / EXPERTS}
                    for lab, rep, c in zip(LABELS, reps, counts)
                ],
            }
        )
        print(
            f"# {years:>2}y counts={counts} E={expectation(counts, reps):.4f} target={target}",
            file=sys.stderr,
        )
    print(f"# worst abs error {worst:.4f}", file=sys.stderr)
    json.dump({"schema": "qrisk-kb/1", "entries": horizons}, sys.stdout, indent=2)
    print()
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
