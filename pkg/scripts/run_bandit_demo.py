#!/usr/bin/env python3
"""Online tuning demo: trace of per-simulation cost while the arm distribution adapts.

Example:
    python scripts/run_bandit_demo.py --model ou --params lambda=1 --a 0 --b 7 \
        --x 3 --T 0.5 --N0 21 --epsilon 0.1 --M 10000 --seed 7 --out trace.csv
"""

import sys

from exitwalk.cli import main

if __name__ == "__main__":
    sys.exit(main(["bandit"] + sys.argv[1:]))
