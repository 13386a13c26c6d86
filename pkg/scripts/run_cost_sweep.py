#!/usr/bin/env python3
"""Cost-vs-N profile for one exit problem (data behind the unimodal cost curve).

Example:
    python scripts/run_cost_sweep.py --model sin --a 0 --b 7 --x 3 --T 1 \
        --N0 21 --M 2000 --seed 7 --out sweep.csv
"""

import sys

from exitwalk.cli import main

if __name__ == "__main__":
    sys.exit(main(["sweep"] + sys.argv[1:]))
