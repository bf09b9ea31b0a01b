#!/usr/bin/env python
"""
Script to run the simulated-system benchmarks from the command line.

Runs every system S1-S6 with the given method, e.g.

    python scripts/run_benchmark.py meta-mss --runs 10 --progress
"""

import sys
from pathlib import Path

# Add the parent directory to sys.path to allow imports
parent_dir = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(parent_dir))

from narx_mss.cli import main
from narx_mss.systems import SYSTEMS


if __name__ == "__main__":
    print("=" * 80)
    print("NARX STRUCTURE SELECTION BENCHMARK".center(80))
    print("=" * 80)

    method = sys.argv[1] if len(sys.argv) > 1 and not sys.argv[1].startswith("-") else "meta-mss"
    options = [arg for arg in sys.argv[1:] if arg != method]
    status = 0
    for system_id in sorted(SYSTEMS):
        status = max(status, main(["benchmark", system_id, method] + options))
    sys.exit(status)
