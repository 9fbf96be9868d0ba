#!/usr/bin/env python3
"""Run the teacher-policy x feature-count factorial with default settings.

Usage:
    python scripts/run_factorial.py [--samples 100] [--workers 1] [--out results/factorial.csv]

Writes the results CSV plus .summary.json and .heatmaps.json siblings and
prints the summary document.
"""

import sys

from cirl.cli import main

if __name__ == "__main__":
    sys.exit(main(["experiment", "run", *sys.argv[1:]]))
