#!/usr/bin/env python3
"""Sweep the robot's assumed-rationality parameter and report mean regret.

Usage:
    python scripts/run_lambda_sweep.py [--lambdas 0.1,1,5,20,100] [--samples 50]
"""

import sys

from cirl.cli import main

if __name__ == "__main__":
    argv = sys.argv[1:]
    if not any(a.startswith("--lambdas") for a in argv):
        argv = ["--lambdas", "0.1,1,5,20,100", *argv]
    sys.exit(main(["experiment", "lambda-sweep", *argv]))
