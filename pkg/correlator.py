#!/usr/bin/env python3
# correlator.py
# Abductive, temporally constrained fault correlation over functional models
# MIT license

import sys

from correlator.cli import main

if __name__ == "__main__":
    exit_code = main()
    sys.exit(exit_code)
