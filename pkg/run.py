#!/usr/bin/env python3
"""Entry point for the Wigner semi-spectral solver CLI."""

import sys

from wigner_solver.main import main

if __name__ == "__main__":
    sys.exit(main())
