#!/usr/bin/env python
"""
Main entry point for running narx_mss as a module.
This file allows running the package with 'python -m narx_mss'.
"""
import sys

from .cli import main

if __name__ == "__main__":
    sys.exit(main())
