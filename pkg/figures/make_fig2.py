#!/usr/bin/env python3
"""Render figure 2 from a superrad output directory."""

import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent))

from figlib import script_main

if __name__ == "__main__":
    sys.exit(script_main(2))
