#!/usr/bin/env python3
"""Simple script to run the command-line application"""

import sys

from app.main import main

if __name__ == "__main__":
    sys.exit(main())
