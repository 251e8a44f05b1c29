#!/usr/bin/env python3
"""
svicert Launcher Script

This script sets up the Python path and runs the command-line tool.
Run this from the project root directory.
"""

import sys
from pathlib import Path

# Add the current directory to Python path
current_dir = Path(__file__).parent.absolute()
sys.path.insert(0, str(current_dir))

if __name__ == "__main__":
    from svicert.main import main

    sys.exit(main())
