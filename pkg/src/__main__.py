"""Entry point for running the toolkit as a module.

Usage:
    python -m src fit --problem manifest.json --lambda 0.05
    python -m src check --suite norm --trials 200 --seed 1
"""

import os
import sys

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from main import main  # noqa: E402

if __name__ == "__main__":
    sys.exit(main())
