#!/usr/bin/env python3
"""Run gapcheck from a source checkout without installing it.

Examples:
    ./gapcheck.py verify --tree fixtures/lokibot/lokibot.tree.yaml \
        --gtdl fixtures/lokibot/lokibot.gtdl \
        --wiring fixtures/lokibot/lokibot.wiring.yaml
    ./gapcheck.py bench --family AndOnly --leaves 1-8 --out results.csv
"""

import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent))

from src.cli import main

if __name__ == "__main__":
    sys.exit(main())
