"""Entry point for ``python -m src.main`` and the ``gapcheck`` console script."""

from __future__ import annotations

import sys

from .cli import main as cli_main


def main() -> None:
    """Run the command line and exit with its status code."""
    sys.exit(cli_main())


if __name__ == "__main__":
    main()
