#!/usr/bin/env python3
"""
cvqkd - CV-QKD secret key rates under three detector noise models, plus
homodyne trace analysis.
Entry point for the command-line interface.
"""

import sys

if __name__ == "__main__":
    from modules.cli import main as cli_main
    sys.exit(cli_main())
