"""Run the command-line interface with `python -m mixed_manna`."""

import sys

from mixed_manna.cli import main

sys.exit(main())
