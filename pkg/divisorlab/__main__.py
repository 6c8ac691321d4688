import sys

from .cli import run

raise SystemExit(run(sys.argv[1:]))
