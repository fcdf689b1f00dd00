import sys

from headline_bench.cli import main

sys.exit(main())
