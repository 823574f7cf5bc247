import sys

from latticemaps.cli import main

sys.exit(main())
