import sys

from gaussgolf.cli import main

sys.exit(main())
