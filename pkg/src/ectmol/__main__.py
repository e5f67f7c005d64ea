import sys

from ectmol.cli import main

sys.exit(main())
