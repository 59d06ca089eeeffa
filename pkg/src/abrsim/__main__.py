import sys

from abrsim.cli import main

sys.exit(main())
