import sys

from throwcatch.cli import main

sys.exit(main())
