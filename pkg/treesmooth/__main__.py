import sys

from treesmooth.cli import main

sys.exit(main())
