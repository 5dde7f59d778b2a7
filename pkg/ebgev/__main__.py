import sys

from ebgev.cli import main

sys.exit(main())
