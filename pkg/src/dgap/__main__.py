import sys

from dgap.cli import main

sys.exit(main())
