import sys

from fairsel.cli import main

sys.exit(main())
