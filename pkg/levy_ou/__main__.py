import sys

from levy_ou.cli import main

sys.exit(main())
